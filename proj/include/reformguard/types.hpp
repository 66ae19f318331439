#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reformguard {

using ClassId = int;

/// All randomized operations take a caller-owned engine; nothing is global.
using Rng = std::mt19937_64;

enum class Task { paraphrase, summarize, back_translate };

enum class AttackTag {
  clean,
  badnets,
  addsent,
  stylebkd,
  synbkd,
  deepwordbug_like,
  pwws_like,
  textbugger_like,
  textfooler_like,
};

std::string_view to_string(Task task);
std::string_view to_string(AttackTag tag);

// Throw std::invalid_argument on unknown names.
Task parse_task(std::string_view name);
AttackTag parse_attack_tag(std::string_view name);

/// True for the tags produced by training-time trigger attacks.
bool is_backdoor(AttackTag tag);

inline const std::vector<Task>& all_tasks() {
  static const std::vector<Task> tasks{Task::paraphrase, Task::summarize,
                                       Task::back_translate};
  return tasks;
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace reformguard
