#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reformguard/corpus.hpp"
#include "reformguard/oracle.hpp"
#include "reformguard/reformulate.hpp"

namespace reformguard {

/// Summarization first: it is the strongest single module.
inline const std::vector<Task>& default_tiebreak_order() {
  static const std::vector<Task> order{Task::summarize, Task::paraphrase, Task::back_translate};
  return order;
}

struct ModuleVerdict {
  Task task = Task::paraphrase;
  std::string reformulated_text;
  ClassId label = 0;
  std::vector<double> score;
  /// Set when reformulation failed and the original text was classified.
  bool passthrough = false;
};

struct VoteResult {
  ClassId final_label = 0;
  std::vector<ModuleVerdict> verdicts;
  bool tie = false;
  std::optional<Task> tiebreak_applied;
};

/// Plurality vote. Ties go to the first task in `tiebreak_order` whose label
/// is among the tied ones.
VoteResult vote(std::span<const ModuleVerdict> verdicts,
                std::span<const Task> tiebreak_order = default_tiebreak_order());

struct DefensePolicy {
  std::vector<Task> enabled_tasks = all_tasks();
  std::vector<Task> tiebreak_order = default_tiebreak_order();
  bool fail_open = true;

  /// Enabled tasks must be distinct and tiebreak_order a permutation of them.
  void validate() const;
};

/// Reformulates every text with each enabled task (tasks run concurrently),
/// classifies the reformulations and votes per text. With no enabled task
/// the original texts are classified directly.
std::vector<VoteResult> defend_batch(std::span<const std::string> texts,
                                     const Reformulator& engine, ClassifierOracle& oracle,
                                     const DefensePolicy& policy);

VoteResult defend_classify(const Sample& sample, const Reformulator& engine,
                           ClassifierOracle& oracle, const DefensePolicy& policy);

}  // namespace reformguard
