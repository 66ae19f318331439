#include "reformguard/types.hpp"

#include <array>
#include <utility>

namespace reformguard {
namespace {

constexpr std::array<std::pair<Task, std::string_view>, 3> kTaskNames{{
    {Task::paraphrase, "paraphrase"},
    {Task::summarize, "summarize"},
    {Task::back_translate, "back_translate"},
}};

constexpr std::array<std::pair<AttackTag, std::string_view>, 9> kTagNames{{
    {AttackTag::clean, "clean"},
    {AttackTag::badnets, "badnets"},
    {AttackTag::addsent, "addsent"},
    {AttackTag::stylebkd, "stylebkd"},
    {AttackTag::synbkd, "synbkd"},
    {AttackTag::deepwordbug_like, "deepwordbug_like"},
    {AttackTag::pwws_like, "pwws_like"},
    {AttackTag::textbugger_like, "textbugger_like"},
    {AttackTag::textfooler_like, "textfooler_like"},
}};

}  // namespace

std::string_view to_string(Task task) {
  for (const auto& [value, name] : kTaskNames) {
    if (value == task) return name;
  }
  return "unknown";
}

std::string_view to_string(AttackTag tag) {
  for (const auto& [value, name] : kTagNames) {
    if (value == tag) return name;
  }
  return "unknown";
}

Task parse_task(std::string_view name) {
  for (const auto& [value, candidate] : kTaskNames) {
    if (candidate == name) return value;
  }
  throw std::invalid_argument("unknown task: " + std::string(name));
}

AttackTag parse_attack_tag(std::string_view name) {
  for (const auto& [value, candidate] : kTagNames) {
    if (candidate == name) return value;
  }
  throw std::invalid_argument("unknown attack tag: " + std::string(name));
}

bool is_backdoor(AttackTag tag) {
  return tag == AttackTag::badnets || tag == AttackTag::addsent ||
         tag == AttackTag::stylebkd || tag == AttackTag::synbkd;
}

}  // namespace reformguard
