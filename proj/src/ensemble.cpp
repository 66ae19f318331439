#include "reformguard/ensemble.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <stdexcept>

namespace reformguard {

VoteResult vote(std::span<const ModuleVerdict> verdicts, std::span<const Task> tiebreak_order) {
  if (verdicts.empty()) throw std::invalid_argument("vote needs at least one verdict");
  std::set<Task> seen;
  std::map<ClassId, int> counts;
  for (const auto& v : verdicts) {
    if (!seen.insert(v.task).second) {
      throw std::invalid_argument("more than one verdict for task " +
                                  std::string(to_string(v.task)));
    }
    ++counts[v.label];
  }

  int best = 0;
  for (const auto& [label, n] : counts) best = std::max(best, n);
  std::set<ClassId> leaders;
  for (const auto& [label, n] : counts) {
    if (n == best) leaders.insert(label);
  }

  VoteResult result;
  result.verdicts.assign(verdicts.begin(), verdicts.end());
  if (leaders.size() == 1) {
    result.final_label = *leaders.begin();
    return result;
  }

  result.tie = true;
  for (Task task : tiebreak_order) {
    const auto it = std::find_if(verdicts.begin(), verdicts.end(),
                                 [&](const ModuleVerdict& v) { return v.task == task; });
    if (it != verdicts.end() && leaders.contains(it->label)) {
      result.final_label = it->label;
      result.tiebreak_applied = task;
      return result;
    }
  }
  throw std::invalid_argument("tiebreak order does not cover the tied verdicts");
}

void DefensePolicy::validate() const {
  const std::set<Task> enabled(enabled_tasks.begin(), enabled_tasks.end());
  if (enabled.size() != enabled_tasks.size()) {
    throw std::invalid_argument("enabled tasks contain duplicates");
  }
  const std::set<Task> order(tiebreak_order.begin(), tiebreak_order.end());
  if (order != enabled || tiebreak_order.size() != enabled_tasks.size()) {
    throw std::invalid_argument("tiebreak order must be a permutation of the enabled tasks");
  }
}

std::vector<VoteResult> defend_batch(std::span<const std::string> texts,
                                     const Reformulator& engine, ClassifierOracle& oracle,
                                     const DefensePolicy& policy) {
  policy.validate();
  if (texts.empty()) return {};

  if (policy.enabled_tasks.empty()) {
    auto predictions = oracle.classify(texts);
    if (predictions.size() != texts.size()) throw ClassifierError("classifier result count");
    std::vector<VoteResult> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) out[i].final_label = predictions[i].label;
    return out;
  }

  std::vector<std::future<ReformOutcome>> pending;
  for (Task task : policy.enabled_tasks) {
    pending.push_back(std::async(std::launch::async, [&engine, task, texts] {
      try {
        return engine.run(task, texts);
      } catch (const ReformulationError& e) {
        return e.outcome();
      }
    }));
  }
  std::vector<ReformOutcome> outcomes;
  for (auto& f : pending) outcomes.push_back(f.get());

  for (const auto& outcome : outcomes) {
    if (!policy.fail_open && outcome.failure_count() > 0) throw ReformulationError(outcome);
  }

  // Task-major order: all texts for the first task, then the second, ...
  std::vector<std::string> batch;
  batch.reserve(outcomes.size() * texts.size());
  for (const auto& outcome : outcomes) {
    batch.insert(batch.end(), outcome.outputs.begin(), outcome.outputs.end());
  }
  auto predictions = oracle.classify(batch);
  if (predictions.size() != batch.size()) throw ClassifierError("classifier result count");

  std::vector<VoteResult> results;
  results.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::vector<ModuleVerdict> verdicts;
    for (std::size_t t = 0; t < outcomes.size(); ++t) {
      auto& p = predictions[t * texts.size() + i];
      verdicts.push_back({outcomes[t].task, outcomes[t].outputs[i], p.label, std::move(p.scores),
                          outcomes[t].per_item_errors[i].has_value()});
    }
    results.push_back(vote(verdicts, policy.tiebreak_order));
  }
  return results;
}

VoteResult defend_classify(const Sample& sample, const Reformulator& engine,
                           ClassifierOracle& oracle, const DefensePolicy& policy) {
  const std::vector<std::string> texts{sample.text};
  return defend_batch(texts, engine, oracle, policy).front();
}

}  // namespace reformguard
