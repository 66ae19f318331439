// Acceptance gate: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "oracles.hpp"
#include "reformguard/attacksim.hpp"
#include "reformguard/distill.hpp"
#include "reformguard/ensemble.hpp"
#include "reformguard/gateway.hpp"
#include "reformguard/metrics.hpp"
#include "reformguard/mocks.hpp"
#include "reformguard/reformulate.hpp"
#include "support.hpp"
#include "comparison_fixture.hpp"

using namespace reformguard;
namespace oracle = reformguard::testing::oracle;
using Clock = std::chrono::steady_clock;

namespace {

/// Collects the reasons a criterion failed.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++failed;
  }
  std::size_t failed = 0;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

distill::Sequence random_logits(std::mt19937_64& rng, std::size_t n, std::size_t v) {
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  distill::Sequence out(n, distill::Vector(v));
  for (auto& row : out) {
    for (auto& x : row) x = dist(rng);
  }
  return out;
}

void loss_oracle(Check& c) {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t v = 2 + rng() % 7;
    const std::size_t n = 1 + rng() % 6;
    const double t = std::uniform_real_distribution<double>(0.5, 4.0)(rng);
    const auto teacher = random_logits(rng, n, v);
    const auto student = random_logits(rng, n, v);

    distill::Sequence probs;
    std::vector<std::size_t> targets;
    for (const auto& row : student) {
      probs.push_back(distill::temperature_softmax(row, 1.0));
      targets.push_back(rng() % v);
      const auto plain = oracle::naive_softmax(row);
      for (std::size_t k = 0; k < v; ++k) {
        c.expect(std::abs(probs.back()[k] - plain[k]) <= 1e-12, "softmax at T=1");
      }
    }
    const double hard = distill::hard_label_loss(probs, targets);
    c.expect(std::abs(hard - oracle::hard_loss(probs, targets)) <= 1e-9, "hard_label_loss");
    const double soft = distill::soft_label_loss(teacher, student, t);
    c.expect(std::abs(soft - oracle::soft_loss(teacher, student, t)) <= 1e-9, "soft_label_loss");
    c.expect(distill::combined_loss(soft, hard, 1.0) == soft, "combined_loss alpha=1");
    c.expect(distill::combined_loss(soft, hard, 0.0) == hard, "combined_loss alpha=0");
  }
}

void worked_example(Check& c) {
  const distill::Sequence teacher{{std::log(4.0), 0.0}};
  const distill::Sequence student{{0.0, 0.0}};
  const double at1 = distill::soft_label_loss(teacher, student, 1.0);
  c.expect(std::abs(at1 - 0.19274) <= 1e-4, "T=1 value " + std::to_string(at1));
  const double softened_kl =
      oracle::kl(oracle::naive_softmax(teacher[0], 2.0), oracle::naive_softmax(student[0], 2.0));
  const double at2 = distill::soft_label_loss(teacher, student, 2.0);
  c.expect(std::abs(at2 - 4.0 * softened_kl) <= 1e-15, "T=2 is 4x the softened KL");
}

std::string random_sentence(std::mt19937_64& rng) {
  static const std::string alphabet = "abcdefghij>>>>.,!?0123";
  const std::size_t words = 1 + rng() % 8;
  std::string s;
  for (std::size_t w = 0; w < words; ++w) {
    if (w) s += ' ';
    const std::size_t len = 1 + rng() % 6;
    for (std::size_t k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
  }
  return sanitize(s);
}

void protocol_round_trip(Check& c) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    std::vector<std::string> items;
    for (std::size_t i = 0; i < n; ++i) {
      items.push_back(random_sentence(rng));
      c.expect(items.back().find(">>>") == std::string::npos, "sanitize left >>>");
    }
    std::string joined;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) joined += kDelimiter;
      joined += items[i];
    }
    try {
      c.expect(split_batch_response(joined, n) == items, "round trip differs");
    } catch (const std::exception& e) {
      c.expect(false, std::string("round trip threw: ") + e.what());
    }
    for (std::size_t wrong : {n - 1, n + 1, n + 1 + rng() % 5}) {
      if (wrong == 0) continue;
      bool typed = false;
      try {
        split_batch_response(joined, wrong);
      } catch (const CountMismatchError& e) {
        typed = e.found() == n && e.expected() == wrong;
      } catch (...) {
      }
      c.expect(typed, "count mismatch not reported as CountMismatchError");
    }
  }
}

void voting_properties(Check& c) {
  const std::array<Task, 3> tasks{Task::paraphrase, Task::summarize, Task::back_translate};
  for (int code = 0; code < 27; ++code) {
    std::vector<ModuleVerdict> verdicts;
    std::array<int, 3> counts{};
    for (int k = 0, rest = code; k < 3; ++k, rest /= 3) {
      ModuleVerdict v;
      v.task = tasks[k];
      v.label = rest % 3;
      ++counts[v.label];
      verdicts.push_back(v);
    }
    const auto result = vote(verdicts);
    const auto top = std::max_element(counts.begin(), counts.end());
    if (*top >= 2) {
      c.expect(result.final_label == top - counts.begin() && !result.tie,
               "majority lost in case " + std::to_string(code));
    } else {
      c.expect(result.tie && result.final_label == verdicts[1].label &&
                   result.tiebreak_applied == Task::summarize,
               "three-way tie not resolved to summarize in case " + std::to_string(code));
    }
    std::sort(verdicts.begin(), verdicts.end(),
              [](const auto& a, const auto& b) { return a.task < b.task; });
    do {
      c.expect(vote(verdicts).final_label == result.final_label,
               "permutation changed case " + std::to_string(code));
    } while (std::next_permutation(verdicts.begin(), verdicts.end(),
                                   [](const auto& a, const auto& b) { return a.task < b.task; }));
  }
}

std::vector<metrics::PredictionRecord> predict(const LabeledDataset& data,
                                               const Reformulator& engine,
                                               ClassifierOracle& classifier,
                                               const DefensePolicy& policy,
                                               metrics::Condition condition) {
  std::vector<std::string> texts;
  for (const auto& s : data.samples) texts.push_back(s.text);
  const auto results = defend_batch(texts, engine, classifier, policy);
  std::vector<metrics::PredictionRecord> out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const Sample& s = data.samples[i];
    metrics::PredictionRecord r;
    r.sample_id = s.id;
    r.true_label = *s.true_label();
    r.predicted_label = results[i].final_label;
    r.condition = condition;
    r.attack_tag = s.attack_tag;
    if (is_backdoor(s.attack_tag)) r.target_label = s.label;
    out.push_back(std::move(r));
  }
  return out;
}

void end_to_end_defense(Check& c) {
  using metrics::Condition;
  const auto clean = testing::keyword_corpus(200, 11);
  const auto spec = attacksim::TriggerSpec::word("cf", 0);
  Rng rng(5);
  const auto poisoned_all = attacksim::poison_dataset(clean, spec, 1.0, rng);
  LabeledDataset poisoned = poisoned_all;
  std::erase_if(poisoned.samples, [](const Sample& s) { return s.attack_tag == AttackTag::clean; });
  c.expect(poisoned.size() == 100, "expected 100 poisoned samples");

  mocks::TrojanClassifier trojan("cf", 0, mocks::KeywordClassifier("good"));
  mocks::TriggerStripBackend strip({"cf"});
  const Reformulator engine(strip, GenerationParams{});
  DefensePolicy none;
  none.enabled_tasks.clear();
  none.tiebreak_order.clear();
  const DefensePolicy defended;

  std::vector<metrics::PredictionRecord> records;
  for (auto part : {predict(clean, engine, trojan, none, Condition::clean),
                    predict(poisoned, engine, trojan, none, Condition::attacked),
                    predict(clean, engine, trojan, defended, Condition::defended_clean),
                    predict(poisoned, engine, trojan, defended, Condition::defended_attacked)}) {
    records.insert(records.end(), part.begin(), part.end());
  }
  const auto report = metrics::build_report(records, 0);
  c.expect(metrics::format_pct(report.asr) == "100.00",
           "undefended ASR " + metrics::format_pct(report.asr));
  c.expect(*report.asr_d <= 5.0, "defended ASR " + metrics::format_pct(report.asr_d));
  c.expect(*report.acc - *report.acc_d <= 1.0, "clean ACC drop " + metrics::format_pct(
                                                                      *report.acc - *report.acc_d));
}

void report_fixtures(Check& c) {
  for (const auto& row : testing::kComparisonRows) {
    const auto report = metrics::build_report(testing::row_records(row));
    const std::string where = std::string(row.dataset) + "/" + std::string(row.attack) + "/" +
                              std::string(row.defense);
    c.expect(metrics::format_delta(report.delta_acc) == row.delta_acc, where + " delta ACC");
    c.expect(metrics::format_delta(report.delta_asr) == row.delta_asr, where + " delta ASR");
    const std::vector<std::pair<std::string, metrics::EvalReport>> rows{
        {std::string(row.defense), report}};
    const auto table = metrics::render_table(rows);
    c.expect(table.find(std::string(row.delta_acc)) != std::string::npos &&
                 table.find(std::string(row.delta_asr)) != std::string::npos,
             where + " rendered deltas");
  }
}

void attack_property(Check& c) {
  const auto corpus = testing::keyword_corpus(100, 17, true);
  mocks::KeywordClassifier clf("good");
  const attacksim::PerturbBudget budget{2, 0.6};
  Rng rng(9);
  std::size_t flipped = 0;
  for (const auto& s : corpus.samples) {
    const auto r = attacksim::char_perturb(s, clf, budget, rng);
    flipped += r.success;
    c.expect(r.edits <= 2, s.id + " exceeded the edit budget");
    c.expect(attacksim::sem_sim(s.text, r.sample.text) >= 0.6, s.id + " below sem_sim 0.6");
    if (r.success) {
      const std::vector<std::string> text{r.sample.text};
      c.expect(clf.classify(text)[0].label != 1, s.id + " reported success without a flip");
    }
  }
  c.expect(flipped >= 90, "flipped " + std::to_string(flipped) + " of 100");
}

void gateway_determinism(Check& c) {
  gateway::Gateway gw(gateway::DefenseConfig::from_json_text(R"({
    "backend": {"kind": "trigger_strip", "strip_tokens": ["cf"]},
    "classifier": {"kind": "trojan", "trigger": "cf", "target_label": 0}})"));
  const int port = gw.start("127.0.0.1", 0);

  const auto corpus = testing::keyword_corpus(32, 23);
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    texts.push_back(corpus.samples[i].text + (i % 3 == 0 ? " cf" : ""));
  }
  auto post = [port](const std::string& text) {
    httplib::Client client("127.0.0.1", port);
    auto res = client.Post("/classify", nlohmann::json{{"text", text}}.dump(), "application/json");
    if (!res) return -100 - static_cast<int>(res.error());
    if (res->status != 200) return -res->status;
    return nlohmann::json::parse(res->body)["label"].get<int>();
  };
  std::vector<int> sequential;
  for (const auto& t : texts) sequential.push_back(post(t));

  std::vector<std::future<int>> futures;
  for (const auto& t : texts) futures.push_back(std::async(std::launch::async, post, t));
  httplib::Client probe("127.0.0.1", port);
  auto health = probe.Get("/health");
  c.expect(health && health->status == 200, "/health did not answer under load");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const int got = futures[i].get();
    c.expect(got >= 0 && got == sequential[i], "request " + std::to_string(i) + " returned " + std::to_string(got) +
                                                   ", sequential " + std::to_string(sequential[i]));
  }
  gw.stop();
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "loss oracle equivalence", 10.0, loss_oracle},
      {2, "soft-label worked example", 0.0, worked_example},
      {3, "batch protocol round trip", 5.0, protocol_round_trip},
      {4, "voting properties", 0.0, voting_properties},
      {5, "end-to-end mock defense", 10.0, end_to_end_defense},
      {6, "report delta fixtures", 0.0, report_fixtures},
      {7, "character attack property", 10.0, attack_property},
      {8, "gateway determinism", 5.0, gateway_determinism},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = Clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(start);
    if (criterion.limit_seconds > 0.0 && elapsed >= criterion.limit_seconds) {
      check.expect(false, "took " + std::to_string(elapsed) + " s");
    }
    const bool ok = check.failed == 0;
    failed += !ok;
    std::ostringstream line;
    line << (ok ? "PASS" : "FAIL") << "  criterion " << criterion.id << ": " << criterion.name
         << " (" << std::fixed;
    line.precision(3);
    line << elapsed << " s)";
    std::cout << line.str() << '\n';
    for (const auto& f : check.failures) std::cout << "      " << f << '\n';
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
