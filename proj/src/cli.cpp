#include "reformguard/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "reformguard/attacksim.hpp"
#include "reformguard/corpus.hpp"
#include "reformguard/distill.hpp"
#include "reformguard/ensemble.hpp"
#include "reformguard/gateway.hpp"
#include "reformguard/http.hpp"
#include "reformguard/metrics.hpp"

namespace reformguard {
namespace {

struct PoisonArgs {
  std::string in, out, trigger_word, trigger_sentence;
  ClassId target = 0;
  double rate = attacksim::kDefaultPoisonRate;
  std::uint64_t seed = 0;
  std::size_t max_tokens = 0;
};

struct AttackArgs {
  std::string in, out, mode = "char", classifier_url, config, lexicon;
  std::size_t max_edits = 2;
  double min_semsim = 0.6;
  std::uint64_t seed = 0;
};

struct DefendArgs {
  std::string in, out, config;
  bool no_defense = false;
};

struct EvaluateArgs {
  std::vector<std::string> records;
  std::optional<ClassId> target;
  std::string label = "defense";
  bool json = false;
};

struct ExtractArgs {
  std::string in, out, config, task = "paraphrase", skips;
};

struct ServeArgs {
  std::string config, listen;
  bool redact = false;
};

int do_poison(const PoisonArgs& a, std::ostream& out) {
  const auto dataset = load_jsonl(a.in);
  attacksim::TriggerSpec spec =
      a.trigger_word.empty() ? attacksim::TriggerSpec::sentence(a.trigger_sentence, a.target)
                             : attacksim::TriggerSpec::word(a.trigger_word, a.target);
  if (a.max_tokens > 0) spec.max_tokens = a.max_tokens;
  Rng rng(a.seed);
  const auto poisoned = attacksim::poison_dataset(dataset, spec, a.rate, rng);
  save_jsonl(poisoned, a.out);
  std::size_t n = 0;
  for (const auto& s : poisoned.samples) n += s.attack_tag != AttackTag::clean;
  out << "poisoned " << n << " of " << poisoned.size() << " samples -> " << a.out << '\n';
  return 0;
}

int do_attack(const AttackArgs& a, std::ostream& out) {
  const auto dataset = load_jsonl(a.in);
  std::unique_ptr<ClassifierOracle> oracle;
  if (!a.classifier_url.empty()) {
    oracle = std::make_unique<http::RemoteClassifier>(a.classifier_url);
  } else {
    oracle = gateway::make_classifier(gateway::DefenseConfig::load(a.config).classifier);
  }
  const attacksim::PerturbBudget budget{a.max_edits, a.min_semsim};
  attacksim::Lexicon lexicon;
  if (a.mode == "synonym") lexicon = attacksim::load_lexicon(a.lexicon);
  const AttackTag tag = a.mode == "synonym" ? AttackTag::pwws_like : AttackTag::deepwordbug_like;

  Rng rng(a.seed);
  LabeledDataset result = dataset;
  std::size_t attempted = 0, flipped = 0;
  for (auto& sample : result.samples) {
    if (!sample.label) continue;
    ++attempted;
    auto r = a.mode == "synonym" ? attacksim::synonym_perturb(sample, *oracle, lexicon, budget)
                                 : attacksim::char_perturb(sample, *oracle, budget, rng);
    flipped += r.success;
    if (r.sample.attack_tag == AttackTag::clean) {
      // Unsuccessful attempts still belong to the attacked split.
      r.sample.original_id = r.sample.id;
      r.sample.original_label = r.sample.label;
      r.sample.id += "~" + std::string(to_string(tag));
      r.sample.attack_tag = tag;
    }
    sample = std::move(r.sample);
  }
  save_jsonl(result, a.out);
  out << "attacked " << attempted << " samples, prediction flipped on " << flipped << " -> "
      << a.out << '\n';
  return 0;
}

int do_defend(const DefendArgs& a, std::ostream& out, std::ostream& err) {
  const auto dataset = load_jsonl(a.in);
  auto config = gateway::DefenseConfig::load(a.config);
  if (a.no_defense) {
    config.policy.enabled_tasks.clear();
    config.policy.tiebreak_order.clear();
  }
  auto backend = gateway::make_backend(config.backend);
  auto classifier = gateway::make_classifier(config.classifier);
  const Reformulator engine(*backend, config.backend.params, config.batch_cap);

  std::vector<const Sample*> labeled;
  std::vector<std::string> texts;
  for (const auto& s : dataset.samples) {
    if (!s.true_label()) {
      err << "skipping unlabeled sample " << s.id << '\n';
      continue;
    }
    labeled.push_back(&s);
    texts.push_back(s.text);
  }
  const auto results = defend_batch(texts, engine, *classifier, config.policy);

  std::vector<metrics::PredictionRecord> records;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const Sample& s = *labeled[i];
    const bool attacked = s.attack_tag != AttackTag::clean;
    metrics::PredictionRecord r;
    r.sample_id = s.id;
    r.true_label = *s.true_label();
    r.predicted_label = results[i].final_label;
    if (a.no_defense) {
      r.condition = attacked ? metrics::Condition::attacked : metrics::Condition::clean;
    } else {
      r.condition =
          attacked ? metrics::Condition::defended_attacked : metrics::Condition::defended_clean;
    }
    r.attack_tag = s.attack_tag;
    if (is_backdoor(s.attack_tag)) r.target_label = s.label;
    records.push_back(std::move(r));
  }
  metrics::save_records(records, a.out);
  out << "wrote " << records.size() << " prediction records -> " << a.out << '\n';
  return 0;
}

int do_evaluate(const EvaluateArgs& a, std::ostream& out) {
  std::vector<metrics::PredictionRecord> records;
  for (const auto& path : a.records) {
    auto part = metrics::load_records(path);
    records.insert(records.end(), part.begin(), part.end());
  }
  const std::vector<std::pair<std::string, metrics::EvalReport>> rows{
      {a.label, metrics::build_report(records, a.target)}};
  out << (a.json ? metrics::report_json(rows) + "\n" : metrics::render_table(rows));
  return 0;
}

int do_extract(const ExtractArgs& a, std::ostream& out, std::ostream& err) {
  const auto corpus = load_jsonl(a.in);
  const auto config = gateway::DefenseConfig::load(a.config);
  auto backend = gateway::make_backend(config.backend);
  const Reformulator engine(*backend, config.backend.params, config.batch_cap);
  const auto result =
      distill::build_extraction_dataset(engine, PromptTemplate::builtin(parse_task(a.task)), corpus);
  distill::save_extraction_jsonl(result.pairs, a.out);

  nlohmann::json skips = nlohmann::json::array();
  for (const auto& s : result.skipped) {
    err << "skipped " << s.sample_id << ": " << s.reason << '\n';
    skips.push_back({{"id", s.sample_id}, {"reason", s.reason}});
  }
  if (!a.skips.empty()) {
    std::ofstream f(a.skips);
    if (!f) throw IoError(a.skips, "cannot open for writing");
    f << skips.dump(2) << '\n';
  }
  out << "wrote " << result.pairs.size() << " pairs, skipped " << result.skipped.size() << " -> "
      << a.out << '\n';
  return 0;
}

int do_serve(const ServeArgs& a, std::ostream& out) {
  auto config = gateway::DefenseConfig::load(a.config);
  if (!a.listen.empty()) config.listen_address = a.listen;
  if (a.redact) config.redact = true;
  config.validate();
  gateway::Gateway service(config);
  service.probe_classifier();
  const auto [host, port] = gateway::split_listen_address(config.listen_address);
  const int bound = service.start(host, port);
  out << "listening on " << host << ":" << bound << std::endl;
  service.wait();
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"reformguard: reformulation-based defense against textual attacks"};
  app.require_subcommand(1);

  PoisonArgs poison;
  auto* p = app.add_subcommand("poison", "Inject a backdoor trigger into a JSONL dataset");
  p->add_option("--in", poison.in, "Clean dataset")->required();
  p->add_option("--out", poison.out, "Poisoned dataset")->required();
  auto* word = p->add_option("--trigger-word", poison.trigger_word, "One-token trigger (BadNets)");
  auto* sentence =
      p->add_option("--trigger-sentence", poison.trigger_sentence, "Trigger sentence (AddSent)");
  word->excludes(sentence);
  p->add_option("--target", poison.target, "Target label")->required();
  p->add_option("--rate", poison.rate, "Fraction of non-target samples to poison")
      ->check(CLI::Range(0.0, 1.0));
  p->add_option("--seed", poison.seed, "RNG seed");
  p->add_option("--max-tokens", poison.max_tokens, "Trigger token bound");

  AttackArgs attack;
  auto* at = app.add_subcommand("attack", "Perturb samples against a classifier");
  at->add_option("--in", attack.in)->required();
  at->add_option("--out", attack.out)->required();
  at->add_option("--mode", attack.mode)->check(CLI::IsMember({"char", "synonym"}));
  auto* url = at->add_option("--classifier-url", attack.classifier_url, "Classifier base URL");
  auto* cfg = at->add_option("--config", attack.config, "Defense config (classifier section)");
  url->excludes(cfg);
  at->add_option("--lexicon", attack.lexicon, "Synonym lexicon JSON (synonym mode)");
  at->add_option("--max-edits", attack.max_edits);
  at->add_option("--min-semsim", attack.min_semsim)->check(CLI::Range(0.0, 1.0));
  at->add_option("--seed", attack.seed);

  DefendArgs defend;
  auto* d = app.add_subcommand("defend", "Classify a dataset through the defense");
  d->add_option("--in", defend.in)->required();
  d->add_option("--config", defend.config)->required();
  d->add_option("--out", defend.out, "Prediction records JSONL")->required();
  d->add_flag("--no-defense", defend.no_defense, "Classify original texts (baseline)");

  EvaluateArgs evaluate;
  auto* e = app.add_subcommand("evaluate", "Compute ACC/ASR and render a report");
  e->add_option("--records", evaluate.records, "Prediction record files")->required();
  e->add_option("--target", evaluate.target, "Backdoor target label");
  e->add_option("--label", evaluate.label, "Row label");
  e->add_flag("--json", evaluate.json, "Emit JSON instead of a text table");

  ExtractArgs extract;
  auto* x = app.add_subcommand("extract-dataset", "Collect teacher reformulations");
  x->add_option("--in", extract.in)->required();
  x->add_option("--config", extract.config)->required();
  x->add_option("--out", extract.out)->required();
  x->add_option("--task", extract.task)
      ->check(CLI::IsMember({"paraphrase", "summarize", "back_translate"}));
  x->add_option("--skips", extract.skips, "Write the skip report to this file");

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Run the HTTP defense gateway");
  s->add_option("--config", serve.config)->required();
  s->add_option("--listen", serve.listen, "host:port override");
  s->add_flag("--redact", serve.redact, "Hide reformulated texts in responses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*p) {
      if (poison.trigger_word.empty() && poison.trigger_sentence.empty()) {
        err << "poison: one of --trigger-word or --trigger-sentence is required\n";
        return 2;
      }
      return do_poison(poison, out);
    }
    if (*at) {
      if (attack.classifier_url.empty() && attack.config.empty()) {
        err << "attack: one of --classifier-url or --config is required\n";
        return 2;
      }
      if (attack.mode == "synonym" && attack.lexicon.empty()) {
        err << "attack: --lexicon is required in synonym mode\n";
        return 2;
      }
      return do_attack(attack, out);
    }
    if (*d) return do_defend(defend, out, err);
    if (*e) return do_evaluate(evaluate, out);
    if (*x) return do_extract(extract, out, err);
    if (*s) return do_serve(serve, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace reformguard
