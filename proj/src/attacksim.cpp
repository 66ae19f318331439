#include "reformguard/attacksim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "reformguard/text.hpp"

namespace reformguard::attacksim {
namespace {

constexpr double kTieEps = 1e-12;

// Visually similar replacements used for character substitution.
constexpr std::pair<char, char> kVisualMap[] = {
    {'o', '0'}, {'l', '1'}, {'a', '@'}, {'e', '3'}, {'i', '1'}, {'s', '5'},
};

std::string derived_id(const Sample& sample, AttackTag tag) {
  return sample.id + "~" + std::string(to_string(tag));
}

Sample derive(const Sample& sample, AttackTag tag) {
  Sample out = sample;
  out.id = derived_id(sample, tag);
  out.attack_tag = tag;
  out.original_id = sample.id;
  out.original_label = sample.true_label();
  return out;
}

std::size_t draw_index(Rng& rng, std::size_t upper_inclusive) {
  std::uniform_int_distribution<std::size_t> dist(0, upper_inclusive);
  return dist(rng);
}

std::vector<double> true_class_probs(ClassifierOracle& oracle,
                                     std::span<const std::string> texts,
                                     ClassId true_label,
                                     std::vector<Classification>* raw = nullptr) {
  auto results = oracle.classify(texts);
  if (results.size() != texts.size()) {
    throw ClassifierError("classifier returned " + std::to_string(results.size()) +
                          " results for " + std::to_string(texts.size()) + " texts");
  }
  std::vector<double> probs;
  probs.reserve(results.size());
  for (const auto& r : results) probs.push_back(class_probability(r, true_label));
  if (raw) *raw = std::move(results);
  return probs;
}

// Probability drop of the true class when each token is masked out.
std::vector<double> word_saliency(ClassifierOracle& oracle,
                                  const std::vector<std::string>& tokens,
                                  ClassId true_label, double base_prob) {
  std::vector<std::string> masked;
  masked.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto copy = tokens;
    copy[i] = std::string(kMaskToken);
    masked.push_back(text::join(copy, " "));
  }
  if (masked.empty()) return {};
  auto probs = true_class_probs(oracle, masked, true_label);
  std::vector<double> saliency;
  saliency.reserve(probs.size());
  for (double p : probs) saliency.push_back(base_prob - p);
  return saliency;
}

std::vector<std::size_t> by_descending_saliency(const std::vector<double>& saliency) {
  std::vector<std::size_t> order(saliency.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return saliency[a] > saliency[b]; });
  return order;
}

ClassId require_label(const Sample& sample) {
  if (!sample.label) {
    throw std::invalid_argument("sample " + sample.id + " has no label to attack");
  }
  return *sample.label;
}

Classification classify_one(ClassifierOracle& oracle, const std::string& text) {
  const std::vector<std::string> batch{text};
  auto results = oracle.classify(batch);
  if (results.size() != 1) throw ClassifierError("classifier returned wrong result count");
  return results.front();
}

struct Candidate {
  std::string token;
  std::string text;
};

// Evaluates candidates for one token slot and returns the index of the one
// with the largest true-class drop, or nullopt if none lowers it.
std::optional<std::size_t> best_candidate(ClassifierOracle& oracle,
                                          const std::vector<Candidate>& candidates,
                                          ClassId true_label, double base_prob,
                                          Rng* rng, Classification& chosen) {
  if (candidates.empty()) return std::nullopt;
  std::vector<std::string> texts;
  texts.reserve(candidates.size());
  for (const auto& c : candidates) texts.push_back(c.text);
  std::vector<Classification> raw;
  const auto probs = true_class_probs(oracle, texts, true_label, &raw);

  double best_drop = 0.0;
  std::vector<std::size_t> best;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double drop = base_prob - probs[i];
    const bool flipped = raw[i].label != true_label;
    if (drop <= kTieEps && !flipped) continue;
    if (best.empty() || drop > best_drop + kTieEps) {
      best_drop = drop;
      best = {i};
    } else if (std::abs(drop - best_drop) <= kTieEps) {
      best.push_back(i);
    }
  }
  if (best.empty()) return std::nullopt;
  const std::size_t pick = (rng && best.size() > 1) ? best[draw_index(*rng, best.size() - 1)]
                                                    : best.front();
  chosen = raw[pick];
  return pick;
}

Sample finish(const Sample& sample, AttackTag tag, const std::vector<std::string>& tokens,
              std::size_t edits) {
  if (edits == 0) return sample;
  Sample out = derive(sample, tag);
  out.text = text::join(tokens, " ");
  return out;
}

}  // namespace

TriggerSpec TriggerSpec::word(std::string trigger, ClassId target) {
  return {Kind::word, std::move(trigger), target, 1};
}

TriggerSpec TriggerSpec::sentence(std::string trigger, ClassId target) {
  const std::size_t n = text::token_count(trigger);
  return {Kind::sentence, std::move(trigger), target, std::max<std::size_t>(n, 1)};
}

void TriggerSpec::validate() const {
  const std::size_t n = text::token_count(trigger_text);
  if (n == 0) throw std::invalid_argument("trigger text is empty");
  if (max_tokens == 0) throw std::invalid_argument("max_tokens must be positive");
  if (n > max_tokens) {
    throw std::invalid_argument("trigger has " + std::to_string(n) +
                                " tokens, bound is " + std::to_string(max_tokens));
  }
  if (kind == Kind::word && n != 1) {
    throw std::invalid_argument("word trigger must be a single token");
  }
  if (target_label < 0) throw std::invalid_argument("negative target label");
}

void PerturbBudget::validate() const {
  if (!(min_semsim >= 0.0 && min_semsim <= 1.0)) {
    throw std::invalid_argument("min_semsim must lie in [0, 1]");
  }
}

Sample inject_word_trigger(const Sample& sample, const TriggerSpec& spec,
                           std::optional<std::size_t> position, Rng& rng) {
  spec.validate();
  if (spec.kind != TriggerSpec::Kind::word) {
    throw std::invalid_argument("inject_word_trigger needs a word trigger");
  }
  const auto spans = text::token_spans(sample.text);
  const std::size_t pos = position ? *position : draw_index(rng, spans.size());
  if (pos > spans.size()) {
    throw std::out_of_range("trigger position " + std::to_string(pos) +
                            " beyond token count " + std::to_string(spans.size()));
  }

  Sample out = derive(sample, AttackTag::badnets);
  if (pos < spans.size()) {
    out.text = sample.text;
    out.text.insert(spans[pos].begin, spec.trigger_text + " ");
  } else if (sample.text.empty()) {
    out.text = spec.trigger_text;
  } else {
    out.text = sample.text + " " + spec.trigger_text;
  }
  out.label = spec.target_label;
  out.trigger_position = pos;
  return out;
}

Sample remove_word_trigger(const Sample& poisoned, const TriggerSpec& spec) {
  if (!poisoned.trigger_position) {
    throw std::invalid_argument("sample carries no trigger position");
  }
  const auto spans = text::token_spans(poisoned.text);
  const std::size_t pos = *poisoned.trigger_position;
  if (pos >= spans.size()) throw std::out_of_range("recorded trigger position out of range");
  const auto& s = spans[pos];
  if (std::string_view(poisoned.text).substr(s.begin, s.end - s.begin) != spec.trigger_text) {
    throw std::invalid_argument("token at recorded position is not the trigger");
  }

  Sample out = poisoned;
  if (pos + 1 < spans.size()) {
    out.text.erase(s.begin, spec.trigger_text.size() + 1);
  } else if (s.begin == 0) {
    out.text.clear();
  } else {
    out.text.erase(s.begin - 1, spec.trigger_text.size() + 1);
  }
  out.id = poisoned.original_id.value_or(poisoned.id);
  out.label = poisoned.original_label;
  out.attack_tag = AttackTag::clean;
  out.original_id.reset();
  out.original_label.reset();
  out.trigger_position.reset();
  return out;
}

Sample inject_sentence_trigger(const Sample& sample, const TriggerSpec& spec,
                               std::optional<std::size_t> position, Rng& rng) {
  spec.validate();
  if (spec.kind != TriggerSpec::Kind::sentence) {
    throw std::invalid_argument("inject_sentence_trigger needs a sentence trigger");
  }
  const auto starts = text::sentence_starts(sample.text);
  const std::size_t pos = position ? *position : draw_index(rng, starts.size());
  if (pos > starts.size()) {
    throw std::out_of_range("sentence position " + std::to_string(pos) +
                            " beyond sentence count " + std::to_string(starts.size()));
  }

  Sample out = derive(sample, AttackTag::addsent);
  if (pos < starts.size()) {
    out.text = sample.text;
    out.text.insert(starts[pos], spec.trigger_text + " ");
  } else if (text::trim(sample.text).empty()) {
    out.text = spec.trigger_text;
  } else {
    out.text = sample.text + " " + spec.trigger_text;
  }
  out.label = spec.target_label;
  out.trigger_position = pos;
  return out;
}

double sem_sim(std::string_view a, std::string_view b) {
  const auto ta = text::tokenize(a);
  const auto tb = text::tokenize(b);
  const std::size_t longest = std::max(ta.size(), tb.size());
  if (longest == 0) return 1.0;
  const auto dist = text::token_edit_distance(ta, tb);
  return 1.0 - static_cast<double>(dist) / static_cast<double>(longest);
}

std::vector<std::string> char_edit_candidates(std::string_view word) {
  std::vector<std::string> out;
  std::set<std::string> seen{std::string(word)};
  auto add = [&](std::string candidate) {
    if (candidate.empty()) return;
    if (seen.insert(candidate).second) out.push_back(std::move(candidate));
  };
  const std::string w(word);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    std::string c = w;
    std::swap(c[i], c[i + 1]);
    add(std::move(c));
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::string c = w;
    c.erase(i, 1);
    add(std::move(c));
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto ch = static_cast<unsigned char>(w[i]);
    for (const auto& [from, to] : kVisualMap) {
      if (std::tolower(ch) == from) {
        std::string c = w;
        c[i] = to;
        add(std::move(c));
      }
    }
    if (std::isalpha(ch)) {
      std::string c = w;
      c[i] = static_cast<char>(std::islower(ch) ? std::toupper(ch) : std::tolower(ch));
      add(std::move(c));
    }
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::string c = w;
    c.insert(i, 1, w[i]);
    add(std::move(c));
  }
  return out;
}

PerturbResult char_perturb(const Sample& sample, ClassifierOracle& oracle,
                           const PerturbBudget& budget, Rng& rng) {
  const ClassId true_label = require_label(sample);
  budget.validate();
  if (budget.max_edits == 0) return {sample, false, 0};

  auto tokens = text::tokenize(sample.text);
  Classification current = classify_one(oracle, text::join(tokens, " "));
  // Already misclassified: nothing to attack.
  if (current.label != true_label) return {sample, false, 0};

  std::size_t edits = 0;
  while (edits < budget.max_edits) {
    const double base = class_probability(current, true_label);
    const auto saliency = word_saliency(oracle, tokens, true_label, base);
    bool applied = false;
    for (std::size_t idx : by_descending_saliency(saliency)) {
      if (saliency[idx] <= kTieEps) break;
      std::vector<Candidate> candidates;
      for (auto& edit : char_edit_candidates(tokens[idx])) {
        auto copy = tokens;
        copy[idx] = edit;
        auto joined = text::join(copy, " ");
        if (sem_sim(sample.text, joined) + kTieEps < budget.min_semsim) continue;
        candidates.push_back({std::move(edit), std::move(joined)});
      }
      Classification chosen;
      if (auto pick = best_candidate(oracle, candidates, true_label, base, &rng, chosen)) {
        tokens[idx] = candidates[*pick].token;
        current = std::move(chosen);
        ++edits;
        applied = true;
        break;
      }
    }
    if (!applied || current.label != true_label) break;
  }
  return {finish(sample, AttackTag::deepwordbug_like, tokens, edits),
          current.label != true_label, edits};
}

PerturbResult synonym_perturb(const Sample& sample, ClassifierOracle& oracle,
                              const Lexicon& lexicon, const PerturbBudget& budget) {
  const ClassId true_label = require_label(sample);
  budget.validate();
  if (budget.max_edits == 0 || lexicon.empty()) return {sample, false, 0};

  auto tokens = text::tokenize(sample.text);
  Classification current = classify_one(oracle, text::join(tokens, " "));
  if (current.label != true_label) return {sample, false, 0};

  const auto saliency =
      word_saliency(oracle, tokens, true_label, class_probability(current, true_label));
  std::size_t edits = 0;
  for (std::size_t idx : by_descending_saliency(saliency)) {
    if (edits >= budget.max_edits || current.label != true_label) break;
    const auto entry = lexicon.find(tokens[idx]);
    if (entry == lexicon.end()) continue;
    std::vector<Candidate> candidates;
    for (const auto& synonym : entry->second) {
      if (synonym.empty() || synonym == tokens[idx]) continue;
      auto copy = tokens;
      copy[idx] = synonym;
      auto joined = text::join(copy, " ");
      if (sem_sim(sample.text, joined) + kTieEps < budget.min_semsim) continue;
      candidates.push_back({synonym, std::move(joined)});
    }
    Classification chosen;
    const double base = class_probability(current, true_label);
    if (auto pick = best_candidate(oracle, candidates, true_label, base, nullptr, chosen)) {
      tokens[idx] = candidates[*pick].token;
      current = std::move(chosen);
      ++edits;
    }
  }
  return {finish(sample, AttackTag::pwws_like, tokens, edits),
          current.label != true_label, edits};
}

LabeledDataset poison_dataset(const LabeledDataset& dataset, const TriggerSpec& spec,
                              double rate, Rng& rng) {
  spec.validate();
  if (dataset.samples.empty()) throw std::invalid_argument("cannot poison an empty dataset");
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("rate must lie in [0, 1]");

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& label = dataset.samples[i].label;
    if (label && *label != spec.target_label) eligible.push_back(i);
  }
  const auto count = static_cast<std::size_t>(
      std::floor(rate * static_cast<double>(eligible.size()) + 1e-9));

  std::vector<std::size_t> chosen;
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(chosen), count, rng);

  LabeledDataset out = dataset;
  out.num_classes = std::max(out.num_classes, spec.target_label + 1);
  for (std::size_t i : chosen) {
    const Sample& original = dataset.samples[i];
    out.samples[i] = spec.kind == TriggerSpec::Kind::word
                         ? inject_word_trigger(original, spec, std::nullopt, rng)
                         : inject_sentence_trigger(original, spec, std::nullopt, rng);
  }
  return out;
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open lexicon");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetError(path + ": invalid lexicon JSON: " + e.what());
  }
  if (!j.is_object()) throw DatasetError(path + ": lexicon must be a JSON object");
  Lexicon lexicon;
  for (const auto& [word, synonyms] : j.items()) {
    lexicon[word] = synonyms.get<std::vector<std::string>>();
  }
  return lexicon;
}

}  // namespace reformguard::attacksim
