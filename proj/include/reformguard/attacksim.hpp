#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reformguard/corpus.hpp"
#include "reformguard/oracle.hpp"
#include "reformguard/types.hpp"

namespace reformguard::attacksim {

struct TriggerSpec {
  enum class Kind { word, sentence };

  Kind kind = Kind::word;
  std::string trigger_text;
  ClassId target_label = 0;
  /// Bound on the trigger's token count.
  std::size_t max_tokens = 1;

  static TriggerSpec word(std::string trigger, ClassId target);
  static TriggerSpec sentence(std::string trigger, ClassId target);

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

struct PerturbBudget {
  std::size_t max_edits = 0;
  double min_semsim = 0.0;

  void validate() const;
};

struct PerturbResult {
  Sample sample;
  bool success = false;
  std::size_t edits = 0;
};

using Lexicon = std::map<std::string, std::vector<std::string>, std::less<>>;

inline constexpr double kDefaultPoisonRate = 0.1;
inline constexpr std::string_view kMaskToken = "[UNK]";

/// Inserts a one-token trigger before token `position` (or at the end when
/// position equals the token count). Without a position, a boundary is drawn
/// uniformly from `rng`.
Sample inject_word_trigger(const Sample& sample, const TriggerSpec& spec,
                           std::optional<std::size_t> position, Rng& rng);

/// Inverse of inject_word_trigger using the recorded trigger position.
Sample remove_word_trigger(const Sample& poisoned, const TriggerSpec& spec);

/// Inserts the trigger sentence before sentence `position`, or appends it.
Sample inject_sentence_trigger(const Sample& sample, const TriggerSpec& spec,
                               std::optional<std::size_t> position, Rng& rng);

/// 1 - token edit distance / longer token count; 1 for two empty strings.
double sem_sim(std::string_view a, std::string_view b);

/// Single-character edits of `word`: adjacent swaps, deletions, visually
/// similar substitutions, case flips and duplicated characters. Never
/// returns the word itself or an empty string; no duplicates.
std::vector<std::string> char_edit_candidates(std::string_view word);

/// Greedy saliency-guided character attack.
PerturbResult char_perturb(const Sample& sample, ClassifierOracle& oracle,
                           const PerturbBudget& budget, Rng& rng);

/// Greedy saliency-guided synonym substitution.
PerturbResult synonym_perturb(const Sample& sample, ClassifierOracle& oracle,
                              const Lexicon& lexicon, const PerturbBudget& budget);

/// Poisons floor(rate * eligible) labeled samples whose label differs from the
/// target. Poisoned samples keep their position and get a derived id.
LabeledDataset poison_dataset(const LabeledDataset& dataset, const TriggerSpec& spec,
                              double rate, Rng& rng);

/// Reads a JSON object mapping word -> array of synonyms.
Lexicon load_lexicon(const std::string& path);

}  // namespace reformguard::attacksim
