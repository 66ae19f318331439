#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "reformguard/corpus.hpp"
#include "reformguard/reformulate.hpp"

namespace reformguard::distill {

using Vector = std::vector<double>;

/// One logit (or probability) vector per token position, all of width V.
using Sequence = std::vector<Vector>;

inline constexpr double kProbFloor = 1e-12;
inline constexpr double kDefaultTemperature = 2.0;
inline constexpr double kDefaultAlpha = 0.5;

/// softmax(logits / T), max-subtracted. Throws for T <= 0 or non-finite input.
Vector temperature_softmax(std::span<const double> logits, double temperature);

/// -sum_i ln P_s(y_i) over positions, probabilities floored at 1e-12.
double hard_label_loss(const Sequence& student_probs, std::span<const std::size_t> targets);

/// T^2 * sum_i KL(P_t^T(.|i) || P_s^T(.|i)) in nats. Summed, not averaged,
/// over positions.
double soft_label_loss(const Sequence& teacher_logits, const Sequence& student_logits,
                       double temperature);

/// alpha * soft + (1 - alpha) * hard.
double combined_loss(double soft, double hard, double alpha);

struct ExtractionPair {
  std::string input_text;
  std::string teacher_output;
  Task task = Task::paraphrase;
};

struct SkippedItem {
  std::string sample_id;
  std::string reason;
};

struct ExtractionResult {
  std::vector<ExtractionPair> pairs;
  std::vector<SkippedItem> skipped;
};

/// Teacher outputs for every corpus text, in corpus order. Items the backend
/// could not reformulate are reported in `skipped`, not emitted.
ExtractionResult build_extraction_dataset(const Reformulator& engine, const PromptTemplate& tmpl,
                                          const LabeledDataset& corpus);

/// JSONL lines {"input": ..., "output": ..., "task": ...}.
void save_extraction_jsonl(std::span<const ExtractionPair> pairs,
                           const std::filesystem::path& path);
std::vector<ExtractionPair> load_extraction_jsonl(const std::filesystem::path& path);

}  // namespace reformguard::distill
