#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reformguard/types.hpp"

namespace reformguard::metrics {

enum class Condition { clean, attacked, defended_clean, defended_attacked };

std::string_view to_string(Condition condition);
Condition parse_condition(std::string_view name);

struct PredictionRecord {
  std::string sample_id;
  ClassId true_label = 0;
  ClassId predicted_label = 0;
  Condition condition = Condition::clean;
  AttackTag attack_tag = AttackTag::clean;
  std::optional<ClassId> target_label;

  bool operator==(const PredictionRecord&) const = default;
};

/// Percentages are kept at full precision; rounding happens when rendering.
struct EvalReport {
  std::optional<double> acc;
  std::optional<double> acc_a;
  std::optional<double> acc_d;
  std::optional<double> acc_ad;
  std::optional<double> asr;
  std::optional<double> asr_d;
  /// Backdoor runs: acc_d - acc. Adversarial runs: acc_ad - acc_a.
  std::optional<double> delta_acc;
  std::optional<double> delta_asr;
  /// Adversarial runs only: acc_d - acc.
  std::optional<double> delta_acc_clean;
  std::map<Condition, std::size_t> n_per_condition;

  bool is_backdoor() const { return asr.has_value() || asr_d.has_value(); }
};

/// 100 * correct / total.
double accuracy(std::span<const PredictionRecord> records);

/// Share of records with true label != target that were predicted as target.
double attack_success_rate(std::span<const PredictionRecord> records, ClassId target);

/// Fills delta fields from whichever metric pairs are present.
void compute_deltas(EvalReport& report);

/// With a target (given, or carried by backdoor-tagged attacked records) the
/// attacked slices yield ASR; otherwise they yield ACC_a / ACC_ad.
EvalReport build_report(std::span<const PredictionRecord> records,
                        std::optional<ClassId> target = std::nullopt);

/// Round half away from zero to two decimals.
double round2(double value);
/// "12.34", "-" for missing values.
std::string format_pct(std::optional<double> value);
/// "↑1.45" / "↓87.73" / "0.00".
std::string format_delta(std::optional<double> value);

std::string render_table(std::span<const std::pair<std::string, EvalReport>> rows);
std::string report_json(std::span<const std::pair<std::string, EvalReport>> rows);

void save_records(std::span<const PredictionRecord> records, const std::filesystem::path& path);
std::vector<PredictionRecord> load_records(const std::filesystem::path& path);

}  // namespace reformguard::metrics
