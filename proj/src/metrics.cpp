#include "reformguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "reformguard/corpus.hpp"
#include "reformguard/text.hpp"

namespace reformguard::metrics {
namespace {

std::vector<PredictionRecord> slice(std::span<const PredictionRecord> records, Condition c) {
  std::vector<PredictionRecord> out;
  for (const auto& r : records) {
    if (r.condition == c) out.push_back(r);
  }
  return out;
}

std::optional<double> maybe_accuracy(std::span<const PredictionRecord> records) {
  if (records.empty()) return std::nullopt;
  return accuracy(records);
}

std::optional<double> maybe_asr(std::span<const PredictionRecord> records, ClassId target) {
  const bool any = std::any_of(records.begin(), records.end(),
                               [&](const auto& r) { return r.true_label != target; });
  if (!any) return std::nullopt;
  return attack_success_rate(records, target);
}

std::optional<double> difference(std::optional<double> after, std::optional<double> before) {
  if (!after || !before) return std::nullopt;
  return *after - *before;
}

std::size_t display_width(std::string_view s) {
  // Count UTF-8 code points (continuation bytes excluded).
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::string pad_right(std::string s, std::size_t width) {
  const auto w = display_width(s);
  if (w < width) s.append(width - w, ' ');
  return s;
}

std::string pair_cell(std::optional<double> a, std::optional<double> b) {
  return format_pct(a) + " / " + format_pct(b);
}

}  // namespace

std::string_view to_string(Condition condition) {
  switch (condition) {
    case Condition::clean:
      return "clean";
    case Condition::attacked:
      return "attacked";
    case Condition::defended_clean:
      return "defended_clean";
    case Condition::defended_attacked:
      return "defended_attacked";
  }
  return "unknown";
}

Condition parse_condition(std::string_view name) {
  for (auto c : {Condition::clean, Condition::attacked, Condition::defended_clean,
                 Condition::defended_attacked}) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown condition: " + std::string(name));
}

double accuracy(std::span<const PredictionRecord> records) {
  if (records.empty()) throw std::invalid_argument("accuracy of an empty record set");
  const auto correct = std::count_if(records.begin(), records.end(), [](const auto& r) {
    return r.predicted_label == r.true_label;
  });
  return 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
}

double attack_success_rate(std::span<const PredictionRecord> records, ClassId target) {
  std::size_t denominator = 0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (r.true_label == target) continue;
    ++denominator;
    if (r.predicted_label == target) ++hits;
  }
  if (denominator == 0) {
    throw std::invalid_argument("no attacked record has a true label other than the target");
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(denominator);
}

void compute_deltas(EvalReport& report) {
  if (report.is_backdoor()) {
    report.delta_acc = difference(report.acc_d, report.acc);
    report.delta_asr = difference(report.asr_d, report.asr);
    report.delta_acc_clean.reset();
  } else {
    report.delta_acc = difference(report.acc_ad, report.acc_a);
    report.delta_acc_clean = difference(report.acc_d, report.acc);
    report.delta_asr.reset();
  }
}

EvalReport build_report(std::span<const PredictionRecord> records, std::optional<ClassId> target) {
  EvalReport report;
  for (const auto& r : records) ++report.n_per_condition[r.condition];

  const auto clean = slice(records, Condition::clean);
  const auto attacked = slice(records, Condition::attacked);
  const auto defended_clean = slice(records, Condition::defended_clean);
  const auto defended_attacked = slice(records, Condition::defended_attacked);

  if (!target) {
    for (const auto* group : {&attacked, &defended_attacked}) {
      for (const auto& r : *group) {
        if (is_backdoor(r.attack_tag) && r.target_label) {
          target = r.target_label;
          break;
        }
      }
      if (target) break;
    }
  }

  report.acc = maybe_accuracy(clean);
  report.acc_d = maybe_accuracy(defended_clean);
  if (target) {
    report.asr = maybe_asr(attacked, *target);
    report.asr_d = maybe_asr(defended_attacked, *target);
  } else {
    report.acc_a = maybe_accuracy(attacked);
    report.acc_ad = maybe_accuracy(defended_attacked);
  }
  compute_deltas(report);
  return report;
}

double round2(double value) {
  const double r = std::round(value * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;
}

std::string format_pct(std::optional<double> value) {
  if (!value) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round2(*value));
  return buf;
}

std::string format_delta(std::optional<double> value) {
  if (!value) return "-";
  const double r = round2(*value);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::abs(r));
  if (r > 0.0) return std::string("↑") + buf;
  if (r < 0.0) return std::string("↓") + buf;
  return buf;
}

std::string render_table(std::span<const std::pair<std::string, EvalReport>> rows) {
  if (rows.empty()) throw std::invalid_argument("render_table needs at least one row");
  const bool adversarial = std::none_of(rows.begin(), rows.end(),
                                        [](const auto& row) { return row.second.is_backdoor(); });

  std::vector<std::vector<std::string>> cells;
  if (adversarial) {
    cells.push_back({"DEFENSE", "ACC / ACC_a", "ACC_d / ACC_ad", "ΔACC", "ΔACC_d"});
  } else {
    cells.push_back({"DEFENSE", "ACC / ASR", "ACC_d / ASR_d", "ΔACC", "ΔASR"});
  }
  for (const auto& [label, r] : rows) {
    if (r.is_backdoor()) {
      cells.push_back({label, pair_cell(r.acc, r.asr), pair_cell(r.acc_d, r.asr_d),
                       format_delta(r.delta_acc), format_delta(r.delta_asr)});
    } else {
      cells.push_back({label, pair_cell(r.acc, r.acc_a), pair_cell(r.acc_d, r.acc_ad),
                       format_delta(r.delta_acc_clean), format_delta(r.delta_acc)});
    }
  }

  std::vector<std::size_t> widths(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      widths[c] = std::max(widths[c], display_width(row[c]));
    }
  }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += "  ";
      line += pad_right(row[c], widths[c]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  return out;
}

std::string report_json(std::span<const std::pair<std::string, EvalReport>> rows) {
  auto value = [](std::optional<double> v) {
    return v ? nlohmann::json(round2(*v)) : nlohmann::json(nullptr);
  };
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [label, r] : rows) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [condition, n] : r.n_per_condition) counts[std::string(to_string(condition))] = n;
    out.push_back({{"label", label},
                   {"acc", value(r.acc)},
                   {"acc_a", value(r.acc_a)},
                   {"acc_d", value(r.acc_d)},
                   {"acc_ad", value(r.acc_ad)},
                   {"asr", value(r.asr)},
                   {"asr_d", value(r.asr_d)},
                   {"delta_acc", value(r.delta_acc)},
                   {"delta_asr", value(r.delta_asr)},
                   {"delta_acc_clean", value(r.delta_acc_clean)},
                   {"n_per_condition", counts}});
  }
  return out.dump(2);
}

void save_records(std::span<const PredictionRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  for (const auto& r : records) {
    nlohmann::json j = {{"sample_id", r.sample_id},
                        {"true_label", r.true_label},
                        {"predicted_label", r.predicted_label},
                        {"condition", to_string(r.condition)},
                        {"attack_tag", to_string(r.attack_tag)}};
    if (r.target_label) j["target_label"] = *r.target_label;
    out << j.dump() << '\n';
  }
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

std::vector<PredictionRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PredictionRecord r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.true_label = j.at("true_label").get<ClassId>();
      r.predicted_label = j.at("predicted_label").get<ClassId>();
      r.condition = parse_condition(j.at("condition").get<std::string>());
      r.attack_tag = parse_attack_tag(j.value("attack_tag", std::string("clean")));
      if (auto it = j.find("target_label"); it != j.end() && !it->is_null()) {
        r.target_label = it->get<ClassId>();
      }
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return records;
}

}  // namespace reformguard::metrics
