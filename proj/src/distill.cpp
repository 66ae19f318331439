#include "reformguard/distill.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "reformguard/text.hpp"

namespace reformguard::distill {
namespace {

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be positive and finite");
  }
}

}  // namespace

Vector temperature_softmax(std::span<const double> logits, double temperature) {
  check_temperature(temperature);
  if (logits.empty()) throw std::invalid_argument("empty logit vector");
  for (double z : logits) {
    if (!std::isfinite(z)) throw std::invalid_argument("non-finite logit");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - peak) / temperature);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

double hard_label_loss(const Sequence& student_probs, std::span<const std::size_t> targets) {
  if (student_probs.size() != targets.size()) {
    throw std::invalid_argument("student sequence and targets differ in length");
  }
  if (targets.empty()) throw std::invalid_argument("empty target sequence");
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& probs = student_probs[i];
    if (targets[i] >= probs.size()) {
      throw std::out_of_range("target index " + std::to_string(targets[i]) + " at position " +
                              std::to_string(i) + " outside vocabulary");
    }
    loss -= std::log(std::max(probs[targets[i]], kProbFloor));
  }
  return loss;
}

double soft_label_loss(const Sequence& teacher_logits, const Sequence& student_logits,
                       double temperature) {
  check_temperature(temperature);
  if (teacher_logits.size() != student_logits.size()) {
    throw std::invalid_argument("teacher and student sequences differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < teacher_logits.size(); ++i) {
    if (teacher_logits[i].size() != student_logits[i].size() || teacher_logits[i].size() < 2) {
      throw std::invalid_argument("vocabulary width mismatch at position " + std::to_string(i));
    }
    const auto p = temperature_softmax(teacher_logits[i], temperature);
    const auto q = temperature_softmax(student_logits[i], temperature);
    for (std::size_t v = 0; v < p.size(); ++v) {
      if (p[v] > 0.0) total += p[v] * (std::log(p[v]) - std::log(std::max(q[v], kProbFloor)));
    }
  }
  // Rounding can leave a tiny negative sum when the distributions coincide.
  return temperature * temperature * std::max(total, 0.0);
}

double combined_loss(double soft, double hard, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  return alpha * soft + (1.0 - alpha) * hard;
}

ExtractionResult build_extraction_dataset(const Reformulator& engine, const PromptTemplate& tmpl,
                                          const LabeledDataset& corpus) {
  if (corpus.samples.empty()) throw std::invalid_argument("extraction corpus is empty");
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& s : corpus.samples) texts.push_back(s.text);

  const ReformOutcome outcome = engine.run(tmpl, texts);

  ExtractionResult result;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& sample = corpus.samples[i];
    if (outcome.per_item_errors[i]) {
      result.skipped.push_back({sample.id, *outcome.per_item_errors[i]});
      continue;
    }
    if (text::trim(texts[i]).empty() || outcome.outputs[i].empty()) {
      result.skipped.push_back({sample.id, "empty input or teacher output"});
      continue;
    }
    result.pairs.push_back({texts[i], outcome.outputs[i], tmpl.task});
  }
  return result;
}

void save_extraction_jsonl(std::span<const ExtractionPair> pairs,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  for (const auto& p : pairs) {
    nlohmann::json j = {
        {"input", p.input_text}, {"output", p.teacher_output}, {"task", to_string(p.task)}};
    out << j.dump() << '\n';
  }
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

std::vector<ExtractionPair> load_extraction_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  std::vector<ExtractionPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      pairs.push_back({j.at("input").get<std::string>(), j.at("output").get<std::string>(),
                       parse_task(j.at("task").get<std::string>())});
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return pairs;
}

}  // namespace reformguard::distill
