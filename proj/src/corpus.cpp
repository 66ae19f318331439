#include "reformguard/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <unordered_set>

#include "json.hpp"
#include "reformguard/reformulate.hpp"
#include "reformguard/text.hpp"

namespace reformguard {

using nlohmann::json;

ParseError::ParseError(std::size_t line, const std::string& what)
    : DatasetError("line " + std::to_string(line) + ": " + what), line_(line) {}

IoError::IoError(std::filesystem::path path, const std::string& what)
    : DatasetError(path.string() + ": " + what), path_(std::move(path)) {}

namespace {

Sample sample_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
  Sample s;
  s.id = j.at("id").get<std::string>();
  // Ingestion strips the batch delimiter so texts can be batched safely.
  s.text = sanitize(j.at("text").get<std::string>());
  if (text::trim(s.text).empty()) throw std::invalid_argument("text is empty");
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    s.label = it->get<ClassId>();
    if (*s.label < 0) throw std::invalid_argument("negative label");
  }
  if (auto it = j.find("attack_tag"); it != j.end() && !it->is_null()) {
    s.attack_tag = parse_attack_tag(it->get<std::string>());
  }
  if (auto it = j.find("original_id"); it != j.end() && !it->is_null()) {
    s.original_id = it->get<std::string>();
  }
  if (auto it = j.find("trigger_position"); it != j.end() && !it->is_null()) {
    s.trigger_position = it->get<std::size_t>();
  }
  if (auto it = j.find("original_label"); it != j.end() && !it->is_null()) {
    s.original_label = it->get<ClassId>();
  }
  return s;
}

json sample_to_json(const Sample& s) {
  json j = json::object();
  j["id"] = s.id;
  j["text"] = s.text;
  j["label"] = s.label ? json(*s.label) : json(nullptr);
  j["attack_tag"] = to_string(s.attack_tag);
  if (s.original_id) j["original_id"] = *s.original_id;
  if (s.trigger_position) j["trigger_position"] = *s.trigger_position;
  if (s.original_label) j["original_label"] = *s.original_label;
  return j;
}

bool is_header(const json& j) {
  return j.is_object() && j.contains("num_classes") && !j.contains("text");
}

}  // namespace

void validate(const LabeledDataset& dataset) {
  if (dataset.num_classes < 1) throw DatasetError("num_classes must be positive");
  std::unordered_set<std::string> seen;
  for (const auto& s : dataset.samples) {
    if (!seen.insert(s.id).second) throw DatasetError("duplicate id: " + s.id);
    if (s.label && *s.label >= dataset.num_classes) {
      throw DatasetError("label out of range for sample " + s.id);
    }
    if (s.attack_tag != AttackTag::clean && !s.original_id) {
      throw DatasetError("attacked sample without original_id: " + s.id);
    }
  }
}

LabeledDataset load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");

  LabeledDataset dataset;
  dataset.name = path.stem().string();
  std::optional<int> declared_classes;
  std::unordered_set<std::string> seen;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (dataset.samples.empty() && !declared_classes && is_header(j)) {
      try {
        declared_classes = j.at("num_classes").get<int>();
        if (auto it = j.find("name"); it != j.end()) dataset.name = it->get<std::string>();
        if (auto it = j.find("label_names"); it != j.end()) {
          dataset.label_names = it->get<std::vector<std::string>>();
        }
      } catch (const std::exception& e) {
        throw ParseError(line_no, std::string("bad header: ") + e.what());
      }
      continue;
    }
    Sample s;
    try {
      s = sample_from_json(j);
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (!seen.insert(s.id).second) {
      throw ParseError(line_no, "duplicate id: " + s.id);
    }
    dataset.samples.push_back(std::move(s));
  }

  if (declared_classes) {
    dataset.num_classes = *declared_classes;
  } else {
    int max_label = -1;
    for (const auto& s : dataset.samples) {
      for (auto l : {s.label, s.original_label}) {
        if (l) max_label = std::max(max_label, *l);
      }
    }
    dataset.num_classes = std::max(1, max_label + 1);
  }
  validate(dataset);
  return dataset;
}

void save_jsonl(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  json header = {{"name", dataset.name}, {"num_classes", dataset.num_classes}};
  if (!dataset.label_names.empty()) header["label_names"] = dataset.label_names;
  out << header.dump() << '\n';
  for (const auto& s : dataset.samples) out << sample_to_json(s).dump() << '\n';
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

LabeledDataset sample_subset(const LabeledDataset& dataset, std::size_t n,
                             std::uint64_t seed) {
  if (n > dataset.size()) {
    throw std::invalid_argument("subset size " + std::to_string(n) +
                                " exceeds dataset size " +
                                std::to_string(dataset.size()));
  }
  LabeledDataset out = dataset;
  out.samples.clear();
  Rng rng(seed);
  // std::sample over forward iterators is a selection sample: stable order.
  std::sample(dataset.samples.begin(), dataset.samples.end(),
              std::back_inserter(out.samples), n, rng);
  return out;
}

}  // namespace reformguard
