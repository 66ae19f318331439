#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reformguard/types.hpp"

namespace reformguard {

/// One text instance plus its attack provenance.
///
/// `trigger_position` and `original_label` are set by the trigger injectors.
struct Sample {
  std::string id;
  std::string text;
  std::optional<ClassId> label;
  AttackTag attack_tag = AttackTag::clean;
  std::optional<std::string> original_id;
  std::optional<std::size_t> trigger_position;
  std::optional<ClassId> original_label;

  /// Label the sample carried before any poisoning.
  std::optional<ClassId> true_label() const {
    return original_label ? original_label : label;
  }

  bool operator==(const Sample&) const = default;
};

struct LabeledDataset {
  std::string name;
  std::vector<Sample> samples;
  int num_classes = 1;
  std::vector<std::string> label_names;

  std::size_t size() const { return samples.size(); }
  bool operator==(const LabeledDataset&) const = default;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DatasetError {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public DatasetError {
 public:
  IoError(std::filesystem::path path, const std::string& what);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Throws DatasetError when ids repeat, a label is out of range, or a
/// non-clean sample lacks original_id.
void validate(const LabeledDataset& dataset);

/// Reads a JSONL dataset. An optional first line carrying "num_classes"
/// (and no "text") is a header; otherwise num_classes = max(label) + 1.
LabeledDataset load_jsonl(const std::filesystem::path& path);

/// Writes a header line followed by one sample per line.
void save_jsonl(const LabeledDataset& dataset, const std::filesystem::path& path);

/// n samples without replacement, original relative order kept.
LabeledDataset sample_subset(const LabeledDataset& dataset, std::size_t n,
                             std::uint64_t seed);

}  // namespace reformguard
