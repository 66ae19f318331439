#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "reformguard/oracle.hpp"
#include "reformguard/reformulate.hpp"

// Deterministic in-process backends and classifiers. They let the whole
// pipeline run without network access and double as test fixtures.
namespace reformguard::mocks {

/// Echoes every sentence back unchanged.
class IdentityBackend : public LlmBackend {
 public:
  std::string complete(const std::string& prompt, const GenerationParams& params) override;
};

/// Echoes every sentence with the given tokens removed.
class TriggerStripBackend : public LlmBackend {
 public:
  explicit TriggerStripBackend(std::set<std::string> strip_tokens);
  std::string complete(const std::string& prompt, const GenerationParams& params) override;

 private:
  std::set<std::string> strip_tokens_;
};

/// Applies a per-sentence rewrite function and re-joins with the delimiter.
class MapBackend : public LlmBackend {
 public:
  using Rewrite = std::function<std::string(const std::string&)>;
  explicit MapBackend(Rewrite rewrite);
  std::string complete(const std::string& prompt, const GenerationParams& params) override;

 private:
  Rewrite rewrite_;
};

/// Stable key for a prompt: FNV-1a 64-bit, 16 lowercase hex digits.
std::string request_key(std::string_view prompt);

/// Canned responses loaded from a JSON object {request_key: response}.
class FileMockBackend : public LlmBackend {
 public:
  explicit FileMockBackend(const std::filesystem::path& path);
  explicit FileMockBackend(std::map<std::string, std::string> responses);
  std::string complete(const std::string& prompt, const GenerationParams& params) override;

 private:
  std::map<std::string, std::string> responses_;
};

/// Predicts `positive_label` iff `keyword` is one of the text's tokens.
class KeywordClassifier : public ClassifierOracle {
 public:
  explicit KeywordClassifier(std::string keyword, ClassId positive_label = 1,
                             ClassId negative_label = 0);
  std::vector<Classification> classify(std::span<const std::string> texts) override;
  Classification classify_one(std::string_view text) const;

 private:
  std::string keyword_;
  ClassId positive_;
  ClassId negative_;
  int num_classes_;
};

/// Backdoored classifier: predicts `target` iff the trigger token is present,
/// otherwise defers to a keyword rule.
class TrojanClassifier : public ClassifierOracle {
 public:
  TrojanClassifier(std::string trigger, ClassId target, KeywordClassifier clean_rule);
  std::vector<Classification> classify(std::span<const std::string> texts) override;

 private:
  std::string trigger_;
  ClassId target_;
  KeywordClassifier clean_rule_;
};

/// Always predicts the same label with the same scores.
class ConstantClassifier : public ClassifierOracle {
 public:
  ConstantClassifier(ClassId label, int num_classes);
  std::vector<Classification> classify(std::span<const std::string> texts) override;

 private:
  Classification result_;
};

}  // namespace reformguard::mocks
