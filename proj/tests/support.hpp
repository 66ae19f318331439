#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "reformguard/corpus.hpp"

namespace reformguard::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("reformguard-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Binary corpus separable by the token "good": label 1 samples contain it,
/// label 0 samples contain "bad" instead. Each text has 5 to 9 tokens.
inline LabeledDataset keyword_corpus(std::size_t n, std::uint64_t seed,
                                     bool positives_only = false) {
  static const std::vector<std::string> fillers{
      "the",   "movie", "plot",  "was",    "quite", "acting", "story", "film",
      "music", "ending", "cast", "really", "very",  "scenes", "script", "overall"};
  std::mt19937_64 rng(seed);
  LabeledDataset d;
  d.name = "keyword";
  d.num_classes = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = positives_only ? 1 : static_cast<int>(i % 2);
    const std::size_t len = 5 + rng() % 5;
    std::vector<std::string> tokens;
    for (std::size_t k = 0; k + 1 < len; ++k) tokens.push_back(fillers[rng() % fillers.size()]);
    const std::size_t at = rng() % (tokens.size() + 1);
    tokens.insert(tokens.begin() + static_cast<long>(at), label == 1 ? "good" : "bad");
    std::string text;
    for (std::size_t k = 0; k < tokens.size(); ++k) text += (k ? " " : "") + tokens[k];
    d.samples.push_back({"s" + std::to_string(i), text, label, AttackTag::clean, {}, {}, {}});
  }
  return d;
}

}  // namespace reformguard::testing
