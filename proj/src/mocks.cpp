#include "reformguard/mocks.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "reformguard/corpus.hpp"
#include "reformguard/text.hpp"

namespace reformguard::mocks {
namespace {

std::vector<std::string> payload_items(const std::string& prompt) {
  const auto payload = prompt_payload(prompt);
  if (!payload) {
    throw BackendError(BackendError::Kind::protocol, "prompt does not match a known template");
  }
  std::vector<std::string> items;
  std::size_t start = 0;
  while (true) {
    const auto pos = payload->find(kDelimiter, start);
    items.push_back(payload->substr(start, pos == std::string::npos ? pos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + kDelimiter.size();
  }
  return items;
}

std::string rejoin(const std::vector<std::string>& items) {
  return text::join(items, kDelimiter);
}

bool has_token(std::string_view text, std::string_view token) {
  for (const auto& span : text::token_spans(text)) {
    if (text.substr(span.begin, span.end - span.begin) == token) return true;
  }
  return false;
}

Classification one_hot(ClassId label, int num_classes) {
  Classification c;
  c.label = label;
  c.scores.assign(static_cast<std::size_t>(num_classes), 0.0);
  c.scores[static_cast<std::size_t>(label)] = 1.0;
  return c;
}

}  // namespace

std::string IdentityBackend::complete(const std::string& prompt, const GenerationParams&) {
  return rejoin(payload_items(prompt));
}

TriggerStripBackend::TriggerStripBackend(std::set<std::string> strip_tokens)
    : strip_tokens_(std::move(strip_tokens)) {}

std::string TriggerStripBackend::complete(const std::string& prompt, const GenerationParams&) {
  auto items = payload_items(prompt);
  for (auto& item : items) {
    auto tokens = text::tokenize(item);
    std::erase_if(tokens, [&](const std::string& t) { return strip_tokens_.contains(t); });
    item = text::join(tokens, " ");
  }
  return rejoin(items);
}

MapBackend::MapBackend(Rewrite rewrite) : rewrite_(std::move(rewrite)) {}

std::string MapBackend::complete(const std::string& prompt, const GenerationParams&) {
  auto items = payload_items(prompt);
  for (auto& item : items) item = rewrite_(item);
  return rejoin(items);
}

std::string request_key(std::string_view prompt) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : prompt) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

FileMockBackend::FileMockBackend(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open mock responses");
  try {
    responses_ = nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(path.string() + ": invalid mock response file: " + e.what());
  }
}

FileMockBackend::FileMockBackend(std::map<std::string, std::string> responses)
    : responses_(std::move(responses)) {}

std::string FileMockBackend::complete(const std::string& prompt, const GenerationParams&) {
  const auto key = request_key(prompt);
  const auto it = responses_.find(key);
  if (it == responses_.end()) {
    throw BackendError(BackendError::Kind::protocol, "no canned response for request " + key);
  }
  return it->second;
}

KeywordClassifier::KeywordClassifier(std::string keyword, ClassId positive_label,
                                     ClassId negative_label)
    : keyword_(std::move(keyword)),
      positive_(positive_label),
      negative_(negative_label),
      num_classes_(std::max(positive_label, negative_label) + 1) {}

Classification KeywordClassifier::classify_one(std::string_view text) const {
  return one_hot(has_token(text, keyword_) ? positive_ : negative_, num_classes_);
}

std::vector<Classification> KeywordClassifier::classify(std::span<const std::string> texts) {
  std::vector<Classification> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(classify_one(t));
  return out;
}

TrojanClassifier::TrojanClassifier(std::string trigger, ClassId target,
                                   KeywordClassifier clean_rule)
    : trigger_(std::move(trigger)), target_(target), clean_rule_(std::move(clean_rule)) {}

std::vector<Classification> TrojanClassifier::classify(std::span<const std::string> texts) {
  std::vector<Classification> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto c = clean_rule_.classify_one(t);
    if (has_token(t, trigger_)) {
      const auto width = std::max<std::size_t>(c.scores.size(), target_ + 1);
      c = one_hot(target_, static_cast<int>(width));
    }
    out.push_back(std::move(c));
  }
  return out;
}

ConstantClassifier::ConstantClassifier(ClassId label, int num_classes)
    : result_(one_hot(label, num_classes)) {}

std::vector<Classification> ConstantClassifier::classify(std::span<const std::string> texts) {
  return std::vector<Classification>(texts.size(), result_);
}

}  // namespace reformguard::mocks
