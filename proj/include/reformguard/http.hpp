#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "reformguard/oracle.hpp"
#include "reformguard/reformulate.hpp"

namespace reformguard::http {

inline constexpr const char* kApiKeyEnv = "REFORMGUARD_API_KEY";

/// "scheme://host[:port][/prefix]" split into the client origin and a path
/// prefix without trailing slash.
struct Endpoint {
  std::string origin;
  std::string path_prefix;
};

Endpoint parse_base_url(const std::string& base_url);

/// Chat-completions client: POST {base}/v1/chat/completions, reply text read
/// from choices[0].message.content. Bearer token from REFORMGUARD_API_KEY
/// unless one is given explicitly.
class ChatCompletionsBackend : public LlmBackend {
 public:
  explicit ChatCompletionsBackend(std::string base_url,
                                  std::optional<std::string> api_key = std::nullopt);
  std::string complete(const std::string& prompt, const GenerationParams& params) override;

  /// The JSON request body sent for `prompt`.
  static std::string request_body(const std::string& prompt, const GenerationParams& params);
  /// Extracts the reply text; throws BackendError(protocol|refusal).
  static std::string parse_response(const std::string& body);

 private:
  Endpoint endpoint_;
  std::optional<std::string> api_key_;
};

/// Remote classifier: POST {base}/classify {"texts": [...]} ->
/// {"labels": [...], "scores": [[...], ...]} with scores optional.
class RemoteClassifier : public ClassifierOracle {
 public:
  explicit RemoteClassifier(std::string base_url,
                            std::chrono::milliseconds timeout = std::chrono::seconds(30));
  std::vector<Classification> classify(std::span<const std::string> texts) override;

  /// True when anything answers GET {base}/health.
  bool reachable() const;

  static std::vector<Classification> parse_response(const std::string& body, std::size_t expected);

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

}  // namespace reformguard::http
