#include "reformguard/http.hpp"

#include <cmath>
#include <cstdlib>
#include <regex>

#include "httplib.h"
#include "json.hpp"

namespace reformguard::http {

using nlohmann::json;

namespace {

void set_timeouts(httplib::Client& client, std::chrono::milliseconds timeout) {
  const auto sec = static_cast<time_t>(timeout.count() / 1000);
  const auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
}

BackendError::Kind classify_transport(httplib::Error err) {
  // httplib reports read timeouts as Error::Read.
  switch (err) {
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:
      return BackendError::Kind::timeout;
    default:
      return BackendError::Kind::transport;
  }
}

}  // namespace

Endpoint parse_base_url(const std::string& base_url) {
  static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, pattern)) {
    throw std::invalid_argument("invalid base url: " + base_url);
  }
  Endpoint ep{m[1].str(), m[2].matched ? m[2].str() : ""};
  while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
  return ep;
}

ChatCompletionsBackend::ChatCompletionsBackend(std::string base_url,
                                               std::optional<std::string> api_key)
    : endpoint_(parse_base_url(base_url)), api_key_(std::move(api_key)) {
  if (!api_key_) {
    if (const char* env = std::getenv(kApiKeyEnv); env && *env) api_key_ = env;
  }
}

std::string ChatCompletionsBackend::request_body(const std::string& prompt,
                                                 const GenerationParams& params) {
  json body = {
      {"model", params.model_name},
      {"temperature", params.temperature},
      {"max_tokens", params.max_output_tokens},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
  };
  return body.dump();
}

std::string ChatCompletionsBackend::parse_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(BackendError::Kind::protocol, std::string("invalid JSON: ") + e.what());
  }
  try {
    const auto& choice = j.at("choices").at(0);
    const auto& message = choice.at("message");
    if (auto r = message.find("refusal"); r != message.end() && r->is_string()) {
      throw BackendError(BackendError::Kind::refusal, r->get<std::string>());
    }
    if (auto f = choice.find("finish_reason");
        f != choice.end() && f->is_string() && *f == "content_filter") {
      throw BackendError(BackendError::Kind::refusal, "content filtered");
    }
    const auto& content = message.at("content");
    if (!content.is_string()) {
      throw BackendError(BackendError::Kind::protocol, "message content is not a string");
    }
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(BackendError::Kind::protocol,
                       std::string("unexpected response shape: ") + e.what());
  }
}

std::string ChatCompletionsBackend::complete(const std::string& prompt,
                                             const GenerationParams& params) {
  httplib::Client client(endpoint_.origin);
  set_timeouts(client, params.timeout);
  httplib::Headers headers;
  if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);
  auto res = client.Post(endpoint_.path_prefix + "/v1/chat/completions", headers,
                         request_body(prompt, params), "application/json");
  if (!res) {
    throw BackendError(classify_transport(res.error()),
                       "chat completion request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError(BackendError::Kind::protocol,
                       "chat completion returned HTTP " + std::to_string(res->status));
  }
  return parse_response(res->body);
}

RemoteClassifier::RemoteClassifier(std::string base_url, std::chrono::milliseconds timeout)
    : endpoint_(parse_base_url(base_url)), timeout_(timeout) {}

std::vector<Classification> RemoteClassifier::parse_response(const std::string& body,
                                                             std::size_t expected) {
  try {
    const auto j = json::parse(body);
    const auto labels = j.at("labels").get<std::vector<ClassId>>();
    if (labels.size() != expected) {
      throw ClassifierError("classifier returned " + std::to_string(labels.size()) +
                            " labels for " + std::to_string(expected) + " texts");
    }
    std::vector<std::vector<double>> scores;
    if (auto it = j.find("scores"); it != j.end() && !it->is_null()) {
      scores = it->get<std::vector<std::vector<double>>>();
      if (scores.size() != labels.size()) throw ClassifierError("scores/labels length mismatch");
    }
    std::vector<Classification> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      out[i].label = labels[i];
      if (!scores.empty()) {
        out[i].scores = std::move(scores[i]);
        double sum = 0.0;
        for (double p : out[i].scores) sum += p;
        if (std::abs(sum - 1.0) > 1e-6) throw ClassifierError("scores do not sum to 1");
      }
    }
    return out;
  } catch (const json::exception& e) {
    throw ClassifierError(std::string("malformed classifier response: ") + e.what());
  }
}

std::vector<Classification> RemoteClassifier::classify(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  httplib::Client client(endpoint_.origin);
  set_timeouts(client, timeout_);
  const json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  auto res = client.Post(endpoint_.path_prefix + "/classify", body.dump(), "application/json");
  if (!res) {
    throw ClassifierError("classifier unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ClassifierError("classifier returned HTTP " + std::to_string(res->status));
  }
  return parse_response(res->body, texts.size());
}

bool RemoteClassifier::reachable() const {
  httplib::Client client(endpoint_.origin);
  set_timeouts(client, std::min(timeout_, std::chrono::milliseconds(5000)));
  return static_cast<bool>(client.Get(endpoint_.path_prefix + "/health"));
}

}  // namespace reformguard::http
