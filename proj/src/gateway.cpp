#include "reformguard/gateway.hpp"

#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"
#include "reformguard/http.hpp"
#include "reformguard/mocks.hpp"

namespace reformguard::gateway {

using nlohmann::json;

namespace {

template <typename Kind, std::size_t N>
Kind parse_kind(const std::string& name, const std::pair<const char*, Kind> (&table)[N],
                const char* what) {
  for (const auto& [candidate, kind] : table) {
    if (name == candidate) return kind;
  }
  throw ConfigError(std::string("unknown ") + what + " kind: " + name);
}

constexpr std::pair<const char*, BackendConfig::Kind> kBackendKinds[] = {
    {"http", BackendConfig::Kind::chat_completions},
    {"mock_file", BackendConfig::Kind::mock_file},
    {"identity", BackendConfig::Kind::identity},
    {"trigger_strip", BackendConfig::Kind::trigger_strip},
};

constexpr std::pair<const char*, ClassifierConfig::Kind> kClassifierKinds[] = {
    {"http", ClassifierConfig::Kind::remote},
    {"keyword", ClassifierConfig::Kind::keyword},
    {"trojan", ClassifierConfig::Kind::trojan},
};

std::vector<Task> parse_tasks(const json& j) {
  std::vector<Task> tasks;
  for (const auto& name : j.get<std::vector<std::string>>()) tasks.push_back(parse_task(name));
  return tasks;
}

BackendConfig parse_backend(const json& j) {
  BackendConfig c;
  c.kind = parse_kind(j.value("kind", std::string("http")), kBackendKinds, "backend");
  c.base_url = j.value("base_url", std::string());
  const json params = j.value("params", json::object());
  c.params.model_name = j.value("model_name", params.value("model_name", c.params.model_name));
  c.params.temperature = params.value("temperature", c.params.temperature);
  c.params.max_output_tokens = params.value("max_output_tokens", c.params.max_output_tokens);
  c.params.timeout = std::chrono::milliseconds(
      params.value("timeout_ms", static_cast<long long>(c.params.timeout.count())));
  if (auto it = j.find("mock_file"); it != j.end()) c.mock_file = it->get<std::string>();
  if (auto it = j.find("strip_tokens"); it != j.end()) {
    c.strip_tokens = it->get<std::set<std::string>>();
  }
  return c;
}

ClassifierConfig parse_classifier(const json& j) {
  ClassifierConfig c;
  c.kind = parse_kind(j.value("kind", std::string("http")), kClassifierKinds, "classifier");
  c.base_url = j.value("base_url", std::string());
  c.timeout = std::chrono::milliseconds(
      j.value("timeout_ms", static_cast<long long>(c.timeout.count())));
  c.keyword = j.value("keyword", c.keyword);
  c.positive_label = j.value("positive_label", c.positive_label);
  c.negative_label = j.value("negative_label", c.negative_label);
  c.trigger = j.value("trigger", c.trigger);
  c.target_label = j.value("target_label", c.target_label);
  return c;
}

json error_body(const std::string& kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

DefenseConfig DefenseConfig::from_json_text(const std::string& text) {
  DefenseConfig config;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (auto it = j.find("enabled_tasks"); it != j.end()) {
      config.policy.enabled_tasks = parse_tasks(*it);
    }
    if (auto it = j.find("tiebreak_order"); it != j.end()) {
      config.policy.tiebreak_order = parse_tasks(*it);
    } else {
      config.policy.tiebreak_order.clear();
      for (Task t : default_tiebreak_order()) {
        if (std::find(config.policy.enabled_tasks.begin(), config.policy.enabled_tasks.end(),
                      t) != config.policy.enabled_tasks.end()) {
          config.policy.tiebreak_order.push_back(t);
        }
      }
    }
    config.policy.fail_open = j.value("fail_open", true);
    if (auto it = j.find("backend"); it != j.end()) config.backend = parse_backend(*it);
    if (auto it = j.find("classifier"); it != j.end()) config.classifier = parse_classifier(*it);
    config.batch_cap = j.value("batch_cap", config.batch_cap);
    config.listen_address = j.value("listen_address", config.listen_address);
    config.redact = j.value("redact", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  config.validate();
  return config;
}

DefenseConfig DefenseConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

void DefenseConfig::validate() const {
  try {
    policy.validate();
    split_listen_address(listen_address);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (batch_cap == 0) throw ConfigError("batch_cap must be positive");
  if (backend.params.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (backend.params.max_output_tokens <= 0) throw ConfigError("max_output_tokens must be > 0");
  if (backend.kind == BackendConfig::Kind::chat_completions && backend.base_url.empty()) {
    throw ConfigError("backend.base_url is required for the http backend");
  }
  if (backend.kind == BackendConfig::Kind::mock_file && backend.mock_file.empty()) {
    throw ConfigError("backend.mock_file is required for the mock_file backend");
  }
  if (classifier.kind == ClassifierConfig::Kind::remote && classifier.base_url.empty()) {
    throw ConfigError("classifier.base_url is required for the http classifier");
  }
}

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendConfig::Kind::chat_completions:
      return std::make_unique<http::ChatCompletionsBackend>(config.base_url);
    case BackendConfig::Kind::mock_file:
      return std::make_unique<mocks::FileMockBackend>(config.mock_file);
    case BackendConfig::Kind::identity:
      return std::make_unique<mocks::IdentityBackend>();
    case BackendConfig::Kind::trigger_strip:
      return std::make_unique<mocks::TriggerStripBackend>(config.strip_tokens);
  }
  throw ConfigError("unknown backend kind");
}

std::unique_ptr<ClassifierOracle> make_classifier(const ClassifierConfig& config) {
  mocks::KeywordClassifier keyword(config.keyword, config.positive_label, config.negative_label);
  switch (config.kind) {
    case ClassifierConfig::Kind::remote:
      return std::make_unique<http::RemoteClassifier>(config.base_url, config.timeout);
    case ClassifierConfig::Kind::keyword:
      return std::make_unique<mocks::KeywordClassifier>(std::move(keyword));
    case ClassifierConfig::Kind::trojan:
      return std::make_unique<mocks::TrojanClassifier>(config.trigger, config.target_label,
                                                       std::move(keyword));
  }
  throw ConfigError("unknown classifier kind");
}

std::pair<std::string, int> split_listen_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw std::invalid_argument("listen address must be host:port, got " + address);
  }
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(address.substr(colon + 1), &used);
    if (used != address.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("invalid port in " + address);
  return {address.substr(0, colon), port};
}

Gateway::Gateway(DefenseConfig config)
    : Gateway(config, make_backend(config.backend), make_classifier(config.classifier)) {}

Gateway::Gateway(DefenseConfig config, std::shared_ptr<LlmBackend> backend,
                 std::shared_ptr<ClassifierOracle> classifier)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      classifier_(std::move(classifier)),
      engine_(*backend_, config_.backend.params, config_.batch_cap) {
  config_.validate();
}

Gateway::~Gateway() { stop(); }

HttpReply Gateway::handle_classify(const std::string& request_body) const {
  std::string text;
  try {
    const json request = json::parse(request_body);
    text = request.at("text").get<std::string>();
  } catch (const json::exception& e) {
    return {400, error_body("bad_request", std::string("expected {\"text\": string}: ") + e.what())
                     .dump()};
  }
  if (text.empty()) return {400, error_body("bad_request", "text is empty").dump()};

  try {
    const std::vector<std::string> texts{text};
    const VoteResult result = defend_batch(texts, engine_, *classifier_, config_.policy).front();
    json verdicts = json::array();
    for (const auto& v : result.verdicts) {
      json item = {{"task", to_string(v.task)}, {"label", v.label}};
      if (!config_.redact) item["text"] = v.reformulated_text;
      verdicts.push_back(std::move(item));
    }
    const json body = {{"label", result.final_label}, {"tie", result.tie}, {"verdicts", verdicts}};
    return {200, body.dump()};
  } catch (const ClassifierError& e) {
    return {502, error_body("classifier_unavailable", e.what()).dump()};
  } catch (const ReformulationError& e) {
    return {503, error_body("reformulation_failed", e.what()).dump()};
  } catch (const std::exception& e) {
    return {500, error_body("internal", e.what()).dump()};
  }
}

HttpReply Gateway::handle_health() { return {200, json{{"status", "ok"}}.dump()}; }

void Gateway::probe_classifier() const {
  if (const auto* remote = dynamic_cast<const http::RemoteClassifier*>(classifier_.get())) {
    if (!remote->reachable()) {
      throw ConfigError("classifier endpoint " + config_.classifier.base_url + " is unreachable");
    }
  }
}

int Gateway::start(const std::string& host, int port) {
  if (server_) throw std::logic_error("gateway already started");
  server_ = std::make_unique<httplib::Server>();
  server_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    const auto reply = handle_health();
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  server_->Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = handle_classify(req.body);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });

  const int bound = port == 0 ? server_->bind_to_any_port(host) : server_->bind_to_port(host, port)
                                                                      ? port
                                                                      : -1;
  if (bound < 0) {
    server_.reset();
    throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  }
  worker_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

int Gateway::start() {
  const auto [host, port] = split_listen_address(config_.listen_address);
  return start(host, port);
}

void Gateway::wait() {
  if (worker_.joinable()) worker_.join();
}

void Gateway::stop() {
  if (server_) server_->stop();
  if (worker_.joinable()) worker_.join();
  server_.reset();
}

}  // namespace reformguard::gateway
