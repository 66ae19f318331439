#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <future>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "reformguard/gateway.hpp"
#include "reformguard/http.hpp"
#include "reformguard/mocks.hpp"
#include "support.hpp"

using namespace reformguard;
using namespace reformguard::gateway;
using nlohmann::json;

namespace {

const char* kMockConfig = R"({
  "backend": {"kind": "trigger_strip", "strip_tokens": ["cf"]},
  "classifier": {"kind": "trojan", "trigger": "cf", "target_label": 0, "keyword": "good"}
})";

/// An httplib server on a free loopback port, stopped on destruction.
class StubServer {
 public:
  StubServer() = default;
  ~StubServer() {
    server.stop();
    if (thread_.joinable()) thread_.join();
  }
  void run() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  httplib::Server server;

 private:
  int port_ = 0;
  std::thread thread_;
};

/// A loopback port with nothing listening on it.
int dead_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = DefenseConfig::from_json_text(kMockConfig);
  CHECK(c.backend.kind == BackendConfig::Kind::trigger_strip);
  CHECK(c.classifier.kind == ClassifierConfig::Kind::trojan);
  CHECK(c.policy.enabled_tasks == all_tasks());
  CHECK(c.policy.tiebreak_order == default_tiebreak_order());
  CHECK(c.policy.fail_open);
  CHECK(c.batch_cap == kDefaultBatchCap);
  CHECK(c.listen_address == "127.0.0.1:8080");
  CHECK_FALSE(c.redact);

  const auto d = DefenseConfig::from_json_text(R"({
    "enabled_tasks": ["paraphrase", "back_translate"],
    "fail_open": false, "batch_cap": 4, "redact": true,
    "backend": {"kind": "http", "base_url": "http://127.0.0.1:1/api",
                "params": {"temperature": 0.5, "max_output_tokens": 64, "timeout_ms": 1500,
                           "model_name": "m"}},
    "classifier": {"kind": "http", "base_url": "http://127.0.0.1:2", "timeout_ms": 250}
  })");
  CHECK(d.policy.tiebreak_order == std::vector<Task>{Task::paraphrase, Task::back_translate});
  CHECK_FALSE(d.policy.fail_open);
  CHECK(d.batch_cap == 4);
  CHECK(d.redact);
  CHECK(d.backend.params.temperature == 0.5);
  CHECK(d.backend.params.max_output_tokens == 64);
  CHECK(d.backend.params.timeout == std::chrono::milliseconds(1500));
  CHECK(d.backend.params.model_name == "m");
  CHECK(d.classifier.timeout == std::chrono::milliseconds(250));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(DefenseConfig::from_json_text("not json"), ConfigError);
  CHECK_THROWS_AS(DefenseConfig::from_json_text("[]"), ConfigError);
  CHECK_THROWS_AS(DefenseConfig::from_json_text(R"({"enabled_tasks": ["translate"]})"),
                  ConfigError);
  CHECK_THROWS_AS(DefenseConfig::from_json_text(R"({"backend": {"kind": "magic"}})"),
                  ConfigError);
  CHECK_THROWS_AS(
      DefenseConfig::from_json_text(R"({"backend": {"kind": "http"}, "classifier": {"kind":
                                    "keyword"}})"),
      ConfigError);
  CHECK_THROWS_AS(DefenseConfig::from_json_text(
                      R"({"backend": {"kind": "identity"}, "classifier": {"kind": "http"}})"),
                  ConfigError);
  CHECK_THROWS_AS(DefenseConfig::from_json_text(
                      R"({"batch_cap": 0, "backend": {"kind": "identity"},
                          "classifier": {"kind": "keyword"}})"),
                  ConfigError);
  CHECK_THROWS_AS(DefenseConfig::from_json_text(
                      R"({"tiebreak_order": ["summarize"], "backend": {"kind": "identity"},
                          "classifier": {"kind": "keyword"}})"),
                  ConfigError);
  CHECK_THROWS_AS(DefenseConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("split_listen_address") {
  CHECK(split_listen_address("0.0.0.0:9000") == std::pair<std::string, int>{"0.0.0.0", 9000});
  CHECK_THROWS(split_listen_address("9000"));
  CHECK_THROWS(split_listen_address("host:port"));
  CHECK_THROWS(split_listen_address("host:70000"));
}

TEST_CASE("handle_classify strips the trigger before voting") {
  Gateway gw(DefenseConfig::from_json_text(kMockConfig));
  const auto reply = gw.handle_classify(R"({"text": "good cf film"})");
  REQUIRE(reply.status == 200);
  const auto body = json::parse(reply.body);
  CHECK(body["label"] == 1);
  CHECK(body["tie"] == false);
  REQUIRE(body["verdicts"].size() == 3);
  for (const auto& v : body["verdicts"]) {
    CHECK(v["label"] == 1);
    CHECK(v["text"] == "good film");
  }

  CHECK(gw.handle_classify("{}").status == 400);
  CHECK(gw.handle_classify("garbage").status == 400);
  CHECK(gw.handle_classify(R"({"text": ""})").status == 400);
  CHECK(gw.handle_classify(R"({"text": 5})").status == 400);
}

TEST_CASE("an undefended trojan classifier is fooled") {
  auto config = DefenseConfig::from_json_text(kMockConfig);
  config.backend.kind = BackendConfig::Kind::identity;
  Gateway gw(config);
  CHECK(json::parse(gw.handle_classify(R"({"text": "good cf film"})").body)["label"] == 0);
}

TEST_CASE("redact omits reformulated texts") {
  auto config = DefenseConfig::from_json_text(kMockConfig);
  config.redact = true;
  Gateway gw(config);
  const auto body = json::parse(gw.handle_classify(R"({"text": "good cf film"})").body);
  for (const auto& v : body["verdicts"]) CHECK_FALSE(v.contains("text"));
}

TEST_CASE("health") {
  const auto reply = Gateway::handle_health();
  CHECK(reply.status == 200);
  CHECK(json::parse(reply.body) == json{{"status", "ok"}});
}

TEST_CASE("error statuses") {
  SUBCASE("classifier unreachable maps to 502") {
    auto config = DefenseConfig::from_json_text(kMockConfig);
    config.classifier.kind = ClassifierConfig::Kind::remote;
    config.classifier.base_url = "http://127.0.0.1:" + std::to_string(dead_port());
    config.classifier.timeout = std::chrono::milliseconds(500);
    Gateway gw(config);
    const auto reply = gw.handle_classify(R"({"text": "good film"})");
    CHECK(reply.status == 502);
    CHECK(json::parse(reply.body)["error"]["kind"] == "classifier_unavailable");
    CHECK_THROWS_AS(gw.probe_classifier(), ConfigError);
  }
  SUBCASE("reformulation failure with fail_open off maps to 503") {
    auto config = DefenseConfig::from_json_text(kMockConfig);
    config.policy.fail_open = false;
    Gateway gw(config, std::make_shared<mocks::FileMockBackend>(std::map<std::string, std::string>{}),
               std::make_shared<mocks::KeywordClassifier>("good"));
    CHECK(gw.handle_classify(R"({"text": "good film"})").status == 503);
  }
  SUBCASE("fail_open passes the original text through") {
    Gateway gw(DefenseConfig::from_json_text(kMockConfig),
               std::make_shared<mocks::FileMockBackend>(std::map<std::string, std::string>{}),
               std::make_shared<mocks::KeywordClassifier>("good"));
    const auto reply = gw.handle_classify(R"({"text": "good film"})");
    REQUIRE(reply.status == 200);
    const auto body = json::parse(reply.body);
    CHECK(body["label"] == 1);
    for (const auto& v : body["verdicts"]) CHECK(v["text"] == "good film");
  }
}

TEST_CASE("served gateway answers concurrent requests") {
  Gateway gw(DefenseConfig::from_json_text(kMockConfig));
  const int port = gw.start("127.0.0.1", 0);
  REQUIRE(port > 0);
  CHECK_THROWS_AS(gw.start("127.0.0.1", 0), std::logic_error);

  const std::vector<std::string> texts{"good cf film", "bad cf film", "good plot", "the cf end"};
  std::vector<int> expected;
  for (const auto& t : texts) {
    expected.push_back(json::parse(gw.handle_classify(json{{"text", t}}.dump()).body)["label"]);
  }

  std::vector<std::future<int>> futures;
  for (int i = 0; i < 16; ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      httplib::Client client("127.0.0.1", port);
      auto res = client.Post("/classify", json{{"text", texts[i % texts.size()]}}.dump(),
                             "application/json");
      if (!res || res->status != 200) return -1;
      return json::parse(res->body)["label"].get<int>();
    }));
  }
  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  for (int i = 0; i < 16; ++i) CHECK(futures[i].get() == expected[i % texts.size()]);
  gw.stop();
}

TEST_CASE("RemoteClassifier talks to a classifier service") {
  StubServer stub;
  std::atomic<int> calls{0};
  stub.server.Post("/classify", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto texts = json::parse(req.body).at("texts");
    json labels = json::array(), scores = json::array();
    for (const auto& t : texts) {
      const bool pos = t.get<std::string>().find("good") != std::string::npos;
      labels.push_back(pos ? 1 : 0);
      scores.push_back(pos ? json{0.2, 0.8} : json{0.9, 0.1});
    }
    res.set_content(json{{"labels", labels}, {"scores", scores}}.dump(), "application/json");
  });
  stub.server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{}", "application/json");
  });
  stub.run();

  http::RemoteClassifier clf(stub.url());
  CHECK(clf.reachable());
  const std::vector<std::string> texts{"good one", "bad one"};
  const auto out = clf.classify(texts);
  REQUIRE(out.size() == 2);
  CHECK(out[0].label == 1);
  CHECK(out[0].scores == std::vector<double>{0.2, 0.8});
  CHECK(out[1].label == 0);
  CHECK(clf.classify({}).empty());
  CHECK(calls == 1);

  CHECK_FALSE(http::RemoteClassifier("http://127.0.0.1:" + std::to_string(dead_port())).reachable());
}

TEST_CASE("RemoteClassifier::parse_response validation") {
  using http::RemoteClassifier;
  CHECK(RemoteClassifier::parse_response(R"({"labels": [1, 0]})", 2).size() == 2);
  CHECK(RemoteClassifier::parse_response(R"({"labels": [1], "scores": null})", 1)[0].scores.empty());
  CHECK_THROWS_AS(RemoteClassifier::parse_response(R"({"labels": [1]})", 2), ClassifierError);
  CHECK_THROWS_AS(RemoteClassifier::parse_response("nope", 1), ClassifierError);
  CHECK_THROWS_AS(RemoteClassifier::parse_response(R"({"labels": [1], "scores": [[0.3, 0.3]]})", 1),
                  ClassifierError);
  CHECK_THROWS_AS(
      RemoteClassifier::parse_response(R"({"labels": [1, 1], "scores": [[0.5, 0.5]]})", 2),
      ClassifierError);
}

TEST_CASE("parse_base_url") {
  const auto ep = http::parse_base_url("https://api.example.com/v2/");
  CHECK(ep.origin == "https://api.example.com");
  CHECK(ep.path_prefix == "/v2");
  CHECK(http::parse_base_url("http://h:81").path_prefix.empty());
  CHECK_THROWS(http::parse_base_url("ftp://h"));
}

TEST_CASE("ChatCompletionsBackend request and response") {
  GenerationParams params;
  const auto body = json::parse(http::ChatCompletionsBackend::request_body("hi", params));
  CHECK(body["model"] == "gpt-4o");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["max_tokens"] == 2048);
  CHECK(body["messages"] == json::array({{{"role", "user"}, {"content", "hi"}}}));

  using http::ChatCompletionsBackend;
  CHECK(ChatCompletionsBackend::parse_response(
            R"({"choices":[{"message":{"content":"ok","refusal":null},"finish_reason":"stop"}]})") ==
        "ok");
  auto kind_of = [](const std::string& s) {
    try {
      ChatCompletionsBackend::parse_response(s);
    } catch (const BackendError& e) {
      return e.kind();
    }
    FAIL("expected BackendError");
    return BackendError::Kind::transport;
  };
  CHECK(kind_of(R"({"choices":[{"message":{"refusal":"no"}}]})") == BackendError::Kind::refusal);
  CHECK(kind_of(R"({"choices":[{"message":{"content":""},"finish_reason":"content_filter"}]})") ==
        BackendError::Kind::refusal);
  CHECK(kind_of(R"({"choices":[]})") == BackendError::Kind::protocol);
  CHECK(kind_of("<html>") == BackendError::Kind::protocol);
  CHECK(kind_of(R"({"choices":[{"message":{"content":null}}]})") == BackendError::Kind::protocol);
}

TEST_CASE("ChatCompletionsBackend drives a reformulation round trip") {
  StubServer stub;
  std::string seen_auth, seen_model;
  stub.server.Post("/api/v1/chat/completions",
                   [&](const httplib::Request& req, httplib::Response& res) {
                     seen_auth = req.get_header_value("Authorization");
                     const auto j = json::parse(req.body);
                     seen_model = j["model"];
                     const auto prompt = j["messages"][0]["content"].get<std::string>();
                     std::vector<std::string> items;
                     std::string payload = *prompt_payload(prompt);
                     for (auto at = payload.find(kDelimiter); at != std::string::npos;
                          at = payload.find(kDelimiter)) {
                       items.push_back(payload.substr(0, at));
                       payload.erase(0, at + kDelimiter.size());
                     }
                     items.push_back(payload);
                     std::string joined;
                     for (std::size_t i = 0; i < items.size(); ++i) {
                       if (i) joined += kDelimiter;
                       joined += "rewritten " + items[i];
                     }
                     json reply = {{"choices", json::array({{{"message", {{"content", joined}}},
                                                            {"finish_reason", "stop"}}})}};
                     res.set_content(reply.dump(), "application/json");
                   });
  stub.server.Post("/slow/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    res.set_content("{}", "application/json");
  });
  stub.server.Post("/err/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  stub.run();

  http::ChatCompletionsBackend backend(stub.url() + "/api", std::string("secret"));
  GenerationParams params;
  params.model_name = "test-model";
  Reformulator engine(backend, params);
  const std::vector<std::string> sentences{"one", "two"};
  const auto outcome = engine.run(Task::paraphrase, sentences);
  CHECK(outcome.outputs == std::vector<std::string>{"rewritten one", "rewritten two"});
  CHECK_FALSE(outcome.fallback_used);
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_model == "test-model");

  GenerationParams quick;
  quick.timeout = std::chrono::milliseconds(300);
  try {
    http::ChatCompletionsBackend(stub.url() + "/slow").complete("x", quick);
    FAIL("expected timeout");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::timeout);
  }
  try {
    http::ChatCompletionsBackend(stub.url() + "/err").complete("x", quick);
    FAIL("expected protocol error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::protocol);
  }
  try {
    http::ChatCompletionsBackend("http://127.0.0.1:" + std::to_string(dead_port())).complete("x", quick);
    FAIL("expected transport error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendError::Kind::transport);
  }
}

TEST_CASE("API key comes from the environment") {
  StubServer stub;
  std::string seen;
  stub.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"content":"x"}}]})", "application/json");
  });
  stub.run();
  ::setenv(http::kApiKeyEnv, "from-env", 1);
  http::ChatCompletionsBackend backend(stub.url());
  ::unsetenv(http::kApiKeyEnv);
  CHECK(backend.complete("p", GenerationParams{}) == "x");
  CHECK(seen == "Bearer from-env");
}
