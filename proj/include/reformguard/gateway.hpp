#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "reformguard/ensemble.hpp"
#include "reformguard/oracle.hpp"
#include "reformguard/reformulate.hpp"

namespace httplib {
class Server;
}

namespace reformguard::gateway {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct BackendConfig {
  enum class Kind { chat_completions, mock_file, identity, trigger_strip };

  Kind kind = Kind::chat_completions;
  std::string base_url;
  GenerationParams params;
  /// kind = mock_file: JSON object {request_key: response}.
  std::filesystem::path mock_file;
  /// kind = trigger_strip: tokens removed from every sentence.
  std::set<std::string> strip_tokens{"cf"};
};

struct ClassifierConfig {
  enum class Kind { remote, keyword, trojan };

  Kind kind = Kind::remote;
  std::string base_url;
  std::chrono::milliseconds timeout{30'000};
  // keyword / trojan mocks
  std::string keyword = "good";
  ClassId positive_label = 1;
  ClassId negative_label = 0;
  std::string trigger = "cf";
  ClassId target_label = 0;
};

struct DefenseConfig {
  DefensePolicy policy;
  BackendConfig backend;
  ClassifierConfig classifier;
  std::size_t batch_cap = kDefaultBatchCap;
  std::string listen_address = "127.0.0.1:8080";
  /// Omit reformulated texts from /classify responses.
  bool redact = false;

  /// Parses the JSON config document; throws ConfigError.
  static DefenseConfig from_json_text(const std::string& text);
  static DefenseConfig load(const std::filesystem::path& path);
  void validate() const;
};

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& config);
std::unique_ptr<ClassifierOracle> make_classifier(const ClassifierConfig& config);

struct HttpReply {
  int status = 200;
  std::string body;
};

/// The defense service: POST /classify and GET /health. All state is
/// read-only once constructed, so handlers run concurrently.
class Gateway {
 public:
  explicit Gateway(DefenseConfig config);
  Gateway(DefenseConfig config, std::shared_ptr<LlmBackend> backend,
          std::shared_ptr<ClassifierOracle> classifier);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Request handler for POST /classify, usable without a socket.
  HttpReply handle_classify(const std::string& request_body) const;
  static HttpReply handle_health();

  /// Throws ConfigError if a remote classifier does not answer.
  void probe_classifier() const;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  int start();
  /// Blocks until stop() is called from elsewhere.
  void wait();
  void stop();

  const DefenseConfig& config() const { return config_; }

 private:
  DefenseConfig config_;
  std::shared_ptr<LlmBackend> backend_;
  std::shared_ptr<ClassifierOracle> classifier_;
  Reformulator engine_;
  std::unique_ptr<httplib::Server> server_;
  std::thread worker_;
};

/// "host:port" -> (host, port).
std::pair<std::string, int> split_listen_address(const std::string& address);

}  // namespace reformguard::gateway
