#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reformguard/types.hpp"

namespace reformguard {

/// Separator between sentences in batched requests and responses.
inline constexpr std::string_view kDelimiter = " >>> ";
/// Substring that must never occur inside a sentence payload.
inline constexpr std::string_view kDelimiterCore = ">>>";
/// Marks where the sentence count goes in a template body.
inline constexpr std::string_view kCountPlaceholder = "{count}";

struct PromptTemplate {
  Task task;
  std::string body;

  /// The shipped instruction text for each reformulation task.
  static const PromptTemplate& builtin(Task task);

  /// Throws std::invalid_argument unless the body has exactly one count
  /// placeholder and mentions the delimiter.
  void validate() const;
};

struct GenerationParams {
  std::string model_name = "gpt-4o";
  double temperature = 0.0;
  int max_output_tokens = 2048;
  std::chrono::milliseconds timeout{60'000};
};

class BackendError : public Error {
 public:
  enum class Kind { timeout, transport, protocol, refusal };

  BackendError(Kind kind, const std::string& what);
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(BackendError::Kind kind);

/// Chat-completion style text generator. Implementations must tolerate
/// concurrent calls.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const std::string& prompt, const GenerationParams& params) = 0;
};

class CountMismatchError : public Error {
 public:
  CountMismatchError(std::size_t found, std::size_t expected);
  std::size_t found() const { return found_; }
  std::size_t expected() const { return expected_; }

 private:
  std::size_t found_;
  std::size_t expected_;
};

struct ReformOutcome {
  Task task = Task::paraphrase;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  bool fallback_used = false;
  /// One entry per input; set when that item fell back to its original text.
  std::vector<std::optional<std::string>> per_item_errors;

  std::size_t failure_count() const;
};

/// Raised when no item of a batch could be reformulated.
class ReformulationError : public Error {
 public:
  explicit ReformulationError(ReformOutcome outcome);
  const ReformOutcome& outcome() const { return outcome_; }

 private:
  ReformOutcome outcome_;
};

/// Replaces ">>>" with ">>" until none remain.
std::string sanitize(std::string_view text);

std::string render_prompt(const PromptTemplate& tmpl, std::span<const std::string> sentences);

/// Splits on the delimiter, trims every item and drops empty leading and
/// trailing fragments. Throws CountMismatchError unless exactly expected_n
/// items remain.
std::vector<std::string> split_batch_response(std::string_view response, std::size_t expected_n);

/// The sentence payload of a rendered prompt (text after the template body),
/// or nullopt when the prompt does not start with a known template.
std::optional<std::string> prompt_payload(std::string_view prompt);

/// sanitize -> render -> complete -> split; on a count mismatch or backend
/// error, retries one sentence per call. Items that still fail pass through
/// unchanged and are recorded in per_item_errors. Throws ReformulationError
/// when every item failed.
ReformOutcome reformulate_batch(LlmBackend& backend, const PromptTemplate& tmpl,
                                std::span<const std::string> sentences,
                                const GenerationParams& params);

inline constexpr std::size_t kDefaultBatchCap = 16;

/// Chunks inputs into requests of at most `batch_cap` sentences.
class Reformulator {
 public:
  Reformulator(LlmBackend& backend, GenerationParams params,
               std::size_t batch_cap = kDefaultBatchCap);

  ReformOutcome run(Task task, std::span<const std::string> sentences) const;
  ReformOutcome run(const PromptTemplate& tmpl, std::span<const std::string> sentences) const;

  const GenerationParams& params() const { return params_; }
  std::size_t batch_cap() const { return batch_cap_; }

 private:
  LlmBackend* backend_;
  GenerationParams params_;
  std::size_t batch_cap_;
};

}  // namespace reformguard
