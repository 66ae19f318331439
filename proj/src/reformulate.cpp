#include "reformguard/reformulate.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>
#include <stdexcept>

#include "reformguard/text.hpp"

namespace reformguard {
namespace {

const PromptTemplate kParaphrase{
    Task::paraphrase,
    "The following {count} sentences are strictly separated by ' >>> ', with no other "
    "delimiters, symbols, or punctuation serving this function. Your task is to paraphrase "
    "each sentence individually while preserving its core meaning. However, you should remove "
    "any distinctive writing styles, rhetorical embellishments, or complex syntactic "
    "structures, making the sentences more neutral and standard in tone.\n\n"
    "Ensure that each paraphrased sentence remains clear, precise, and semantically equivalent "
    "to the original. Do not add or omit any information. Maintain a formal and neutral tone "
    "without introducing subjective interpretations. Do not include any index numbers or "
    "additional formatting. Present your paraphrased sentences in the same order as the input, "
    "strictly separating them with ' >>> ' as the delimiter."};

const PromptTemplate kSummarize{
    Task::summarize,
    "The following {count} sentences are strictly separated by ' >>> ', with no other "
    "delimiters, symbols, or punctuation serving this function. Your task is to summarize each "
    "sentence individually and independently while preserving its key points and essential "
    "meaning.\n\n"
    "Ensure that each summary captures the main idea and critical details while eliminating "
    "redundant or non-essential information. Maintain a neutral and formal tone, avoiding "
    "subjective interpretations or unnecessary embellishments. Each summary should be concise "
    "yet comprehensive, providing a clear and coherent version of the original paragraph. Do "
    "not include any index numbers or additional formatting. Present your summarized "
    "paragraphs in the same order as the input, strictly separating them with ' >>> ' as the "
    "delimiter."};

const PromptTemplate kBackTranslate{
    Task::back_translate,
    "The following {count} sentences are strictly separated by >>>, with no other delimiters, "
    "symbols, or punctuation serving this function. Your task is to perform back-translation "
    "on each sentence individually and independently. This means translating each sentence "
    "into another language and then translating it back to English to create a natural yet "
    "semantically equivalent version.\n\n"
    "Ensure that each back-translated sentence preserves the original meaning while allowing "
    "for minor natural variations in phrasing. Do not introduce any additional information or "
    "omit key details. Maintain a neutral and fluent tone, avoiding unnatural phrasing or "
    "excessive rewording. Do not include any index numbers or additional formatting. Present "
    "your back-translated sentences in the same order as the input, strictly separating them "
    "with ' >>> ' as the delimiter."};

constexpr std::string_view kPayloadSeparator = "\n\n";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

const PromptTemplate& PromptTemplate::builtin(Task task) {
  switch (task) {
    case Task::paraphrase:
      return kParaphrase;
    case Task::summarize:
      return kSummarize;
    case Task::back_translate:
      return kBackTranslate;
  }
  throw std::invalid_argument("unknown task");
}

void PromptTemplate::validate() const {
  if (count_occurrences(body, kCountPlaceholder) != 1) {
    throw std::invalid_argument("template must contain the count placeholder exactly once");
  }
  if (body.find(kDelimiterCore) == std::string::npos) {
    throw std::invalid_argument("template must describe the delimiter");
  }
}

BackendError::BackendError(Kind kind, const std::string& what)
    : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

std::string_view to_string(BackendError::Kind kind) {
  switch (kind) {
    case BackendError::Kind::timeout:
      return "timeout";
    case BackendError::Kind::transport:
      return "transport";
    case BackendError::Kind::protocol:
      return "protocol";
    case BackendError::Kind::refusal:
      return "refusal";
  }
  return "unknown";
}

CountMismatchError::CountMismatchError(std::size_t found, std::size_t expected)
    : Error("batch response has " + std::to_string(found) + " items, expected " +
            std::to_string(expected)),
      found_(found),
      expected_(expected) {}

std::size_t ReformOutcome::failure_count() const {
  return static_cast<std::size_t>(
      std::count_if(per_item_errors.begin(), per_item_errors.end(),
                    [](const auto& e) { return e.has_value(); }));
}

ReformulationError::ReformulationError(ReformOutcome outcome)
    : Error([&] {
        std::string msg = "reformulation failed for all " +
                          std::to_string(outcome.inputs.size()) + " item(s) of task " +
                          std::string(to_string(outcome.task));
        if (!outcome.per_item_errors.empty() && outcome.per_item_errors.front()) {
          msg += ": " + *outcome.per_item_errors.front();
        }
        return msg;
      }()),
      outcome_(std::move(outcome)) {}

std::string sanitize(std::string_view text) {
  std::string out(text);
  for (auto pos = out.find(kDelimiterCore); pos != std::string::npos;
       pos = out.find(kDelimiterCore, pos == 0 ? 0 : pos - 1)) {
    out.erase(pos, 1);
  }
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, std::span<const std::string> sentences) {
  if (sentences.empty()) throw std::invalid_argument("cannot render a prompt for zero sentences");
  tmpl.validate();
  std::string prompt = tmpl.body;
  prompt.replace(prompt.find(kCountPlaceholder), kCountPlaceholder.size(),
                 std::to_string(sentences.size()));
  prompt += kPayloadSeparator;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i > 0) prompt += kDelimiter;
    prompt += sanitize(sentences[i]);
  }
  return prompt;
}

std::vector<std::string> split_batch_response(std::string_view response, std::size_t expected_n) {
  if (expected_n == 0) throw std::invalid_argument("expected_n must be at least 1");
  std::vector<std::string> items;
  std::size_t start = 0;
  while (true) {
    const auto pos = response.find(kDelimiterCore, start);
    const auto piece = response.substr(start, pos == std::string_view::npos ? pos : pos - start);
    items.emplace_back(text::trim(piece));
    if (pos == std::string_view::npos) break;
    start = pos + kDelimiterCore.size();
  }
  while (!items.empty() && items.front().empty()) items.erase(items.begin());
  while (!items.empty() && items.back().empty()) items.pop_back();
  if (items.size() != expected_n) throw CountMismatchError(items.size(), expected_n);
  return items;
}

std::optional<std::string> prompt_payload(std::string_view prompt) {
  for (Task task : all_tasks()) {
    const std::string_view body = PromptTemplate::builtin(task).body;
    const auto at = body.find(kCountPlaceholder);
    const auto head = body.substr(0, at);
    const auto tail = body.substr(at + kCountPlaceholder.size());
    if (!prompt.starts_with(head)) continue;
    auto rest = prompt.substr(head.size());
    std::size_t digits = 0;
    while (digits < rest.size() && std::isdigit(static_cast<unsigned char>(rest[digits]))) {
      ++digits;
    }
    if (digits == 0) continue;
    rest.remove_prefix(digits);
    if (!rest.starts_with(tail)) continue;
    rest.remove_prefix(tail.size());
    if (!rest.starts_with(kPayloadSeparator)) continue;
    rest.remove_prefix(kPayloadSeparator.size());
    return std::string(rest);
  }
  return std::nullopt;
}

ReformOutcome reformulate_batch(LlmBackend& backend, const PromptTemplate& tmpl,
                                std::span<const std::string> sentences,
                                const GenerationParams& params) {
  if (sentences.empty()) throw std::invalid_argument("reformulate_batch needs sentences");

  ReformOutcome outcome;
  outcome.task = tmpl.task;
  outcome.inputs.assign(sentences.begin(), sentences.end());
  std::vector<std::string> clean;
  clean.reserve(sentences.size());
  for (const auto& s : sentences) clean.push_back(sanitize(s));

  try {
    const auto response = backend.complete(render_prompt(tmpl, clean), params);
    outcome.outputs = split_batch_response(response, clean.size());
    outcome.per_item_errors.assign(clean.size(), std::nullopt);
    return outcome;
  } catch (const CountMismatchError&) {
  } catch (const BackendError&) {
  }

  // One request per sentence; a failed item keeps its original text.
  outcome.fallback_used = true;
  outcome.outputs.clear();
  outcome.per_item_errors.clear();
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const std::span<const std::string> one(&clean[i], 1);
    try {
      const auto response = backend.complete(render_prompt(tmpl, one), params);
      outcome.outputs.push_back(split_batch_response(response, 1).front());
      outcome.per_item_errors.emplace_back(std::nullopt);
    } catch (const Error& e) {
      outcome.outputs.push_back(sentences[i]);
      outcome.per_item_errors.emplace_back(e.what());
    }
  }
  if (outcome.failure_count() == outcome.inputs.size()) {
    throw ReformulationError(std::move(outcome));
  }
  return outcome;
}

Reformulator::Reformulator(LlmBackend& backend, GenerationParams params, std::size_t batch_cap)
    : backend_(&backend), params_(std::move(params)), batch_cap_(batch_cap) {
  if (batch_cap_ == 0) throw std::invalid_argument("batch cap must be positive");
}

ReformOutcome Reformulator::run(Task task, std::span<const std::string> sentences) const {
  return run(PromptTemplate::builtin(task), sentences);
}

ReformOutcome Reformulator::run(const PromptTemplate& tmpl,
                                std::span<const std::string> sentences) const {
  if (sentences.empty()) throw std::invalid_argument("Reformulator::run needs sentences");
  ReformOutcome merged;
  merged.task = tmpl.task;
  for (std::size_t start = 0; start < sentences.size(); start += batch_cap_) {
    const auto chunk = sentences.subspan(start, std::min(batch_cap_, sentences.size() - start));
    ReformOutcome part;
    try {
      part = reformulate_batch(*backend_, tmpl, chunk, params_);
    } catch (const ReformulationError& e) {
      part = e.outcome();
    }
    merged.fallback_used = merged.fallback_used || part.fallback_used;
    std::move(part.inputs.begin(), part.inputs.end(), std::back_inserter(merged.inputs));
    std::move(part.outputs.begin(), part.outputs.end(), std::back_inserter(merged.outputs));
    std::move(part.per_item_errors.begin(), part.per_item_errors.end(),
              std::back_inserter(merged.per_item_errors));
  }
  if (merged.failure_count() == merged.inputs.size()) {
    throw ReformulationError(std::move(merged));
  }
  return merged;
}

}  // namespace reformguard
