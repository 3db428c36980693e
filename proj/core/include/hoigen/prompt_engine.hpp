#pragma once

// Prompter stage: base prompt -> validated hand program -> positive/negative
// prompt pair, via two fixed meta-prompts sent to a language model.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hoigen/backends.hpp"
#include "hoigen/dsl.hpp"
#include "hoigen/rules.hpp"

namespace hoigen {

inline constexpr std::size_t kMaxPositiveWords = 50;

struct BasePrompt {
  std::string text;
  std::string object_type;
  std::string race;
};

struct PromptPair {
  std::string positive;
  std::string negative;

  bool operator==(const PromptPair&) const = default;
};

enum class Purpose { Program, PromptPair };
std::string_view to_string(Purpose p);

struct TranscriptEntry {
  std::string request_text;
  std::string response_text;
  int attempt_index;  // 1-based, per purpose
  Purpose purpose;
};

using LlmTranscript = std::vector<TranscriptEntry>;

struct EnrichedPrompt {
  BasePrompt base;
  HandProgram program;
  PromptPair pair;
  LlmTranscript transcript;
  ValidationReport report;  // of `program`; Error-free by construction
};

// Meta-prompt resources (embedded from core/resources at build time).
std::string_view program_request_template();
std::string_view prompt_pair_request_template();
std::string_view template_version();

/// Meta-prompt 1 with {base} replaced by the base sentence. Replacement is
/// a single pass over the template; braces in the input are not interpreted.
std::string render_program_request(const BasePrompt& base);

/// Meta-prompt 2 with {code} = canonical program text and {prompt} = base text.
std::string render_prompt_pair_request(const HandProgram& program, const BasePrompt& base);

class ExtractionError : public std::runtime_error {
 public:
  enum class Kind { NoProgramFound, BracketsNotFound, TooLong, EmptyPrompt };

  ExtractionError(Kind kind, const std::string& message, std::size_t word_count = 0)
      : std::runtime_error(message), kind_(kind), word_count_(word_count) {}

  Kind kind() const { return kind_; }
  std::size_t word_count() const { return word_count_; }

 private:
  Kind kind_;
  std::size_t word_count_;
};

std::string_view to_string(ExtractionError::Kind kind);

/// The last program block in the output that parses.
HandProgram extract_program(std::string_view llm_output);

/// Last two top-level bracketed segments: positive, then negative.
PromptPair extract_prompt_pair(std::string_view llm_output);

/// Whitespace-delimited token count.
std::size_t word_count(std::string_view text);

struct EnrichOptions {
  int attempts = 3;  // per stage
  RuleProfile profile;
  int max_tokens = 1024;
  double temperature = 0.7;
};

class EnrichError : public std::runtime_error {
 public:
  EnrichError(Purpose stage, std::string last_error, LlmTranscript transcript);

  Purpose stage() const { return stage_; }
  const std::string& last_error() const { return last_error_; }
  const LlmTranscript& transcript() const { return transcript_; }

 private:
  Purpose stage_;
  std::string last_error_;
  LlmTranscript transcript_;
};

/// Runs both stages with per-stage attempt budgets. Failed attempts are
/// re-requested with a feedback section listing what was wrong (rule ids
/// and messages, or the extraction error). Throws EnrichError when a budget
/// runs out; BackendUnavailable propagates.
EnrichedPrompt enrich(const BasePrompt& base, LlmBackend& backend,
                      const EnrichOptions& options = {});

}  // namespace hoigen
