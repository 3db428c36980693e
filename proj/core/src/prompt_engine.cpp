#include "hoigen/prompt_engine.hpp"

#include <regex>
#include <utility>

#include <fmt/format.h>

#include "hoigen/util.hpp"

namespace hoigen {
namespace {

struct Placeholder {
  std::string_view name;
  std::string_view value;
};

std::string substitute(std::string_view tmpl, std::initializer_list<Placeholder> values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    bool replaced = false;
    if (tmpl[pos] == '{') {
      for (const auto& p : values) {
        if (tmpl.substr(pos, p.name.size()) == p.name) {
          out.append(p.value);
          pos += p.name.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(tmpl[pos++]);
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : trim(s)) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

std::string strip_label(const std::string& segment) {
  static const std::regex kLabel(
      R"(^\s*(?:(?:positive|negative|bad|good)\s*(?:prompt)?|prompt)\s*:\s*)",
      std::regex::icase);
  return std::regex_replace(segment, kLabel, "", std::regex_constants::format_first_only);
}

std::string feedback_section(const std::vector<std::string>& problems) {
  std::string out = "\n\nYour previous answer could not be used:\n";
  for (const auto& p : problems) out += fmt::format("- {}\n", p);
  out += "Fix every issue listed above and answer again in the requested format.\n";
  return out;
}

}  // namespace

std::string_view to_string(Purpose p) {
  return p == Purpose::Program ? "Program" : "PromptPair";
}

std::string_view to_string(ExtractionError::Kind kind) {
  switch (kind) {
    case ExtractionError::Kind::NoProgramFound: return "NoProgramFound";
    case ExtractionError::Kind::BracketsNotFound: return "BracketsNotFound";
    case ExtractionError::Kind::TooLong: return "TooLong";
    case ExtractionError::Kind::EmptyPrompt: return "EmptyPrompt";
  }
  return "?";
}

std::string render_program_request(const BasePrompt& base) {
  return substitute(program_request_template(), {{"{base}", base.text}});
}

std::string render_prompt_pair_request(const HandProgram& program, const BasePrompt& base) {
  const std::string code = serialize_program(program);
  return substitute(prompt_pair_request_template(),
                    {{"{code}", code}, {"{prompt}", base.text}});
}

HandProgram extract_program(std::string_view llm_output) {
  const auto blocks = find_program_blocks(llm_output);
  std::string last_error = "no Right_Hand/Left_Hand section in the output";
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    try {
      return parse_program_block(llm_output, *it);
    } catch (const ParseError& e) {
      if (it == blocks.rbegin()) last_error = e.what();
    }
  }
  throw ExtractionError(ExtractionError::Kind::NoProgramFound,
                        "no parseable program: " + last_error);
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool ws = c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
    if (!ws && !in_word) ++n;
    in_word = !ws;
  }
  return n;
}

PromptPair extract_prompt_pair(std::string_view llm_output) {
  std::vector<std::string_view> segments;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < llm_output.size(); ++i) {
    const char c = llm_output[i];
    if (c == '[') {
      if (depth == 0) start = i + 1;
      ++depth;
    } else if (c == ']' && depth > 0) {
      if (--depth == 0) segments.push_back(llm_output.substr(start, i - start));
    }
  }
  if (segments.size() < 2) {
    throw ExtractionError(ExtractionError::Kind::BracketsNotFound,
                          "expected [positive prompt] and [negative prompt] in brackets");
  }
  PromptPair pair;
  pair.positive = collapse_whitespace(strip_label(std::string(segments[segments.size() - 2])));
  pair.negative = collapse_whitespace(strip_label(std::string(segments.back())));
  if (pair.positive.empty() || pair.negative.empty()) {
    throw ExtractionError(ExtractionError::Kind::EmptyPrompt,
                          "positive and negative prompts must both be nonempty");
  }
  const std::size_t words = word_count(pair.positive);
  if (words > kMaxPositiveWords) {
    throw ExtractionError(ExtractionError::Kind::TooLong,
                          fmt::format("positive prompt has {} words; the limit is {}", words,
                                      kMaxPositiveWords),
                          words);
  }
  return pair;
}

EnrichError::EnrichError(Purpose stage, std::string last_error, LlmTranscript transcript)
    : std::runtime_error(fmt::format("{} stage exhausted its attempts: {}", to_string(stage),
                                     last_error)),
      stage_(stage),
      last_error_(std::move(last_error)),
      transcript_(std::move(transcript)) {}

EnrichedPrompt enrich(const BasePrompt& base, LlmBackend& backend,
                      const EnrichOptions& options) {
  if (options.attempts < 1) throw std::invalid_argument("enrich: attempts must be >= 1");

  EnrichedPrompt result;
  result.base = base;
  LlmTranscript& transcript = result.transcript;

  auto ask = [&](const std::string& prompt, int attempt, Purpose purpose) {
    LlmRequest request{prompt, options.max_tokens, options.temperature};
    std::string response = backend.complete(request);
    transcript.push_back({prompt, response, attempt, purpose});
    return response;
  };

  // Stage 1: program.
  const std::string program_request = render_program_request(base);
  std::vector<std::string> problems;
  std::string last_error;
  bool have_program = false;
  for (int attempt = 1; attempt <= options.attempts && !have_program; ++attempt) {
    const std::string request =
        problems.empty() ? program_request : program_request + feedback_section(problems);
    const std::string response = ask(request, attempt, Purpose::Program);
    problems.clear();
    try {
      HandProgram program = extract_program(response);
      ValidationReport report = validate_program(program, options.profile);
      if (report.is_plausible()) {
        result.program = std::move(program);
        result.report = std::move(report);
        have_program = true;
        break;
      }
      for (const auto& v : report.violations) {
        if (v.severity == Severity::Error) {
          problems.push_back(fmt::format("{}: {} ({}.{})", to_string(v.rule), v.message,
                                         to_string(v.location.section),
                                         to_string(v.location.field)));
        }
      }
      last_error = report.error_summary();
    } catch (const ExtractionError& e) {
      problems.push_back(e.what());
      last_error = e.what();
    }
  }
  if (!have_program) throw EnrichError(Purpose::Program, last_error, std::move(transcript));

  // Stage 2: prompt pair.
  const std::string pair_request = render_prompt_pair_request(result.program, base);
  problems.clear();
  for (int attempt = 1; attempt <= options.attempts; ++attempt) {
    const std::string request =
        problems.empty() ? pair_request : pair_request + feedback_section(problems);
    const std::string response = ask(request, attempt, Purpose::PromptPair);
    problems.clear();
    try {
      result.pair = extract_prompt_pair(response);
      return result;
    } catch (const ExtractionError& e) {
      problems.push_back(fmt::format("{}: {}", to_string(e.kind()), e.what()));
      last_error = e.what();
    }
  }
  throw EnrichError(Purpose::PromptPair, last_error, std::move(transcript));
}

}  // namespace hoigen
