#include "hoigen/mock_backends.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "hoigen/dsl.hpp"
#include "hoigen/prompt_engine.hpp"
#include "hoigen/rules.hpp"

namespace hoigen {

CallMeter::Scope::Scope(CallMeter& m) : m_(m) {
  m_.calls_.fetch_add(1);
  const int now = m_.current_.fetch_add(1) + 1;
  int peak = m_.peak_.load();
  while (now > peak && !m_.peak_.compare_exchange_weak(peak, now)) {
  }
}

CallMeter::Scope::~Scope() { m_.current_.fetch_sub(1); }

namespace {

constexpr std::string_view kProgramMarker = "You are given a base sentence";
constexpr std::string_view kPairMarker = "You are a prompt designer";
constexpr std::string_view kBaseLead = "Now write a code for the following base sentence:";
constexpr std::string_view kCodeLead = "Input code:";
constexpr std::string_view kPromptLead = "Input Prompt:";

std::string line_after(std::string_view text, std::string_view lead) {
  const auto pos = text.find(lead);
  if (pos == std::string_view::npos) return {};
  auto rest = text.substr(pos + lead.size());
  if (!rest.empty() && rest.front() == '\n') rest.remove_prefix(1);
  return std::string(trim(rest.substr(0, rest.find('\n'))));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string words(std::string_view token) {
  std::string out = lower(token);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string program_reply(std::string_view base, std::uint64_t seed) {
  const std::uint64_t root = derive_seed(seed, stable_hash64(base));
  for (std::uint64_t k = 0;; ++k) {
    HandProgram p = random_program(derive_seed(root, k));
    if (!validate_program(p).is_plausible()) continue;
    return fmt::format(
        "The hand must hold the object in a way that can be physically executed, "
        "so the fingers follow the object's size.\n\n{}",
        serialize_program(p));
  }
}

std::string hand_phrase(const HandSpec& hand, Side side) {
  std::string out = fmt::format("{} hand in a {}", side == Side::Right ? "right" : "left",
                                words(to_string(hand.motion)));
  out += fmt::format(", thumb {}, index {}", words(to_string(hand.finger(Digit::Thumb))),
                     words(to_string(hand.finger(Digit::Index))));
  return out;
}

std::string pair_reply(std::string_view request) {
  const std::string base = line_after(request, kPromptLead);
  const auto code_pos = request.find(kCodeLead);
  const auto prompt_pos = request.find(kPromptLead);
  std::string hands;
  if (code_pos != std::string_view::npos && prompt_pos != std::string_view::npos &&
      prompt_pos > code_pos) {
    try {
      const HandProgram p = parse_program(
          request.substr(code_pos + kCodeLead.size(), prompt_pos - code_pos - kCodeLead.size()));
      if (p.right) hands += hand_phrase(*p.right, Side::Right);
      if (p.left) hands += (hands.empty() ? "" : ", ") + hand_phrase(*p.left, Side::Left);
    } catch (const ParseError&) {
    }
  }
  std::string positive = "Photo of " + base;
  if (positive.size() > 9) positive[9] = static_cast<char>(std::tolower(static_cast<unsigned char>(positive[9])));
  if (!hands.empty()) positive += ", " + hands;
  positive += ", detailed fingers, realistic, 4k, high resolution";

  std::istringstream in(positive);
  std::string word;
  std::string clipped;
  for (std::size_t n = 0; n < kMaxPositiveWords && in >> word; ++n) {
    if (!clipped.empty()) clipped += ' ';
    clipped += word;
  }
  std::erase(clipped, '[');
  std::erase(clipped, ']');
  return fmt::format(
      "Here are the prompts.\n[{}]\n[blurry, disfigured, extra fingers, bad anatomy, too many "
      "fingers, cartoon, painting, six fingers, low quality]",
      clipped);
}

}  // namespace

std::string MockLlm::complete(const LlmRequest& request) {
  CallMeter::Scope scope(meter_);
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  const std::string_view text = request.prompt;
  if (text.find(kProgramMarker) != std::string_view::npos) {
    return program_reply(line_after(text, kBaseLead), seed_);
  }
  if (text.find(kPairMarker) != std::string_view::npos) return pair_reply(text);
  return "I can only help with hand-object prompts.";
}

GenerationResponse MockProposer::generate(const GenerationRequest& request) {
  CallMeter::Scope scope(meter_);
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  if (failing_) throw BackendUnavailable("mock proposer '" + id_ + "' is down");
  check_params(request.params);

  const std::string header = fmt::format("P6\n{} {}\n255\n", size_, size_);
  GenerationResponse out;
  out.model_id = "mock-" + id_;
  out.image_bytes.assign(header.begin(), header.end());
  std::mt19937_64 rng(derive_seed(stable_hash64(request.positive), stable_hash64(request.negative),
                                  request.params.seed, stable_hash64(id_)));
  const std::size_t pixels = static_cast<std::size_t>(size_) * static_cast<std::size_t>(size_) * 3;
  out.image_bytes.reserve(out.image_bytes.size() + pixels);
  for (std::size_t i = 0; i < pixels; i += 8) {
    std::uint64_t v = rng();
    for (std::size_t b = 0; b < 8 && i + b < pixels; ++b, v >>= 8) {
      out.image_bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
  }
  return out;
}

MockVerifier::MockVerifier(double accept_probability, double threshold,
                           std::chrono::milliseconds latency, std::uint64_t salt)
    : p_(accept_probability), threshold_(threshold), latency_(latency), salt_(salt) {
  if (!(p_ >= 0.0 && p_ <= 1.0)) throw std::invalid_argument("accept probability outside [0,1]");
  if (!(threshold_ > 0.0 && threshold_ < 1.0)) throw std::invalid_argument("threshold outside (0,1)");
}

double MockVerifier::score(std::span<const std::uint8_t> image, std::string_view prompt) {
  CallMeter::Scope scope(meter_);
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  const double u =
      uniform_unit(derive_seed(stable_hash64(sha256_hex(image)), stable_hash64(prompt), salt_));
  if (u < p_) return threshold_ + (1.0 - threshold_) * (u / p_);
  return threshold_ * ((u - p_) / (1.0 - p_));
}

}  // namespace hoigen
