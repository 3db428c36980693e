#include "hoigen/backends.hpp"

#include <stdexcept>

namespace hoigen {

using nlohmann::json;

void check_params(const GenerationParams& p) {
  if (p.steps_base < 0 || p.steps_refine < 0 || p.steps_base + p.steps_refine <= 0) {
    throw std::invalid_argument("generation params: steps_base + steps_refine must be > 0");
  }
  if (!(p.guidance > 0)) throw std::invalid_argument("generation params: guidance must be > 0");
  if (p.width <= 0 || p.height <= 0) {
    throw std::invalid_argument("generation params: width and height must be positive");
  }
}

json to_wire(const LlmRequest& r) {
  return {{"prompt", r.prompt}, {"max_tokens", r.max_tokens}, {"temperature", r.temperature}};
}

std::string llm_text_from_wire(const json& j) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw BackendProtocolError("llm response lacks a string 'text' field");
  }
  return j["text"].get<std::string>();
}

json to_wire(const GenerationRequest& r) {
  return {{"positive", r.positive},
          {"negative", r.negative},
          {"width", r.params.width},
          {"height", r.params.height},
          {"steps_base", r.params.steps_base},
          {"steps_refine", r.params.steps_refine},
          {"guidance", r.params.guidance},
          {"seed", r.params.seed}};
}

GenerationRequest generation_request_from_wire(const json& j) {
  GenerationRequest r;
  r.positive = j.at("positive").get<std::string>();
  r.negative = j.at("negative").get<std::string>();
  r.params.width = j.at("width").get<int>();
  r.params.height = j.at("height").get<int>();
  r.params.steps_base = j.at("steps_base").get<int>();
  r.params.steps_refine = j.at("steps_refine").get<int>();
  r.params.guidance = j.at("guidance").get<double>();
  r.params.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

json to_wire(const GenerationResponse& r) {
  return {{"image_bytes", base64_encode(r.image_bytes)}, {"model_id", r.model_id}};
}

GenerationResponse generation_response_from_wire(const json& j) {
  if (!j.is_object() || !j.contains("image_bytes") || !j["image_bytes"].is_string()) {
    throw BackendProtocolError("generation response lacks 'image_bytes'");
  }
  GenerationResponse r;
  try {
    r.image_bytes = base64_decode(j["image_bytes"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw BackendProtocolError(std::string("generation response: ") + e.what());
  }
  if (j.contains("model_id") && j["model_id"].is_string()) {
    r.model_id = j["model_id"].get<std::string>();
  }
  return r;
}

json verifier_request_to_wire(std::span<const std::uint8_t> image, std::string_view prompt) {
  return {{"image_bytes", base64_encode(image)}, {"prompt", std::string(prompt)}};
}

double verifier_score_from_wire(const json& j) {
  if (!j.is_object() || !j.contains("score") || !j["score"].is_number()) {
    throw BackendProtocolError("verifier response lacks numeric 'score'");
  }
  const double s = j["score"].get<double>();
  if (!(s >= 0.0 && s <= 1.0)) {
    throw BackendProtocolError("verifier score outside [0,1]");
  }
  return s;
}

ConcurrencyCap::ConcurrencyCap(int limit) : limit_(limit) {
  if (limit < 1) throw std::invalid_argument("concurrency cap must be >= 1");
}

void ConcurrencyCap::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return in_flight_ < limit_; });
  ++in_flight_;
  if (in_flight_ > peak_) peak_ = in_flight_;
}

void ConcurrencyCap::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

int ConcurrencyCap::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

std::string CappedLlm::complete(const LlmRequest& request) {
  ConcurrencyCap::Slot slot(cap_);
  return inner_.complete(request);
}

GenerationResponse CappedProposer::generate(const GenerationRequest& request) {
  ConcurrencyCap::Slot slot(cap_);
  return inner_.generate(request);
}

double CappedVerifier::score(std::span<const std::uint8_t> image, std::string_view prompt) {
  ConcurrencyCap::Slot slot(cap_);
  return inner_.score(image, prompt);
}

}  // namespace hoigen
