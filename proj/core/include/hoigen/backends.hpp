#pragma once

// Text-in/text-out and image backends. Implementations are HTTP clients
// (http_backends.hpp) or deterministic stand-ins (mock_backends.hpp).

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "hoigen/errors.hpp"
#include "hoigen/util.hpp"

namespace hoigen {

struct LlmRequest {
  std::string prompt;
  int max_tokens = 1024;
  double temperature = 0.7;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  /// Throws BackendUnavailable when the model cannot be reached.
  virtual std::string complete(const LlmRequest& request) = 0;
};

struct GenerationParams {
  int width = 1024;
  int height = 1024;
  int steps_base = 80;
  int steps_refine = 20;
  double guidance = 7.0;
  std::uint64_t seed = 0;

  bool operator==(const GenerationParams&) const = default;
};

/// Throws std::invalid_argument when the step or guidance invariants fail.
void check_params(const GenerationParams& params);

struct GenerationRequest {
  std::string positive;
  std::string negative;
  GenerationParams params;
};

struct GenerationResponse {
  Bytes image_bytes;
  std::string model_id;
};

class ProposerBackend {
 public:
  virtual ~ProposerBackend() = default;
  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

class VerifierBackend {
 public:
  virtual ~VerifierBackend() = default;
  /// Score in [0, 1] for the (image, prompt) pair.
  virtual double score(std::span<const std::uint8_t> image, std::string_view prompt) = 0;
};

// Wire formats.
nlohmann::json to_wire(const LlmRequest& request);
std::string llm_text_from_wire(const nlohmann::json& response);
nlohmann::json to_wire(const GenerationRequest& request);
GenerationRequest generation_request_from_wire(const nlohmann::json& j);
nlohmann::json to_wire(const GenerationResponse& response);
GenerationResponse generation_response_from_wire(const nlohmann::json& j);
nlohmann::json verifier_request_to_wire(std::span<const std::uint8_t> image,
                                        std::string_view prompt);
double verifier_score_from_wire(const nlohmann::json& j);

/// Counting gate bounding concurrent calls; records the peak.
class ConcurrencyCap {
 public:
  explicit ConcurrencyCap(int limit);

  void acquire();
  void release();
  int limit() const { return limit_; }
  int peak() const;

  class Slot {
   public:
    explicit Slot(ConcurrencyCap& cap) : cap_(cap) { cap_.acquire(); }
    ~Slot() { cap_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    ConcurrencyCap& cap_;
  };

 private:
  int limit_;
  int in_flight_ = 0;
  int peak_ = 0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

// Wrappers enforcing an in-flight cap in front of another backend.
class CappedLlm final : public LlmBackend {
 public:
  CappedLlm(LlmBackend& inner, int limit) : inner_(inner), cap_(limit) {}
  std::string complete(const LlmRequest& request) override;
  const ConcurrencyCap& cap() const { return cap_; }

 private:
  LlmBackend& inner_;
  ConcurrencyCap cap_;
};

class CappedProposer final : public ProposerBackend {
 public:
  CappedProposer(ProposerBackend& inner, int limit) : inner_(inner), cap_(limit) {}
  GenerationResponse generate(const GenerationRequest& request) override;
  const ConcurrencyCap& cap() const { return cap_; }

 private:
  ProposerBackend& inner_;
  ConcurrencyCap cap_;
};

class CappedVerifier final : public VerifierBackend {
 public:
  CappedVerifier(VerifierBackend& inner, int limit) : inner_(inner), cap_(limit) {}
  double score(std::span<const std::uint8_t> image, std::string_view prompt) override;
  const ConcurrencyCap& cap() const { return cap_; }

 private:
  VerifierBackend& inner_;
  ConcurrencyCap cap_;
};

}  // namespace hoigen
