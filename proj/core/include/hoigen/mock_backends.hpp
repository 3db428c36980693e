#pragma once

// Deterministic stand-ins for the language model, image generators and
// verifier. Outputs depend only on the request and the configured seed, so a
// campaign against these is reproducible end to end.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>

#include "hoigen/backends.hpp"

namespace hoigen {

/// Tracks concurrent and total calls.
class CallMeter {
 public:
  class Scope {
   public:
    explicit Scope(CallMeter& m);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    CallMeter& m_;
  };

  int peak() const { return peak_.load(); }
  std::uint64_t calls() const { return calls_.load(); }

 private:
  std::atomic<int> current_{0};
  std::atomic<int> peak_{0};
  std::atomic<std::uint64_t> calls_{0};
};

/// Answers both meta-prompts. For a program request it returns a short
/// rationale followed by an Error-free program derived from the base
/// sentence; for a prompt-pair request, "[positive] [negative]".
class MockLlm final : public LlmBackend {
 public:
  explicit MockLlm(std::uint64_t seed = 0, std::chrono::milliseconds latency = {})
      : seed_(seed), latency_(latency) {}

  std::string complete(const LlmRequest& request) override;
  const CallMeter& meter() const { return meter_; }

 private:
  std::uint64_t seed_;
  std::chrono::milliseconds latency_;
  CallMeter meter_;
};

/// Renders a small binary PPM whose pixels are seeded by the request and the
/// proposer id. A failing proposer always throws BackendUnavailable.
class MockProposer final : public ProposerBackend {
 public:
  explicit MockProposer(std::string id, std::chrono::milliseconds latency = {},
                        bool failing = false, int size = 32)
      : id_(std::move(id)), latency_(latency), failing_(failing), size_(size) {}

  GenerationResponse generate(const GenerationRequest& request) override;
  const CallMeter& meter() const { return meter_; }

 private:
  std::string id_;
  std::chrono::milliseconds latency_;
  bool failing_;
  int size_;
  CallMeter meter_;
};

/// Hash-based scores. A uniform u = H(image, prompt) in [0,1) is mapped to
/// [threshold, 1) when u < accept_probability and to [0, threshold)
/// otherwise, so a pair is accepted with exactly that probability.
class MockVerifier final : public VerifierBackend {
 public:
  MockVerifier(double accept_probability, double threshold,
               std::chrono::milliseconds latency = {}, std::uint64_t salt = 0);

  double score(std::span<const std::uint8_t> image, std::string_view prompt) override;
  const CallMeter& meter() const { return meter_; }

 private:
  double p_;
  double threshold_;
  std::chrono::milliseconds latency_;
  std::uint64_t salt_;
  CallMeter meter_;
};

}  // namespace hoigen
