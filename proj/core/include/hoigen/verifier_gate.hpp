#pragma once

// Verifier stage: score (image, positive prompt) pairs, accept at or above
// the threshold, and signal a re-proposal when nothing was accepted.

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoigen/backends.hpp"
#include "hoigen/image_store.hpp"
#include "hoigen/proposer_pool.hpp"

namespace hoigen {

inline constexpr double kDefaultThreshold = 0.5;

enum class Label { Accept, Reject };
enum class GateSignal { Proceed, RetryNeeded };

std::string_view to_string(Label l);
std::string_view to_string(GateSignal s);

struct Verdict {
  std::string pair_id;
  double score = 0;
  Label label = Label::Reject;
  std::string verifier_id;
  double threshold_used = kDefaultThreshold;
};

struct ScoredCandidate {
  CandidateImage candidate;
  Verdict verdict;
};

struct GateOutcome {
  std::vector<ScoredCandidate> accepted;
  std::vector<ScoredCandidate> rejected;
  /// Uncertain-band pairs held for human review (only when review is enabled).
  std::vector<ScoredCandidate> queued;
  GateSignal signal = GateSignal::RetryNeeded;
};

class CorruptImage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scores one candidate. The image is re-read from the store and checked
/// against its content hash. Throws CorruptImage, BackendUnavailable.
Verdict verify_pair(const CandidateImage& candidate, VerifierBackend& backend, double threshold,
                    const ImageStore& store, const std::string& verifier_id = "default");

/// Picks the verifier and threshold for each proposer: the proposer's own
/// verifier/threshold when configured, else the campaign default.
class VerifierRouter {
 public:
  VerifierRouter(std::string default_id, VerifierBackend& default_backend,
                 double default_threshold = kDefaultThreshold);

  void add_verifier(const std::string& id, VerifierBackend& backend);
  void assign(const std::string& proposer_id, std::optional<std::string> verifier_id,
              std::optional<double> threshold);

  struct Choice {
    VerifierBackend* backend;
    std::string verifier_id;
    double threshold;
  };
  Choice choose(const std::string& proposer_id) const;

 private:
  std::string default_id_;
  double default_threshold_;
  std::map<std::string, VerifierBackend*> verifiers_;
  std::map<std::string, std::pair<std::optional<std::string>, std::optional<double>>> routes_;
};

/// Scores in [threshold - delta, threshold + delta] go to the review queue
/// instead of being decided automatically.
struct ReviewBand {
  bool enabled = false;
  double delta = 0.1;
};

/// Verifies every candidate concurrently and partitions them. Any
/// BackendUnavailable aborts the whole gate.
GateOutcome gate(std::span<const CandidateImage> candidates, const VerifierRouter& router,
                 const ImageStore& store, ReviewBand band = {});

GateOutcome gate(std::span<const CandidateImage> candidates, VerifierBackend& backend,
                 double threshold, const ImageStore& store);

}  // namespace hoigen
