#include "hoigen/verifier_gate.hpp"

#include <future>

#include <fmt/format.h>

namespace hoigen {

std::string_view to_string(Label l) { return l == Label::Accept ? "Accept" : "Reject"; }
std::string_view to_string(GateSignal s) {
  return s == GateSignal::Proceed ? "Proceed" : "RetryNeeded";
}

Verdict verify_pair(const CandidateImage& candidate, VerifierBackend& backend, double threshold,
                    const ImageStore& store, const std::string& verifier_id) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("verify_pair: threshold must lie in (0, 1)");
  }
  Bytes image;
  try {
    image = store.read(candidate.image_ref);
  } catch (const StorageFailure& e) {
    throw CorruptImage(fmt::format("{}: {}", candidate.image_ref, e.what()));
  }
  if (image.empty() || sha256_hex(image) != candidate.content_hash) {
    throw CorruptImage(fmt::format("{}: content does not match its hash", candidate.image_ref));
  }
  const double score = backend.score(image, candidate.enriched->pair.positive);
  if (!(score >= 0.0 && score <= 1.0)) {
    throw BackendProtocolError(fmt::format("verifier {} returned score {} outside [0,1]",
                                           verifier_id, score));
  }
  Verdict v;
  v.pair_id = candidate.pair_id;
  v.score = score;
  v.threshold_used = threshold;
  v.verifier_id = verifier_id;
  v.label = score >= threshold ? Label::Accept : Label::Reject;
  return v;
}

VerifierRouter::VerifierRouter(std::string default_id, VerifierBackend& default_backend,
                               double default_threshold)
    : default_id_(std::move(default_id)), default_threshold_(default_threshold) {
  verifiers_[default_id_] = &default_backend;
}

void VerifierRouter::add_verifier(const std::string& id, VerifierBackend& backend) {
  verifiers_[id] = &backend;
}

void VerifierRouter::assign(const std::string& proposer_id,
                            std::optional<std::string> verifier_id,
                            std::optional<double> threshold) {
  if (verifier_id && !verifiers_.contains(*verifier_id)) {
    throw std::invalid_argument("unknown verifier '" + *verifier_id + "' for proposer " +
                                proposer_id);
  }
  routes_[proposer_id] = {std::move(verifier_id), threshold};
}

VerifierRouter::Choice VerifierRouter::choose(const std::string& proposer_id) const {
  Choice c{verifiers_.at(default_id_), default_id_, default_threshold_};
  if (auto it = routes_.find(proposer_id); it != routes_.end()) {
    if (it->second.first) {
      c.verifier_id = *it->second.first;
      c.backend = verifiers_.at(c.verifier_id);
    }
    if (it->second.second) c.threshold = *it->second.second;
  }
  return c;
}

GateOutcome gate(std::span<const CandidateImage> candidates, const VerifierRouter& router,
                 const ImageStore& store, ReviewBand band) {
  if (candidates.empty()) throw std::invalid_argument("gate: no candidates");

  std::vector<std::future<Verdict>> pending;
  pending.reserve(candidates.size());
  for (const auto& c : candidates) {
    pending.push_back(std::async(std::launch::async, [&router, &store, &c] {
      const auto choice = router.choose(c.proposer_id);
      return verify_pair(c, *choice.backend, choice.threshold, store, choice.verifier_id);
    }));
  }
  std::vector<Verdict> verdicts;
  verdicts.reserve(pending.size());
  std::exception_ptr first_error;
  for (auto& f : pending) {
    try {
      verdicts.push_back(f.get());
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  GateOutcome out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Verdict& v = verdicts[i];
    ScoredCandidate sc{candidates[i], v};
    const bool uncertain = band.enabled && v.score >= v.threshold_used - band.delta &&
                           v.score <= v.threshold_used + band.delta;
    if (uncertain) {
      out.queued.push_back(std::move(sc));
    } else if (v.label == Label::Accept) {
      out.accepted.push_back(std::move(sc));
    } else {
      out.rejected.push_back(std::move(sc));
    }
  }
  out.signal = out.accepted.empty() ? GateSignal::RetryNeeded : GateSignal::Proceed;
  return out;
}

GateOutcome gate(std::span<const CandidateImage> candidates, VerifierBackend& backend,
                 double threshold, const ImageStore& store) {
  VerifierRouter router("default", backend, threshold);
  return gate(candidates, router, store);
}

}  // namespace hoigen
