#include "hoigen/proposer_pool.hpp"

#include <algorithm>
#include <future>

#include <fmt/format.h>

#include "hoigen/rules.hpp"

namespace hoigen {

CategoryTable::CategoryTable() {
  set(MotionType::FullFingerGrasp, kPowerGrasp);
  set(MotionType::FullFingerWrap, kPowerGrasp);
  set(MotionType::LeverGrasp, kPowerGrasp);
  set(MotionType::FingerTipGrasp, kPrecisionGrasp);
  set(MotionType::TwoFingerGrasp, kPrecisionGrasp);
  set(MotionType::ThreeFingerGrasp, kPrecisionGrasp);
  set(MotionType::Support, kOpenHand);
  set(MotionType::Press, kOpenHand);
}

PoseCategory pose_category_of(const HandProgram& program, const CategoryTable& table) {
  const auto& hand = program.hand(contact_side(program));
  if (!hand) throw std::invalid_argument("pose_category_of: program has no hand");
  return table.of(hand->motion);
}

bool ProposerDescriptor::serves(const PoseCategory& c) const {
  return std::find(categories.begin(), categories.end(), c.name) != categories.end();
}

NoProposerForCategory::NoProposerForCategory(PoseCategory category)
    : std::runtime_error("no proposer serves category " + category.name),
      category_(std::move(category)) {}

std::vector<ProposerDescriptor> route(const EnrichedPrompt& enriched,
                                      std::span<const ProposerDescriptor> pool,
                                      const CategoryTable& table) {
  const PoseCategory category = pose_category_of(enriched.program, table);
  std::vector<ProposerDescriptor> out;
  std::copy_if(pool.begin(), pool.end(), std::back_inserter(out),
               [&](const ProposerDescriptor& d) { return d.serves(category); });
  if (out.empty()) throw NoProposerForCategory(category);
  return out;
}

namespace {

std::string describe(const std::vector<ProposerFailure>& failures) {
  std::string s = "all proposers failed:";
  for (const auto& f : failures) s += fmt::format(" [{}: {}]", f.proposer_id, f.cause);
  return s;
}

}  // namespace

AllProposersFailed::AllProposersFailed(std::vector<ProposerFailure> failures)
    : std::runtime_error(describe(failures)), failures_(std::move(failures)) {}

ProposalBatch propose_batch(std::shared_ptr<const EnrichedPrompt> enriched,
                            std::span<const ProposerDescriptor> proposers,
                            std::span<const std::uint64_t> seeds, const ProposerLookup& lookup,
                            ImageStore& store) {
  if (proposers.size() != seeds.size()) {
    throw std::invalid_argument("propose_batch: one seed per proposer required");
  }

  struct Outcome {
    std::optional<GenerationResponse> response;
    GenerationParams params;
    ProposerFailure failure;
  };

  std::vector<std::future<Outcome>> pending;
  pending.reserve(proposers.size());
  for (std::size_t i = 0; i < proposers.size(); ++i) {
    pending.push_back(std::async(std::launch::async, [&, i]() -> Outcome {
      const ProposerDescriptor& d = proposers[i];
      Outcome o;
      o.params = d.params;
      o.params.seed = seeds[i];
      o.failure.proposer_id = d.id;
      try {
        GenerationRequest request{enriched->pair.positive, enriched->pair.negative, o.params};
        o.response = lookup(d.id).generate(request);
        if (o.response->image_bytes.empty()) {
          o.response.reset();
          o.failure.cause = "empty image";
        }
      } catch (const BackendUnavailable& e) {
        o.failure.cause = e.what();
        o.failure.unavailable = true;
      } catch (const std::exception& e) {
        o.failure.cause = e.what();
      }
      return o;
    }));
  }

  ProposalBatch batch;
  std::vector<Outcome> outcomes;
  outcomes.reserve(pending.size());
  for (auto& f : pending) outcomes.push_back(f.get());

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.response) {
      batch.failures.push_back(std::move(o.failure));
      continue;
    }
    const StoredImage stored = store.put(o.response->image_bytes);
    CandidateImage c;
    c.proposer_id = proposers[i].id;
    c.model_id = o.response->model_id;
    c.image_ref = stored.relative_path;
    c.content_hash = stored.content_hash;
    c.params = o.params;
    c.enriched = enriched;
    c.pair_id = sha256_hex(
                    fmt::format("{}|{}|{}", stored.content_hash, c.proposer_id,
                                enriched->pair.positive))
                    .substr(0, 16);
    batch.candidates.push_back(std::move(c));
  }
  if (batch.candidates.empty()) throw AllProposersFailed(std::move(batch.failures));
  return batch;
}

}  // namespace hoigen
