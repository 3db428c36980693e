#pragma once

// Proposer stage: route an enriched prompt to the image backends that serve
// its pose category and collect the proposed images.

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoigen/backends.hpp"
#include "hoigen/image_store.hpp"
#include "hoigen/prompt_engine.hpp"

namespace hoigen {

/// Pose category name. The three built-in names cover the default table;
/// campaigns may introduce others through the category override.
struct PoseCategory {
  std::string name;

  auto operator<=>(const PoseCategory&) const = default;
};

inline const PoseCategory kPowerGrasp{"PowerGrasp"};
inline const PoseCategory kPrecisionGrasp{"PrecisionGrasp"};
inline const PoseCategory kOpenHand{"OpenHand"};

/// Total map from MotionType to PoseCategory.
class CategoryTable {
 public:
  /// Power: full finger grasp/wrap, lever. Precision: finger tip, two and
  /// three finger grasps. Open hand: support, press.
  CategoryTable();

  const PoseCategory& of(MotionType m) const { return table_[static_cast<std::size_t>(m)]; }
  void set(MotionType m, PoseCategory c) { table_[static_cast<std::size_t>(m)] = std::move(c); }

 private:
  std::array<PoseCategory, 8> table_;
};

/// Category of the contact hand's motion.
PoseCategory pose_category_of(const HandProgram& program,
                              const CategoryTable& table = CategoryTable());

struct ProposerDescriptor {
  std::string id;
  std::string endpoint;
  std::vector<std::string> categories;
  GenerationParams params;
  std::optional<std::string> verifier_id;
  std::optional<double> threshold;
  int max_in_flight = 1;

  bool serves(const PoseCategory& c) const;
};

class NoProposerForCategory : public std::runtime_error {
 public:
  explicit NoProposerForCategory(PoseCategory category);
  const PoseCategory& category() const { return category_; }

 private:
  PoseCategory category_;
};

/// Descriptors serving the prompt's category, in pool order.
std::vector<ProposerDescriptor> route(const EnrichedPrompt& enriched,
                                      std::span<const ProposerDescriptor> pool,
                                      const CategoryTable& table = CategoryTable());

struct CandidateImage {
  std::string pair_id;
  std::string image_ref;  // relative to the data dir
  std::string content_hash;
  std::string proposer_id;
  std::string model_id;
  GenerationParams params;
  std::shared_ptr<const EnrichedPrompt> enriched;
};

struct ProposerFailure {
  std::string proposer_id;
  std::string cause;
  bool unavailable = false;  // transport failure rather than a bad answer
};

struct ProposalBatch {
  std::vector<CandidateImage> candidates;  // in proposer order
  std::vector<ProposerFailure> failures;
};

class AllProposersFailed : public std::runtime_error {
 public:
  explicit AllProposersFailed(std::vector<ProposerFailure> failures);
  const std::vector<ProposerFailure>& failures() const { return failures_; }

 private:
  std::vector<ProposerFailure> failures_;
};

using ProposerLookup = std::function<ProposerBackend&(const std::string& proposer_id)>;

/// One generation request per proposer, issued concurrently, with
/// seeds[i] for proposers[i]. Individual failures are recorded; throws
/// AllProposersFailed when none succeeds and StorageFailure when an image
/// cannot be persisted.
ProposalBatch propose_batch(std::shared_ptr<const EnrichedPrompt> enriched,
                            std::span<const ProposerDescriptor> proposers,
                            std::span<const std::uint64_t> seeds, const ProposerLookup& lookup,
                            ImageStore& store);

}  // namespace hoigen
