#pragma once

// Human review artifacts: the uncertain-band queue, ingested labels, and the
// verifier training export.

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hoigen {

struct ReviewItem {
  std::string pair_id;
  std::string image_path;
  std::string positive;
  std::string negative;
  std::string program_text;
  std::string proposer_id;
  std::string verifier_id;
  double score = 0;
  double threshold = 0;
  std::string object_type;
  std::string race;
  std::string pose_category;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  std::string created_at;
};

nlohmann::json to_json(const ReviewItem& item);
ReviewItem review_item_from_json(const nlohmann::json& j);

/// Append-only record file of pairs awaiting human adjudication.
class ReviewQueue {
 public:
  explicit ReviewQueue(std::filesystem::path path) : path_(std::move(path)) {}

  void append(const ReviewItem& item) const;
  std::vector<ReviewItem> load() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// One reviewer's judgement of one pair, on the 1 (bad) to 5 (excellent) scale.
struct HumanLabel {
  std::string pair_id;
  std::string rater_id = "anonymous";
  std::string image_path;
  std::string positive;
  int fidelity = 0;
  int alignment = 0;
  int overall = 0;
  bool accept = false;
};

/// Throws RangeError unless 1 <= rating <= 5.
void check_rating(int rating, std::string_view dimension);

/// Parses the `POST /labels` item format
/// {pair_id, fidelity, alignment, overall, accept[, rater_id]}.
/// Throws RangeError for out-of-range ratings, std::invalid_argument for
/// missing or mistyped fields.
HumanLabel label_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HumanLabel& label);
/// Full stored/exported record form.
HumanLabel stored_label_from_json(const nlohmann::json& j);

/// Append-only label log, deduplicated by (pair_id, rater_id).
class LabelStore {
 public:
  explicit LabelStore(std::filesystem::path path) : path_(std::move(path)) {}

  struct IngestResult {
    std::size_t added = 0;
    std::size_t duplicates = 0;
  };
  IngestResult ingest(std::span<const HumanLabel> labels);
  std::vector<HumanLabel> load() const;

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

/// One line per label: {pair_id, rater_id, image_path, positive, good,
/// fidelity, alignment, overall}. Written atomically. Throws StorageFailure.
void export_training_labels(std::span<const HumanLabel> labels,
                            const std::filesystem::path& out);
std::vector<HumanLabel> read_training_labels(const std::filesystem::path& path);

}  // namespace hoigen
