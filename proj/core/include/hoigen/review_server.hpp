#pragma once

// HTTP endpoint for human reviewers:
//   GET  /queue?limit=N[&rater_id=R]  pending pairs, shuffled, no proposer identity
//   POST /labels                      [{pair_id, fidelity, alignment, overall, accept[, rater_id]}]
//   GET  /stats                       queue and quota summary
//   GET  /images/<file>               image bytes

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "hoigen/review.hpp"

namespace hoigen {

/// Request handling without the transport, so it can be driven directly.
class ReviewService {
 public:
  explicit ReviewService(std::filesystem::path data_dir,
                         std::optional<std::uint64_t> shuffle_seed = std::nullopt);

  /// Items not yet admitted and not yet labeled by `rater_id`.
  nlohmann::json queue(std::size_t limit, const std::string& rater_id = "anonymous");

  /// Validates the whole batch before storing anything. Throws RangeError
  /// for out-of-range ratings and std::invalid_argument for malformed
  /// bodies or unknown pair ids.
  LabelStore::IngestResult post_labels(const nlohmann::json& body);

  nlohmann::json stats() const;

  /// Absolute path of an image under <data_dir>/images, or nullopt when the
  /// name is unsafe or missing.
  std::optional<std::filesystem::path> image_path(std::string_view file) const;

  const std::filesystem::path& data_dir() const { return data_dir_; }

 private:
  std::vector<ReviewItem> pending_items() const;

  std::filesystem::path data_dir_;
  LabelStore labels_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

class ReviewServer {
 public:
  explicit ReviewServer(std::filesystem::path data_dir,
                        std::optional<std::uint64_t> shuffle_seed = std::nullopt);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port; throws std::runtime_error when binding fails.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port". Throws std::invalid_argument.
std::pair<std::string, int> parse_bind_address(std::string_view bind);

}  // namespace hoigen
