#pragma once

// Quota bookkeeping and the append-only manifest of accepted pairs.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hoigen/jsonl.hpp"

namespace hoigen {

struct SlotKey {
  std::string object_type;
  std::string race;
  auto operator<=>(const SlotKey&) const = default;
};

std::string to_string(const SlotKey& key);

class InvalidQuota : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact rational multiplier applied to every target cell.
struct QuotaScale {
  std::int64_t num = 1;
  std::int64_t den = 1;

  /// Accepts "a/b", integers and plain decimals such as "0.01".
  static QuotaScale parse(std::string_view text);
  std::string str() const;
};

struct QuotaConfig {
  std::vector<std::string> object_types;
  std::vector<std::string> races;
  /// Row-major: targets[object_type][race].
  std::vector<std::vector<std::int64_t>> targets;
  QuotaScale scale;

  /// The 13 x 5 breakdown by object type and race (10,100 pairs).
  static QuotaConfig default_table();
};

class QuotaMatrix {
 public:
  QuotaMatrix() = default;
  QuotaMatrix(std::vector<std::string> object_types, std::vector<std::string> races,
              std::vector<std::vector<std::int64_t>> targets);

  const std::vector<std::string>& object_types() const { return object_types_; }
  const std::vector<std::string>& races() const { return races_; }
  /// Every slot in row-major order.
  std::vector<SlotKey> slots() const;

  bool contains(const SlotKey& key) const;
  std::int64_t target(const SlotKey& key) const;
  std::int64_t filled(const SlotKey& key) const;
  std::int64_t deficit(const SlotKey& key) const { return target(key) - filled(key); }

  std::int64_t row_target(std::string_view object_type) const;
  std::int64_t row_filled(std::string_view object_type) const;
  std::int64_t column_target(std::string_view race) const;
  std::int64_t column_filled(std::string_view race) const;
  std::int64_t total_target() const;
  std::int64_t total_filled() const;
  std::int64_t total_deficit() const { return total_target() - total_filled(); }
  bool complete() const { return total_deficit() == 0; }

  /// Returns false (and changes nothing) when the slot is already at target.
  bool try_increment(const SlotKey& key);
  void reset_filled();

 private:
  std::size_t index_of(const SlotKey& key) const;

  std::vector<std::string> object_types_;
  std::vector<std::string> races_;
  std::vector<std::int64_t> targets_;
  std::vector<std::int64_t> filled_;
};

/// Applies the scale; throws InvalidQuota on ragged, negative or fractional
/// cells, duplicate labels or empty axes.
QuotaMatrix init_quota(const QuotaConfig& config);

/// Draws a slot with probability proportional to its remaining deficit.
/// std::nullopt when every slot is full.
std::optional<SlotKey> next_slot(const QuotaMatrix& q, std::mt19937_64& rng);
std::optional<SlotKey> next_slot(const QuotaMatrix& q, std::uint64_t seed);

struct ManifestRecord {
  std::uint64_t id = 0;
  std::string image_path;
  std::string positive;
  std::string negative;
  std::string program_text;
  std::string object_type;
  std::string race;
  std::string pose_category;
  std::string proposer_id;
  double verifier_score = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  std::string created_at;

  SlotKey slot() const { return {object_type, race}; }
  /// Images are stored content-addressed, so the file stem is the hash.
  std::string content_hash() const;
};

nlohmann::json to_json(const ManifestRecord& record);
ManifestRecord manifest_record_from_json(const nlohmann::json& j);

struct ManifestContents {
  std::vector<ManifestRecord> records;
  std::uintmax_t complete_bytes = 0;
  bool torn_tail = false;
};

/// Throws CorruptRecord for a malformed complete line.
ManifestContents read_manifest(const std::filesystem::path& path);

struct RebuildResult {
  QuotaMatrix quota;
  std::uint64_t max_id = 0;
  std::size_t records = 0;
  bool torn_tail = false;
  std::set<std::string> hashes;
};

/// Replays the manifest against `targets` (filled counts are ignored).
/// A torn final line is skipped; with `truncate` it is also cut from the file.
/// Throws CorruptRecord for malformed lines, records outside the quota axes,
/// over-target cells and duplicate ids.
RebuildResult rebuild_from_manifest(const std::filesystem::path& manifest,
                                    const QuotaMatrix& targets, bool truncate = false);

enum class AdmitStatus { Admitted, SlotFull, Duplicate };
std::string_view to_string(AdmitStatus s);

struct AdmitResult {
  AdmitStatus status;
  std::uint64_t id = 0;
  bool admitted() const { return status == AdmitStatus::Admitted; }
};

/// Single writer for one manifest. Thread-safe.
class Curator {
 public:
  /// Rebuilds state from `manifest` (truncating a torn tail).
  Curator(std::filesystem::path manifest, const QuotaMatrix& targets);

  /// Assigns the next id and appends. Throws std::invalid_argument for a slot
  /// outside the quota and StorageFailure on write errors.
  AdmitResult admit(ManifestRecord record);

  QuotaMatrix quota() const;
  std::uint64_t max_id() const;
  bool has_hash(const std::string& hash) const;
  const std::filesystem::path& manifest_path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  QuotaMatrix quota_;
  std::uint64_t max_id_ = 0;
  std::set<std::string> hashes_;
};

struct StatsReport {
  QuotaMatrix quota;
  std::size_t records = 0;
  double completion = 0;
  std::map<std::string, std::size_t> warning_histogram;
  std::string last_activity;  // created_at of the newest record
};

StatsReport stats(const QuotaMatrix& q, std::span<const ManifestRecord> records);
/// Object types down, races across, with row and column totals.
std::string render_stats_table(const StatsReport& report);
nlohmann::json stats_json(const StatsReport& report);

}  // namespace hoigen
