#pragma once

// Campaign orchestration: slot selection, enrichment, proposal, gating and
// admission, with bounded retries and resume from the manifest.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hoigen/backends.hpp"
#include "hoigen/curator.hpp"
#include "hoigen/http_backends.hpp"
#include "hoigen/proposer_pool.hpp"
#include "hoigen/verifier_gate.hpp"

namespace hoigen {

struct LlmConfig {
  EndpointConfig endpoint;
  int max_tokens = 1024;
  double temperature = 0.7;
};

struct ProposerConfig {
  ProposerDescriptor descriptor;
  EndpointConfig endpoint;
};

struct VerifierConfig {
  std::string id;
  EndpointConfig endpoint;
};

struct Budgets {
  int enrich_attempts = 3;
  int proposer_rounds = 3;
  /// Slot attempts per run; 0 derives 5 x deficit + 10 at start.
  std::int64_t max_attempts = 0;
  /// Consecutive attempts lost to an unreachable stage before giving up.
  int fatal_after = 3;
};

struct ConcurrencyCaps {
  int workers = 4;  // slot attempts in flight
  int llm = 4;
  int verifier = 4;  // per verifier
};

struct MockSettings {
  double accept_probability = 0.7;
  int latency_ms = 0;
  std::vector<std::string> failing_proposers;
};

struct CampaignConfig {
  std::filesystem::path data_dir;
  std::uint64_t master_seed = 0;
  QuotaConfig quota = QuotaConfig::default_table();
  /// Per object type, with {race} and {object} placeholders.
  std::map<std::string, std::string> base_prompts;
  /// Candidate {object} values per object type; the lowercased object type
  /// is used when none are listed.
  std::map<std::string, std::vector<std::string>> object_examples;
  LlmConfig llm;
  std::vector<ProposerConfig> proposers;
  std::vector<VerifierConfig> verifiers;
  std::string default_verifier = "default";
  double threshold = kDefaultThreshold;
  ReviewBand human_review;
  Budgets budgets;
  ConcurrencyCaps concurrency;
  /// Rule id -> "error" | "warning" | "note" | "off".
  std::map<std::string, std::string> rules;
  /// Motion type token -> pose category name.
  std::map<std::string, std::string> categories;
  std::string review_bind = "127.0.0.1:8765";
  MockSettings mock;

  std::filesystem::path manifest_path() const { return data_dir / "manifest.jsonl"; }
  std::filesystem::path review_queue_path() const { return data_dir / "review_queue.jsonl"; }
  std::filesystem::path labels_path() const { return data_dir / "labels.jsonl"; }
  std::filesystem::path quota_path() const { return data_dir / "quota.json"; }
};

/// Relative data_dir values resolve against `base_dir`. Throws ConfigError.
CampaignConfig config_from_json(const nlohmann::json& j,
                                const std::filesystem::path& base_dir = {});
CampaignConfig load_config(const std::filesystem::path& path);
/// Throws ConfigError when an invariant fails.
void validate_config(const CampaignConfig& config);
/// A complete, commented-by-example starting configuration.
nlohmann::json default_config_json(const std::string& data_dir = "data");

RuleProfile rule_profile(const CampaignConfig& config);
CategoryTable category_table(const CampaignConfig& config);

/// Placeholder substitution for base-prompt templates.
std::string render_base_prompt(std::string_view tmpl, std::string_view race,
                               std::string_view object);

struct BackendSet {
  std::shared_ptr<LlmBackend> llm;
  std::map<std::string, std::shared_ptr<ProposerBackend>> proposers;
  std::map<std::string, std::shared_ptr<VerifierBackend>> verifiers;
};

BackendSet make_http_backends(const CampaignConfig& config);
/// Mock LLM, one mock proposer per configured proposer and a mock verifier
/// for the default and every configured verifier.
BackendSet make_mock_backends(const CampaignConfig& config);

class FatalBackendError : public std::runtime_error {
 public:
  FatalBackendError(std::string stage, const std::string& message)
      : std::runtime_error(message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageFailures {
  std::size_t enrich = 0;
  std::size_t llm_unavailable = 0;
  std::size_t no_proposer = 0;
  std::size_t proposer = 0;  // individual proposer errors
  std::size_t all_proposers_failed = 0;
  std::size_t verifier_unavailable = 0;
  std::size_t verifier_error = 0;  // malformed scores
  std::size_t corrupt_image = 0;
  std::size_t duplicate = 0;
  std::size_t slot_full = 0;
};

struct ProposerStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t queued = 0;

  double acceptance_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

struct AttemptRecord {
  std::uint64_t index = 0;
  SlotKey slot;
  int rounds = 0;  // proposer rounds run
  bool filled = false;
  std::string outcome;
  std::uint64_t id = 0;  // manifest id when filled
};

struct CampaignReport {
  std::size_t attempted = 0;
  std::size_t filled = 0;
  std::size_t abandoned = 0;
  std::size_t surplus = 0;  // accepted pairs beyond the one admitted per attempt
  std::size_t admitted_from_review = 0;
  std::size_t queued_for_review = 0;
  StageFailures failures;
  std::map<std::string, ProposerStats> per_proposer;
  std::vector<AttemptRecord> attempts;
  std::map<std::string, int> peak_in_flight;  // "llm", "proposer:<id>", "verifier:<id>"
  double wall_seconds = 0;
  bool complete = false;
  bool stopped = false;
  bool budget_exhausted = false;
  bool slot_limit_reached = false;  // RunOptions::max_slots, not the budget
  QuotaMatrix quota;
};

struct RunOptions {
  /// Checked between waves; in-flight attempts finish and are admitted.
  const std::atomic<bool>* stop = nullptr;
  /// Caps slot attempts for this invocation, on top of the budget.
  std::optional<std::int64_t> max_slots;
  std::function<void(const CampaignReport&)> progress;
  std::function<void(std::string_view)> log;
};

/// Runs until the quota is complete, the attempt budget is spent or a stop
/// is requested. Throws ConfigError, FatalBackendError, StorageFailure.
CampaignReport run_campaign(const CampaignConfig& config, const BackendSet& backends,
                            const RunOptions& options = {});

std::string render_report(const CampaignReport& report);
nlohmann::json report_json(const CampaignReport& report);

struct StatusReport {
  StatsReport stats;
  bool torn_tail = false;
  std::size_t review_queued = 0;
  std::size_t labels = 0;
  std::string last_activity;  // newest manifest, queue or label write
};

/// Reads <dir>/quota.json (default table when absent) and the manifest.
/// Throws CorruptRecord.
StatusReport status_report(const std::filesystem::path& data_dir);
std::string render_status(const StatusReport& status);
nlohmann::json status_json(const StatusReport& status);

void write_quota_file(const std::filesystem::path& path, const QuotaConfig& quota);
QuotaConfig read_quota_file(const std::filesystem::path& path);

}  // namespace hoigen
