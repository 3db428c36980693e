#include "hoigen/campaign.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <exception>
#include <future>
#include <random>
#include <set>

#include <fmt/format.h>

#include "hoigen/image_store.hpp"
#include "hoigen/prompt_engine.hpp"
#include "hoigen/review.hpp"
#include "hoigen/util.hpp"

namespace hoigen {

using nlohmann::json;

void write_quota_file(const std::filesystem::path& path, const QuotaConfig& quota) {
  const json j{{"object_types", quota.object_types},
               {"races", quota.races},
               {"targets", quota.targets},
               {"scale", quota.scale.str()}};
  write_file_atomic(path, j.dump(2) + "\n");
}

QuotaConfig read_quota_file(const std::filesystem::path& path) {
  try {
    const json j = json::parse(read_text_file(path));
    QuotaConfig q;
    q.object_types = j.at("object_types").get<std::vector<std::string>>();
    q.races = j.at("races").get<std::vector<std::string>>();
    q.targets = j.at("targets").get<std::vector<std::vector<std::int64_t>>>();
    q.scale = QuotaScale::parse(j.value("scale", "1"));
    return q;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {

enum Stage : std::size_t { kLlm, kProposer, kVerifier, kStageCount };
constexpr std::array<std::string_view, kStageCount> kStageNames = {"llm", "proposer", "verifier"};

struct AttemptResult {
  AttemptRecord record;
  std::vector<ScoredCandidate> accepted;  // best first
  std::vector<ScoredCandidate> queued;
  std::map<std::string, ProposerStats> per_proposer;
  StageFailures failures;
  std::optional<Stage> unavailable;
  std::string detail;
};

void merge(StageFailures& into, const StageFailures& f) {
  into.enrich += f.enrich;
  into.llm_unavailable += f.llm_unavailable;
  into.no_proposer += f.no_proposer;
  into.proposer += f.proposer;
  into.all_proposers_failed += f.all_proposers_failed;
  into.verifier_unavailable += f.verifier_unavailable;
  into.verifier_error += f.verifier_error;
  into.corrupt_image += f.corrupt_image;
  into.duplicate += f.duplicate;
  into.slot_full += f.slot_full;
}

std::vector<std::string> unique_warnings(const ValidationReport& report) {
  auto ids = report.warning_ids();
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

class Pipeline {
 public:
  Pipeline(const CampaignConfig& config, const BackendSet& backends, const RunOptions& options)
      : config_(config),
        options_(options),
        profile_(rule_profile(config)),
        categories_(category_table(config)),
        store_(config.data_dir),
        queue_(config.review_queue_path()) {
    if (!backends.llm) throw ConfigError("no language model backend");
    llm_ = std::make_unique<CappedLlm>(*backends.llm, config.concurrency.llm);
    for (const auto& p : config.proposers) {
      const auto it = backends.proposers.find(p.descriptor.id);
      if (it == backends.proposers.end() || !it->second) {
        throw ConfigError("no backend for proposer '" + p.descriptor.id + "'");
      }
      proposers_[p.descriptor.id] =
          std::make_unique<CappedProposer>(*it->second, p.descriptor.max_in_flight);
      pool_.push_back(p.descriptor);
    }
    for (const auto& [id, backend] : backends.verifiers) {
      if (backend) verifiers_[id] = std::make_unique<CappedVerifier>(*backend, config.concurrency.verifier);
    }
    const auto def = verifiers_.find(config.default_verifier);
    if (def == verifiers_.end()) {
      throw ConfigError("no backend for default verifier '" + config.default_verifier + "'");
    }
    router_ = std::make_unique<VerifierRouter>(config.default_verifier, *def->second,
                                               config.threshold);
    for (const auto& [id, v] : verifiers_) router_->add_verifier(id, *v);
    for (const auto& p : config.proposers) {
      const auto& d = p.descriptor;
      if (d.verifier_id && !verifiers_.count(*d.verifier_id)) {
        throw ConfigError("no backend for verifier '" + *d.verifier_id + "'");
      }
      router_->assign(d.id, d.verifier_id, d.threshold);
    }
  }

  CampaignReport run() {
    const auto started = std::chrono::steady_clock::now();
    std::filesystem::create_directories(config_.data_dir);
    write_quota_file(config_.quota_path(), config_.quota);
    curator_ = std::make_unique<Curator>(config_.manifest_path(), init_quota(config_.quota));

    CampaignReport report;
    if (config_.human_review.enabled) adjudicate(report);

    const std::uint64_t session_seed = derive_seed(config_.master_seed, curator_->max_id());
    const std::int64_t deficit = curator_->quota().total_deficit();
    const std::int64_t campaign_budget =
        config_.budgets.max_attempts > 0 ? config_.budgets.max_attempts : 5 * deficit + 10;
    std::int64_t budget = campaign_budget;
    if (options_.max_slots) budget = std::min(budget, *options_.max_slots);

    std::array<int, kStageCount> consecutive{};
    std::uint64_t next_index = 0;
    const auto workers = static_cast<std::size_t>(config_.concurrency.workers);

    for (;;) {
      if (options_.stop && options_.stop->load()) {
        report.stopped = true;
        break;
      }
      QuotaMatrix plan = curator_->quota();
      if (plan.complete()) break;
      if (static_cast<std::int64_t>(report.attempted) >= budget) {
        report.budget_exhausted = report.attempted >= static_cast<std::size_t>(campaign_budget);
        report.slot_limit_reached = !report.budget_exhausted;
        break;
      }

      std::vector<std::pair<std::uint64_t, SlotKey>> wave;
      while (wave.size() < workers &&
             static_cast<std::int64_t>(report.attempted + wave.size()) < budget) {
        std::mt19937_64 rng(derive_seed(session_seed, next_index, 0x510));
        const auto slot = next_slot(plan, rng);
        if (!slot) break;
        plan.try_increment(*slot);
        wave.emplace_back(next_index++, *slot);
      }

      std::vector<std::future<AttemptResult>> futures;
      futures.reserve(wave.size());
      for (const auto& [index, slot] : wave) {
        futures.push_back(std::async(std::launch::async, [this, session_seed, index, slot] {
          return attempt(session_seed, index, slot);
        }));
      }
      std::vector<AttemptResult> results;
      std::exception_ptr error;
      for (auto& f : futures) {
        try {
          results.push_back(f.get());
        } catch (...) {
          if (!error) error = std::current_exception();
        }
      }
      if (error) std::rethrow_exception(error);

      std::optional<Stage> fatal;
      for (auto& r : results) {
        settle(r, report);
        if (!r.unavailable) {
          consecutive.fill(0);
        } else {
          for (std::size_t s = 0; s < *r.unavailable; ++s) consecutive[s] = 0;
          if (++consecutive[*r.unavailable] >= config_.budgets.fatal_after) fatal = r.unavailable;
        }
      }
      report.quota = curator_->quota();
      if (options_.progress) options_.progress(report);
      if (fatal) {
        throw FatalBackendError(
            std::string(kStageNames[*fatal]),
            fmt::format("{} stage unreachable for {} consecutive slot attempts: {}",
                        kStageNames[*fatal], consecutive[*fatal], results.back().detail));
      }
    }

    report.quota = curator_->quota();
    report.complete = report.quota.complete();
    report.peak_in_flight["llm"] = llm_->cap().peak();
    for (const auto& [id, p] : proposers_) report.peak_in_flight["proposer:" + id] = p->cap().peak();
    for (const auto& [id, v] : verifiers_) report.peak_in_flight["verifier:" + id] = v->cap().peak();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
  }

 private:
  void note(const std::string& text) const {
    if (options_.log) options_.log(text);
  }

  AttemptResult attempt(std::uint64_t session_seed, std::uint64_t index, const SlotKey& slot) {
    AttemptResult r;
    r.record.index = index;
    r.record.slot = slot;
    const std::uint64_t seed = derive_seed(session_seed, index);
    std::mt19937_64 rng(seed);

    std::string object;
    if (const auto it = config_.object_examples.find(slot.object_type);
        it != config_.object_examples.end() && !it->second.empty()) {
      object = it->second[uniform_below(rng, it->second.size())];
    } else {
      object = slot.object_type;
      std::transform(object.begin(), object.end(), object.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    const BasePrompt base{
        render_base_prompt(config_.base_prompts.at(slot.object_type), slot.race, object),
        slot.object_type, slot.race};

    EnrichOptions opts;
    opts.attempts = config_.budgets.enrich_attempts;
    opts.profile = profile_;
    opts.max_tokens = config_.llm.max_tokens;
    opts.temperature = config_.llm.temperature;

    std::shared_ptr<const EnrichedPrompt> enriched;
    try {
      enriched = std::make_shared<const EnrichedPrompt>(enrich(base, *llm_, opts));
    } catch (const EnrichError& e) {
      ++r.failures.enrich;
      r.record.outcome = fmt::format("enrich failed ({}): {}", to_string(e.stage()), e.last_error());
      return r;
    } catch (const BackendUnavailable& e) {
      ++r.failures.llm_unavailable;
      r.unavailable = kLlm;
      r.detail = e.what();
      r.record.outcome = std::string("llm unavailable: ") + e.what();
      return r;
    } catch (const BackendProtocolError& e) {
      ++r.failures.enrich;
      r.record.outcome = std::string("llm protocol error: ") + e.what();
      return r;
    }

    std::vector<ProposerDescriptor> chosen;
    try {
      chosen = route(*enriched, pool_, categories_);
    } catch (const NoProposerForCategory& e) {
      ++r.failures.no_proposer;
      r.record.outcome = e.what();
      return r;
    }
    const ProposerLookup lookup = [this](const std::string& id) -> ProposerBackend& {
      return *proposers_.at(id);
    };

    bool proposer_answered = false;
    std::string last_detail;
    for (int round = 1; round <= config_.budgets.proposer_rounds; ++round) {
      r.record.rounds = round;
      std::vector<std::uint64_t> seeds;
      for (std::size_t i = 0; i < chosen.size(); ++i) {
        seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(round), i));
      }
      ProposalBatch batch;
      try {
        batch = propose_batch(enriched, chosen, seeds, lookup, store_);
      } catch (const AllProposersFailed& e) {
        ++r.failures.all_proposers_failed;
        r.failures.proposer += e.failures().size();
        const bool all_down = std::all_of(e.failures().begin(), e.failures().end(),
                                          [](const ProposerFailure& f) { return f.unavailable; });
        if (!all_down) proposer_answered = true;
        last_detail = e.what();
        continue;
      }
      proposer_answered = true;
      r.failures.proposer += batch.failures.size();
      for (const auto& c : batch.candidates) ++r.per_proposer[c.proposer_id].proposed;

      GateOutcome outcome;
      try {
        outcome = gate(batch.candidates, *router_, store_, config_.human_review);
      } catch (const BackendUnavailable& e) {
        ++r.failures.verifier_unavailable;
        r.unavailable = kVerifier;
        r.detail = e.what();
        r.record.outcome = std::string("verifier unavailable: ") + e.what();
        return r;
      } catch (const BackendProtocolError& e) {
        ++r.failures.verifier_error;
        last_detail = e.what();
        continue;
      } catch (const CorruptImage& e) {
        ++r.failures.corrupt_image;
        last_detail = e.what();
        continue;
      }
      for (const auto& s : outcome.accepted) ++r.per_proposer[s.candidate.proposer_id].accepted;
      for (const auto& s : outcome.rejected) ++r.per_proposer[s.candidate.proposer_id].rejected;
      for (const auto& s : outcome.queued) ++r.per_proposer[s.candidate.proposer_id].queued;
      r.queued.insert(r.queued.end(), outcome.queued.begin(), outcome.queued.end());

      if (outcome.signal == GateSignal::Proceed) {
        r.accepted = std::move(outcome.accepted);
        std::stable_sort(r.accepted.begin(), r.accepted.end(),
                         [](const ScoredCandidate& a, const ScoredCandidate& b) {
                           return a.verdict.score > b.verdict.score;
                         });
        r.record.outcome = "accepted";
        return r;
      }
    }
    if (!proposer_answered) {
      r.unavailable = kProposer;
      r.detail = last_detail;
    }
    r.record.outcome = last_detail.empty()
                           ? fmt::format("no acceptance after {} rounds", r.record.rounds)
                           : fmt::format("no acceptance after {} rounds: {}", r.record.rounds,
                                         last_detail);
    return r;
  }

  ManifestRecord record_for(const ScoredCandidate& s, const SlotKey& slot) const {
    const EnrichedPrompt& e = *s.candidate.enriched;
    ManifestRecord rec;
    rec.image_path = s.candidate.image_ref;
    rec.positive = e.pair.positive;
    rec.negative = e.pair.negative;
    rec.program_text = serialize_program(e.program);
    rec.object_type = slot.object_type;
    rec.race = slot.race;
    rec.pose_category = pose_category_of(e.program, categories_).name;
    rec.proposer_id = s.candidate.proposer_id;
    rec.verifier_score = s.verdict.score;
    rec.seed = s.candidate.params.seed;
    rec.warnings = unique_warnings(e.report);
    rec.created_at = utc_timestamp();
    return rec;
  }

  void settle(AttemptResult& r, CampaignReport& report) {
    merge(report.failures, r.failures);
    for (const auto& [id, s] : r.per_proposer) {
      auto& into = report.per_proposer[id];
      into.proposed += s.proposed;
      into.accepted += s.accepted;
      into.rejected += s.rejected;
      into.queued += s.queued;
    }
    for (const auto& q : r.queued) {
      const ManifestRecord rec = record_for(q, r.record.slot);
      ReviewItem item;
      item.pair_id = q.candidate.pair_id;
      item.image_path = rec.image_path;
      item.positive = rec.positive;
      item.negative = rec.negative;
      item.program_text = rec.program_text;
      item.proposer_id = rec.proposer_id;
      item.verifier_id = q.verdict.verifier_id;
      item.score = q.verdict.score;
      item.threshold = q.verdict.threshold_used;
      item.object_type = rec.object_type;
      item.race = rec.race;
      item.pose_category = rec.pose_category;
      item.seed = rec.seed;
      item.warnings = rec.warnings;
      item.created_at = rec.created_at;
      queue_.append(item);
      ++report.queued_for_review;
    }

    for (std::size_t i = 0; i < r.accepted.size(); ++i) {
      const AdmitResult res = curator_->admit(record_for(r.accepted[i], r.record.slot));
      if (res.admitted()) {
        r.record.filled = true;
        r.record.id = res.id;
        const std::size_t rest = r.accepted.size() - i - 1;
        if (rest > 0) {
          report.surplus += rest;
          note(fmt::format("attempt {}: {} surplus accepted pair(s) for {} discarded", r.record.index,
                           rest, to_string(r.record.slot)));
        }
        break;
      }
      if (res.status == AdmitStatus::Duplicate) {
        ++report.failures.duplicate;
        continue;
      }
      ++report.failures.slot_full;
      break;
    }
    if (!r.accepted.empty() && !r.record.filled) r.record.outcome = "accepted pairs not admitted";

    ++report.attempted;
    if (r.record.filled) {
      ++report.filled;
    } else {
      ++report.abandoned;
      note(fmt::format("attempt {} for {} abandoned: {}", r.record.index, to_string(r.record.slot),
                       r.record.outcome));
    }
    report.attempts.push_back(std::move(r.record));
  }

  void adjudicate(CampaignReport& report) {
    const auto items = queue_.load();
    if (items.empty()) return;
    std::map<std::string, std::pair<int, int>> votes;  // accept, total
    for (const auto& l : LabelStore(config_.labels_path()).load()) {
      auto& v = votes[l.pair_id];
      v.first += l.accept ? 1 : 0;
      ++v.second;
    }
    for (const auto& item : items) {
      const auto v = votes.find(item.pair_id);
      if (v == votes.end() || 2 * v->second.first <= v->second.second) continue;
      if (item.score < item.threshold) continue;
      const QuotaMatrix q = curator_->quota();
      const SlotKey slot{item.object_type, item.race};
      if (!q.contains(slot) || q.deficit(slot) <= 0) continue;
      if (curator_->has_hash(content_hash_of_path(item.image_path))) continue;

      ManifestRecord rec;
      rec.image_path = item.image_path;
      rec.positive = item.positive;
      rec.negative = item.negative;
      rec.program_text = item.program_text;
      rec.object_type = item.object_type;
      rec.race = item.race;
      rec.pose_category = item.pose_category;
      rec.proposer_id = item.proposer_id;
      rec.verifier_score = item.score;
      rec.seed = item.seed;
      rec.warnings = item.warnings;
      rec.created_at = utc_timestamp();
      if (curator_->admit(std::move(rec)).admitted()) {
        ++report.admitted_from_review;
        note("admitted reviewed pair " + item.pair_id);
      }
    }
  }

  const CampaignConfig& config_;
  const RunOptions& options_;
  RuleProfile profile_;
  CategoryTable categories_;
  ImageStore store_;
  ReviewQueue queue_;
  std::vector<ProposerDescriptor> pool_;
  std::unique_ptr<CappedLlm> llm_;
  std::map<std::string, std::unique_ptr<CappedProposer>> proposers_;
  std::map<std::string, std::unique_ptr<CappedVerifier>> verifiers_;
  std::unique_ptr<VerifierRouter> router_;
  std::unique_ptr<Curator> curator_;
};

}  // namespace

CampaignReport run_campaign(const CampaignConfig& config, const BackendSet& backends,
                            const RunOptions& options) {
  validate_config(config);
  Pipeline pipeline(config, backends, options);
  return pipeline.run();
}

std::string render_report(const CampaignReport& r) {
  std::string out = fmt::format(
      "slot attempts: {}  filled: {}  abandoned: {}  surplus: {}\n"
      "quota: {}/{}{}\n",
      r.attempted, r.filled, r.abandoned, r.surplus, r.quota.total_filled(),
      r.quota.total_target(),
      r.complete ? " (complete)"
      : r.stopped ? " (stopped)"
      : r.budget_exhausted ? " (attempt budget spent)"
      : r.slot_limit_reached ? " (slot limit reached)"
      : "");
  if (r.admitted_from_review || r.queued_for_review) {
    out += fmt::format("review: {} admitted from labels, {} queued\n", r.admitted_from_review,
                       r.queued_for_review);
  }
  const auto& f = r.failures;
  out += fmt::format(
      "failures: enrich={} llm_unavailable={} no_proposer={} proposer={} all_proposers_failed={} "
      "verifier_unavailable={} verifier_error={} corrupt_image={} duplicate={} slot_full={}\n",
      f.enrich, f.llm_unavailable, f.no_proposer, f.proposer, f.all_proposers_failed,
      f.verifier_unavailable, f.verifier_error, f.corrupt_image, f.duplicate, f.slot_full);
  for (const auto& [id, s] : r.per_proposer) {
    out += fmt::format("proposer {}: proposed={} accepted={} rejected={} queued={} rate={:.3f}\n",
                       id, s.proposed, s.accepted, s.rejected, s.queued, s.acceptance_rate());
  }
  out += fmt::format("wall clock: {:.2f}s\n", r.wall_seconds);
  return out;
}

json report_json(const CampaignReport& r) {
  json per = json::object();
  for (const auto& [id, s] : r.per_proposer) {
    per[id] = {{"proposed", s.proposed},
               {"accepted", s.accepted},
               {"rejected", s.rejected},
               {"queued", s.queued},
               {"acceptance_rate", s.acceptance_rate()}};
  }
  const auto& f = r.failures;
  return json{{"attempted", r.attempted},
              {"filled", r.filled},
              {"abandoned", r.abandoned},
              {"surplus", r.surplus},
              {"admitted_from_review", r.admitted_from_review},
              {"queued_for_review", r.queued_for_review},
              {"failures",
               {{"enrich", f.enrich},
                {"llm_unavailable", f.llm_unavailable},
                {"no_proposer", f.no_proposer},
                {"proposer", f.proposer},
                {"all_proposers_failed", f.all_proposers_failed},
                {"verifier_unavailable", f.verifier_unavailable},
                {"verifier_error", f.verifier_error},
                {"corrupt_image", f.corrupt_image},
                {"duplicate", f.duplicate},
                {"slot_full", f.slot_full}}},
              {"per_proposer", per},
              {"peak_in_flight", r.peak_in_flight},
              {"wall_seconds", r.wall_seconds},
              {"complete", r.complete},
              {"stopped", r.stopped},
              {"budget_exhausted", r.budget_exhausted},
              {"slot_limit_reached", r.slot_limit_reached},
              {"filled_total", r.quota.total_filled()},
              {"target_total", r.quota.total_target()}};
}

StatusReport status_report(const std::filesystem::path& data_dir) {
  const auto quota_path = data_dir / "quota.json";
  const QuotaConfig qc = std::filesystem::exists(quota_path) ? read_quota_file(quota_path)
                                                             : QuotaConfig::default_table();
  const QuotaMatrix targets = init_quota(qc);
  const auto manifest_path = data_dir / "manifest.jsonl";
  const RebuildResult rebuilt = rebuild_from_manifest(manifest_path, targets, false);
  const ManifestContents manifest = read_manifest(manifest_path);

  StatusReport out;
  out.stats = stats(rebuilt.quota, manifest.records);
  out.torn_tail = manifest.torn_tail;
  out.last_activity = out.stats.last_activity;
  for (const auto& item : ReviewQueue(data_dir / "review_queue.jsonl").load()) {
    if (!rebuilt.hashes.count(content_hash_of_path(item.image_path))) ++out.review_queued;
    out.last_activity = std::max(out.last_activity, item.created_at);
  }
  out.labels = read_training_labels(data_dir / "labels.jsonl").size();
  return out;
}

std::string render_status(const StatusReport& s) {
  std::string out = render_stats_table(s.stats);
  if (s.torn_tail) out += "note: manifest ends in a partial line (ignored)\n";
  if (s.review_queued || s.labels) {
    out += fmt::format("review queue: {} pending, {} labels\n", s.review_queued, s.labels);
  }
  return out;
}

json status_json(const StatusReport& s) {
  json j = stats_json(s.stats);
  j["torn_tail"] = s.torn_tail;
  j["review_queued"] = s.review_queued;
  j["labels"] = s.labels;
  j["last_activity"] = s.last_activity;
  return j;
}

}  // namespace hoigen
