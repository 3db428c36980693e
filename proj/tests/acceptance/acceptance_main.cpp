// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures. argv[1], when given, is the hoigen CLI used for the
// crash-resume check.

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "hoigen/campaign.hpp"
#include "hoigen/curator.hpp"
#include "hoigen/dsl.hpp"
#include "hoigen/eval.hpp"
#include "hoigen/jsonl.hpp"
#include "hoigen/prompt_engine.hpp"
#include "hoigen/rules.hpp"
#include "hoigen/util.hpp"
#include "rule_oracle.hpp"
#include "stubs.hpp"

extern char** environ;

using namespace hoigen;
using hoigen::testing::TempDir;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (cond) return;
    if (ok) detail = what;
    ok = false;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int run_criterion(int number, const std::string& name, double limit_s,
                  const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.expect(false, fmt::format("exception: {}", e.what()));
  }
  const double elapsed = seconds_since(t0);
  if (limit_s > 0) out.expect(elapsed < limit_s, fmt::format("took {:.2f}s, limit {:.0f}s", elapsed, limit_s));
  fmt::print("{} {} {} ({:.2f}s){}\n", out.ok ? "PASS" : "FAIL", number, name, elapsed,
             out.ok ? "" : "  " + out.detail);
  std::fflush(stdout);
  return out.ok ? 0 : 1;
}

std::vector<nlohmann::json> manifest_without_timestamps(const fs::path& manifest) {
  std::vector<nlohmann::json> out;
  for (const auto& line : read_jsonl(manifest).records) {
    auto j = line.value;
    j.erase("created_at");
    out.push_back(std::move(j));
  }
  return out;
}

// 1
void dsl_golden(Outcome& o) {
  const HandProgram p = parse_program(hoigen::testing::kGoldenProgram);
  o.expect(p.right.has_value() && p.left.has_value(), "both hands parsed");
  o.expect(p.left && p.left->motion == MotionType::FullFingerWrap, "alias maps to full finger wrap");
  const std::string canon = serialize_program(p);
  o.expect(parse_program(canon) == p, "canonical form reparses");

  const ValidationReport r = validate_program(p);
  o.expect(r.count(Severity::Error) == 0, "errors: " + r.error_summary());
  o.expect(r.count(RuleId::A1) == 1, "one A1 note");
  o.expect(r.count(RuleId::W1) == 5, fmt::format("W1 count {}", r.count(RuleId::W1)));
  o.expect(r.violations.size() == 6, "six violations in total");
  std::set<Field> w1_fields;
  for (const auto& v : r.violations) {
    if (v.rule == RuleId::W1) {
      o.expect(v.severity == Severity::Warning, "W1 is a warning");
      o.expect(v.location.section == Section::LeftHand, "W1 on the left hand");
      w1_fields.insert(v.location.field);
    }
    if (v.rule == RuleId::A1) {
      o.expect(v.severity == Severity::Note, "A1 is a note");
      o.expect(v.location == Location{Section::LeftHand, Field::MotionType}, "A1 on left motion");
    }
  }
  o.expect(w1_fields == std::set<Field>{Field::Thumb, Field::IndexFinger, Field::MiddleFinger,
                                        Field::RingFinger, Field::LittleFinger},
           "W1 covers every left digit");
}

// 2
void grammar_round_trip(Outcome& o) {
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const HandProgram p = random_program(seed);
    const std::string once = serialize_program(p);
    const HandProgram back = parse_program(once);
    if (!(back == p) || serialize_program(back) != once) ++failures;
  }
  o.expect(failures == 0, fmt::format("{} round-trip failures", failures));
}

// 3
void rule_oracle(Outcome& o) {
  int disagreements = 0;
  std::uint64_t first = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const HandProgram p = random_program(seed);
    const auto report = validate_program(p);
    const auto oracle = hoigen::testing::oracle_check(serialize_program(p));
    bool same = oracle.plausible == report.is_plausible();
    for (std::size_t i = 0; i < oracle.counts.size(); ++i) {
      same = same && static_cast<std::size_t>(oracle.counts[i]) ==
                         report.count(static_cast<RuleId>(i));
    }
    if (!same && disagreements++ == 0) first = seed;
  }
  o.expect(disagreements == 0,
           fmt::format("{} disagreements, first at seed {}", disagreements, first));
}

// 4
void quota_fidelity(Outcome& o) {
  const std::vector<std::string> races = {"Light skinned", "Dark Skinned", "Asian", "Indian",
                                          "Latin"};
  const std::vector<std::pair<std::string, std::vector<std::int64_t>>> table = {
      {"Kitchen objects", {100, 200, 200, 200, 200}},
      {"Sports Objects", {100, 100, 200, 200, 200}},
      {"Electronics", {100, 100, 200, 200, 200}},
      {"Musical Instruments", {200, 200, 300, 200, 200}},
      {"Hardware tools", {200, 200, 200, 200, 200}},
      {"Art supplies", {100, 100, 100, 100, 100}},
      {"Medical Instruments", {100, 100, 100, 100, 100}},
      {"Gardening tools", {100, 100, 100, 100, 100}},
      {"Vehicle Interior", {100, 100, 100, 100, 100}},
      {"Straight hand", {100, 200, 300, 200, 200}},
      {"Household supplies", {100, 100, 100, 100, 100}},
      {"Office supplies", {100, 100, 100, 100, 100}},
      {"Miscellaneous", {300, 300, 300, 300, 300}},
  };
  // Row totals as a multiset: 500 x 6, the rest once each.
  std::vector<std::int64_t> rows = {900, 800, 800, 1100, 1000, 500, 500,
                                    500, 500, 500, 500, 1000, 1500};
  std::sort(rows.begin(), rows.end());
  const std::vector<std::int64_t> cols = {1700, 1900, 2300, 2100, 2100};

  const QuotaMatrix q = init_quota(QuotaConfig::default_table());
  o.expect(q.races() == races, "race columns");
  o.expect(q.object_types().size() == table.size(), "13 object rows");
  o.expect(q.target({"Kitchen objects", "Light skinned"}) == 100, "kitchen/light cell");
  std::vector<std::int64_t> got_rows;
  for (std::size_t i = 0; i < table.size() && i < q.object_types().size(); ++i) {
    const auto& [obj, cells] = table[i];
    o.expect(q.object_types()[i] == obj, "row order at " + obj);
    std::int64_t sum = 0;
    for (std::size_t j = 0; j < races.size(); ++j) {
      o.expect(q.target({obj, races[j]}) == cells[j], fmt::format("cell {}/{}", obj, races[j]));
      sum += cells[j];
    }
    o.expect(q.row_target(obj) == sum, fmt::format("row {} = {}, want {}", obj, q.row_target(obj), sum));
    got_rows.push_back(q.row_target(obj));
  }
  std::sort(got_rows.begin(), got_rows.end());
  o.expect(got_rows == rows, "row totals");
  for (std::size_t j = 0; j < races.size(); ++j) {
    o.expect(q.column_target(races[j]) == cols[j],
             fmt::format("column {} = {}, want {}", races[j], q.column_target(races[j]), cols[j]));
  }
  o.expect(q.total_target() == 10100, fmt::format("grand total {}", q.total_target()));
}

// 5
void mock_campaign(Outcome& o) {
  TempDir a, b;
  const CampaignConfig ca = hoigen::testing::test_config(a.path());
  const CampaignConfig cb = hoigen::testing::test_config(b.path());
  const CampaignReport ra = run_campaign(ca, make_mock_backends(ca));
  o.expect(ra.complete, "campaign completes");
  o.expect(ra.quota.total_target() == 101, "101 target pairs");
  for (const auto& k : ra.quota.slots()) {
    o.expect(ra.quota.filled(k) == ra.quota.target(k), "cell at target: " + to_string(k));
  }
  const auto recs = read_manifest(ca.manifest_path()).records;
  o.expect(recs.size() == 101, fmt::format("{} manifest records", recs.size()));
  for (const auto& r : recs) {
    o.expect(r.verifier_score >= ca.threshold, fmt::format("record {} below threshold", r.id));
  }
  run_campaign(cb, make_mock_backends(cb));
  o.expect(manifest_without_timestamps(ca.manifest_path()) ==
               manifest_without_timestamps(cb.manifest_path()),
           "repeat run manifest differs");
}

// 6
void retry_semantics(Outcome& o) {
  TempDir dir;
  CampaignConfig cfg = hoigen::testing::test_config(dir.path());
  cfg.budgets.proposer_rounds = 2;
  BackendSet set = make_mock_backends(cfg);
  std::vector<std::shared_ptr<hoigen::testing::StubProposer>> stubs;
  for (const auto& p : cfg.proposers) {
    auto s = std::make_shared<hoigen::testing::StubProposer>(p.descriptor.id);
    stubs.push_back(s);
    set.proposers[p.descriptor.id] = s;
  }
  set.verifiers[cfg.default_verifier] = hoigen::testing::constant_verifier(0.0);

  const CampaignReport report = run_campaign(cfg, set);
  o.expect(report.filled == 0, "no admissions");
  o.expect(report.budget_exhausted && !report.complete, "ends on the attempt budget");
  o.expect(report.attempted > 0, "attempts were made");
  std::size_t rounds = 0;
  for (const auto& at : report.attempts) {
    o.expect(at.rounds == 2, fmt::format("attempt {} ran {} rounds", at.index, at.rounds));
    rounds += static_cast<std::size_t>(at.rounds);
  }
  std::size_t calls = 0;
  for (const auto& s : stubs) calls += static_cast<std::size_t>(s->calls.load());
  o.expect(calls == rounds, fmt::format("{} proposer calls for {} rounds", calls, rounds));
  o.expect(read_manifest(cfg.manifest_path()).records.empty(), "empty manifest");
}

// 7
pid_t spawn_cli(const std::string& cli, const fs::path& config) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
  std::vector<std::string> args = {cli, "run", config.string(), "--mock", "-q"};
  std::vector<char*> argv;
  for (auto& s : args) argv.push_back(s.data());
  argv.push_back(nullptr);
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, cli.c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw std::runtime_error(fmt::format("posix_spawn failed: {}", rc));
  return pid;
}

int wait_exit(pid_t pid) {
  int status = 0;
  waitpid(pid, &status, 0);
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

fs::path write_cli_config(const fs::path& dir) {
  auto j = default_config_json("data");
  j["quota"]["scale"] = "1/100";
  j["mock"]["latency_ms"] = 10;
  const fs::path path = dir / "hoigen.json";
  write_file_atomic(path, j.dump(2) + "\n");
  return path;
}

std::map<SlotKey, std::int64_t> cell_counts(const std::vector<ManifestRecord>& recs) {
  std::map<SlotKey, std::int64_t> out;
  for (const auto& r : recs) ++out[r.slot()];
  return out;
}

void crash_resume(Outcome& o, const std::string& cli) {
  if (cli.empty()) {
    o.expect(false, "no CLI path given");
    return;
  }
  TempDir ref_dir, dir;
  const fs::path ref_config = write_cli_config(ref_dir.path());
  const fs::path config = write_cli_config(dir.path());
  const fs::path ref_manifest = ref_dir.path() / "data" / "manifest.jsonl";
  const fs::path manifest = dir.path() / "data" / "manifest.jsonl";

  const auto t0 = Clock::now();
  const int ref_rc = wait_exit(spawn_cli(cli, ref_config));
  const double reference_s = seconds_since(t0);
  o.expect(ref_rc == 0, fmt::format("reference run exit {}", ref_rc));
  const auto reference = read_manifest(ref_manifest).records;
  o.expect(reference.size() == 101, fmt::format("reference has {} records", reference.size()));

  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> frac(0.1, 0.4);
  int kills = 0;
  for (int k = 0; k < 3; ++k) {
    const auto delay = std::chrono::duration<double>(frac(rng) * reference_s);
    const pid_t pid = spawn_cli(cli, config);
    std::this_thread::sleep_for(delay);
    if (kill(pid, SIGKILL) == 0) ++kills;
    wait_exit(pid);
    if (k == 1) {
      std::ofstream out(manifest, std::ios::app | std::ios::binary);
      out << R"({"id":999999,"image_path":"images/)";
    }
    // Everything before the tail must still parse.
    read_manifest(manifest);
  }
  o.expect(kills == 3, fmt::format("{} of 3 kills landed", kills));
  const auto partial = read_manifest(manifest).records.size();
  o.expect(partial < 101, "kills interrupted the campaign");

  const int rc = wait_exit(spawn_cli(cli, config));
  o.expect(rc == 0, fmt::format("resumed run exit {}", rc));

  const auto contents = read_manifest(manifest);
  o.expect(!contents.torn_tail, "torn tail left behind");
  o.expect(cell_counts(contents.records) == cell_counts(reference), "per-cell counts differ");
  std::set<std::uint64_t> ids;
  std::set<std::string> hashes;
  for (const auto& r : contents.records) {
    o.expect(ids.insert(r.id).second, fmt::format("duplicate id {}", r.id));
    o.expect(hashes.insert(r.content_hash()).second, "duplicate image " + r.content_hash());
  }
  o.expect(contents.records.size() == 101, fmt::format("{} records", contents.records.size()));
}

// 8
void eval_math(Outcome& o) {
  auto norm = [](std::vector<double> v) { return normalize_min_max(v); };
  o.expect(norm({0.2, 0.6, 1.0}) == std::vector<double>{0.0, 0.5, 1.0}, "[0.2, 0.6, 1.0]");
  o.expect(norm({3, 3, 3}) == std::vector<double>{0.5, 0.5, 0.5}, "[3, 3, 3]");
  o.expect(norm({-1, 0, 3}) == std::vector<double>{0.0, 0.25, 1.0}, "[-1, 0, 3]");

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-50, 50);
  std::uniform_real_distribution<double> scale(0.01, 100);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> v(1 + t % 16);
    for (auto& x : v) x = u(rng);
    const double a = scale(rng);
    const double b = u(rng);
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = a * v[i] + b;
    const auto nv = normalize_min_max(v);
    const auto nw = normalize_min_max(w);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (std::fabs(nv[i] - nw[i]) > 1e-9) ++bad;
    }
  }
  o.expect(bad == 0, fmt::format("{} invariance violations", bad));

  const std::vector<RatingRecord> ratings = {{"r1", "i1", "modelA", Dimension::Fidelity, 3},
                                             {"r2", "i1", "modelA", Dimension::Fidelity, 4},
                                             {"r3", "i1", "modelA", Dimension::Fidelity, 5}};
  const auto cells = human_study_report(ratings);
  o.expect(cells.size() == 1, "one rating cell");
  if (!cells.empty()) {
    o.expect(fmt::format("{:.2f}", cells[0].mean) == "4.00",
             fmt::format("mean {:.2f}", cells[0].mean));
  }
}

// 9
void prompt_extraction(Outcome& o) {
  std::string sixty;
  for (int i = 0; i < 60; ++i) sixty += (i ? " w" : "w") + std::to_string(i);
  try {
    extract_prompt_pair("[" + sixty + "] [blurry]");
    o.expect(false, "60-word positive accepted");
  } catch (const ExtractionError& e) {
    o.expect(e.kind() == ExtractionError::Kind::TooLong && e.word_count() == 60,
             fmt::format("{} with {} words", to_string(e.kind()), e.word_count()));
  }
  std::string fifty;
  for (int i = 0; i < 50; ++i) fifty += (i ? " w" : "w") + std::to_string(i);
  o.expect(extract_prompt_pair("[" + fifty + "] [blurry]").positive == fifty, "50 words pass");

  const PromptPair pair =
      extract_prompt_pair("[A hand holds a cup, thumb fully open] [bad hands, extra fingers]");
  o.expect(pair.positive == "A hand holds a cup, thumb fully open", "positive prompt");
  o.expect(pair.negative == "bad hands, extra fingers", "negative prompt");
  try {
    extract_prompt_pair("no brackets at all");
    o.expect(false, "missing brackets accepted");
  } catch (const ExtractionError& e) {
    o.expect(e.kind() == ExtractionError::Kind::BracketsNotFound, "BracketsNotFound");
  }

  HandProgram bad = parse_program(hoigen::testing::kGoldenProgram);
  bad.left.reset();
  bad.right->motion = MotionType::TwoFingerGrasp;
  bad.right->fingers.fill(FingerState::HalfClosed);
  o.expect(validate_program(bad).count(RuleId::E3) == 1, "stub program violates E3");
  hoigen::testing::ScriptedLlm llm({serialize_program(bad),
                                    std::string(hoigen::testing::kGoldenProgram),
                                    "[A hand holds a cup] [bad hands]"});
  const BasePrompt base{"A hand holding a cup", "Kitchen objects", "Asian"};
  const EnrichedPrompt e = enrich(base, llm);
  const auto requests = llm.requests();
  o.expect(requests.size() == 3, fmt::format("{} requests", requests.size()));
  if (requests.size() >= 2) {
    o.expect(requests[0].find("E3") == std::string::npos, "attempt 1 mentions E3");
    o.expect(requests[1].find("E3") != std::string::npos, "attempt 2 lacks E3");
  }
  o.expect(e.pair.positive == "A hand holds a cup", "enriched pair");
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  int failures = 0;
  failures += run_criterion(1, "dsl golden program", 1, dsl_golden);
  failures += run_criterion(2, "grammar round trip", 5, grammar_round_trip);
  failures += run_criterion(3, "rule oracle agreement", 10, rule_oracle);
  failures += run_criterion(4, "quota fidelity", 0, quota_fidelity);
  failures += run_criterion(5, "mock campaign 1/100", 60, mock_campaign);
  failures += run_criterion(6, "retry semantics", 30, retry_semantics);
  failures += run_criterion(7, "crash resume", 0, [&](Outcome& o) { crash_resume(o, cli); });
  failures += run_criterion(8, "eval math", 0, eval_math);
  failures += run_criterion(9, "prompt extraction", 0, prompt_extraction);
  fmt::print("{} of 9 criteria passed\n", 9 - failures);
  return failures;
}
