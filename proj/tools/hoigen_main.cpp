// hoigen: campaign driver for hand-object interaction image datasets.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hoigen/campaign.hpp"
#include "hoigen/eval.hpp"
#include "hoigen/review.hpp"
#include "hoigen/review_server.hpp"
#include "hoigen/util.hpp"

namespace fs = std::filesystem;
using namespace hoigen;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

void install_signal_handlers() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

int cmd_init(const fs::path& config_path, const std::string& data_dir, bool force) {
  if (fs::exists(config_path) && !force) {
    fmt::print(stderr, "{} already exists (use --force to overwrite)\n", config_path.string());
    return 1;
  }
  const auto j = default_config_json(data_dir);
  if (config_path.has_parent_path()) fs::create_directories(config_path.parent_path());
  write_file_atomic(config_path, j.dump(2) + "\n");
  const CampaignConfig config = load_config(config_path);
  fs::create_directories(config.data_dir / "images");
  write_quota_file(config.quota_path(), config.quota);
  fmt::print("wrote {}\ndata directory {}\n", config_path.string(), config.data_dir.string());
  return 0;
}

int cmd_run(const fs::path& config_path, bool mock, std::optional<std::int64_t> max_slots,
            bool json_out, bool quiet) {
  const CampaignConfig config = load_config(config_path);
  const BackendSet backends = mock ? make_mock_backends(config) : make_http_backends(config);

  install_signal_handlers();
  RunOptions options;
  options.stop = &g_stop;
  options.max_slots = max_slots;
  auto last = std::chrono::steady_clock::now() - std::chrono::seconds(10);
  options.progress = [&](const CampaignReport& r) {
    if (quiet) return;
    const auto now = std::chrono::steady_clock::now();
    if (now - last < std::chrono::seconds(1) && !r.quota.complete()) return;
    last = now;
    fmt::print(stderr, "filled {}/{}  attempts {}  abandoned {}\n", r.quota.total_filled(),
               r.quota.total_target(), r.attempted, r.abandoned);
  };
  if (!quiet) options.log = [](std::string_view msg) { fmt::print(stderr, "{}\n", msg); };

  const CampaignReport report = run_campaign(config, backends, options);
  if (json_out) {
    std::cout << report_json(report).dump(2) << "\n";
  } else {
    std::cout << render_report(report);
  }
  if (report.budget_exhausted && !report.complete) return 4;
  return 0;
}

int cmd_status(const fs::path& dir, bool json_out) {
  const StatusReport status = status_report(dir);
  if (json_out) {
    std::cout << status_json(status).dump(2) << "\n";
  } else {
    std::cout << render_status(status);
  }
  return 0;
}

int cmd_export(const fs::path& dir, bool labels, bool manifest, const std::string& out) {
  if (labels == manifest) {
    fmt::print(stderr, "choose exactly one of --labels or --manifest\n");
    return 2;
  }
  if (labels) {
    const auto all = LabelStore(dir / "labels.jsonl").load();
    const fs::path target = out.empty() ? dir / "training_labels.jsonl" : fs::path(out);
    export_training_labels(all, target);
    fmt::print("{} labels -> {}\n", all.size(), target.string());
    return 0;
  }
  const auto contents = read_manifest(dir / "manifest.jsonl");
  std::string text;
  for (const auto& r : contents.records) text += to_json(r).dump() + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
    fmt::print(stderr, "{} records -> {}\n", contents.records.size(), out);
  }
  return 0;
}

int cmd_review_serve(const fs::path& dir, const std::string& bind) {
  const auto [host, port] = parse_bind_address(bind);
  ReviewServer server(dir);
  const int bound = server.start(host, port);
  fmt::print("review endpoint on http://{}:{}/ (Ctrl-C to stop)\n", host, bound);
  std::fflush(stdout);
  install_signal_handlers();
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

int cmd_eval(const fs::path& file, bool json_out) {
  const EvalInput input = load_eval_file(file);
  if (input.scores.empty() && input.ratings.empty()) {
    fmt::print(stderr, "{}: no score samples or ratings\n", file.string());
    return 1;
  }
  std::vector<ScoreCell> scores;
  if (!input.scores.empty()) scores = aggregate_scores(input.scores);
  const auto ratings = human_study_report(input.ratings);
  if (json_out) {
    std::cout << eval_report_json(scores, ratings).dump(2) << "\n";
  } else {
    std::cout << render_eval_report(scores, ratings);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate, curate and review hand-object interaction image datasets"};
  app.require_subcommand(1);

  auto* init = app.add_subcommand("init", "Write a starting config and create its data directory");
  std::string init_config;
  std::string init_data = "data";
  bool init_force = false;
  init->add_option("config", init_config, "Config file to create")->required();
  init->add_option("--data-dir", init_data, "Data directory, relative to the config file");
  init->add_flag("--force", init_force, "Overwrite an existing config");

  auto* run = app.add_subcommand("run", "Run or resume a campaign");
  std::string run_config;
  bool run_mock = false;
  bool run_json = false;
  bool run_quiet = false;
  std::int64_t max_slots = -1;
  run->add_option("config", run_config, "Campaign config")->required()->check(CLI::ExistingFile);
  run->add_flag("--mock", run_mock, "Use deterministic in-process backends");
  run->add_option("--max-slots", max_slots, "Stop after this many slot attempts")
      ->check(CLI::NonNegativeNumber);
  run->add_flag("--json", run_json, "Print the report as JSON");
  run->add_flag("-q,--quiet", run_quiet, "No progress output");

  auto* status = app.add_subcommand("status", "Quota progress of a data directory");
  std::string status_dir;
  bool status_json_out = false;
  status->add_option("dir", status_dir, "Data directory")->required();
  status->add_flag("--json", status_json_out, "Machine-readable output");

  auto* exp = app.add_subcommand("export", "Export training labels or the manifest");
  std::string export_dir;
  bool export_labels = false;
  bool export_manifest = false;
  std::string export_out;
  exp->add_option("dir", export_dir, "Data directory")->required()->check(CLI::ExistingDirectory);
  exp->add_flag("--labels", export_labels, "Human labels as verifier training data");
  exp->add_flag("--manifest", export_manifest, "Complete manifest records");
  exp->add_option("-o,--out", export_out, "Output file");

  auto* serve = app.add_subcommand("review-serve", "Serve the human review endpoint");
  std::string serve_dir;
  std::string serve_bind = "127.0.0.1:8765";
  serve->add_option("dir", serve_dir, "Data directory")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--bind", serve_bind, "host:port");

  auto* eval = app.add_subcommand("eval", "Aggregate score samples and human ratings");
  std::string eval_file;
  bool eval_json = false;
  eval->add_option("scores-file", eval_file, "Line-delimited JSON")->required()->check(
      CLI::ExistingFile);
  eval->add_flag("--json", eval_json, "Machine-readable output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*init) return cmd_init(init_config, init_data, init_force);
    if (*run) {
      std::optional<std::int64_t> limit;
      if (max_slots >= 0) limit = max_slots;
      return cmd_run(run_config, run_mock, limit, run_json, run_quiet);
    }
    if (*status) return cmd_status(status_dir, status_json_out);
    if (*exp) return cmd_export(export_dir, export_labels, export_manifest, export_out);
    if (*serve) return cmd_review_serve(serve_dir, serve_bind);
    if (*eval) return cmd_eval(eval_file, eval_json);
  } catch (const FatalBackendError& e) {
    fmt::print(stderr, "fatal: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
