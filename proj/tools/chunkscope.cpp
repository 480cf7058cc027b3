#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "chunkscope/aggregate.hpp"
#include "chunkscope/diagnosis.hpp"
#include "chunkscope/ingest.hpp"
#include "chunkscope/manifest.hpp"
#include "chunkscope/records_io.hpp"
#include "chunkscope/simulator.hpp"
#include "chunkscope/svg_report.hpp"

namespace {

// Exit codes: 0 success, 2 config error, 3 data error, 4 internal.
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kInternalError = 4;

using chunkscope::SimConfig;

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out_dir;
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

// Loads the config file (or builtin defaults) and applies the --seed override.
int load_config(const GlobalOpts &opts, SimConfig &config, std::string &fingerprint) {
  std::string text;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in.is_open()) {
      std::cerr << "error: cannot open config file " << opts.config_path << "\n";
      return kConfigError;
    }
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    auto parsed = chunkscope::parse_sim_config(text);
    if (std::holds_alternative<chunkscope::ConfigError>(parsed)) {
      const auto &err = std::get<chunkscope::ConfigError>(parsed);
      std::cerr << "error: " << opts.config_path << ":" << err.line << ": " << err.message << "\n";
      return kConfigError;
    }
    config = std::get<SimConfig>(parsed);
    fingerprint = chunkscope::config_fingerprint(text);
  } else {
    config = chunkscope::default_sim_config();
    fingerprint = chunkscope::config_fingerprint("builtin-defaults");
  }
  if (opts.seed) config.seed = *opts.seed;
  if (auto problem = chunkscope::validate_sim_config(config)) {
    std::cerr << "error: invalid config: " << *problem << "\n";
    return kConfigError;
  }
  return kOk;
}

int cmd_simulate(const GlobalOpts &opts, chunkscope::RunManifest &manifest) {
  SimConfig config;
  std::string fingerprint;
  if (int rc = load_config(opts, config, fingerprint); rc != kOk) return rc;

  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << opts.out_dir << "\n";
    return kDataError;
  }

  std::ofstream player(opts.out_dir + "/player.jsonl");
  std::ofstream cdn(opts.out_dir + "/cdn.jsonl");
  std::ofstream tcp(opts.out_dir + "/tcp.jsonl");
  std::ofstream sessions(opts.out_dir + "/sessions.jsonl");
  std::ofstream truth(opts.out_dir + "/truth.jsonl");
  if (!player.is_open() || !cdn.is_open() || !tcp.is_open() || !sessions.is_open() ||
      !truth.is_open()) {
    std::cerr << "error: cannot open output files under " << opts.out_dir << "\n";
    return kDataError;
  }

  Timer timer;
  chunkscope::StageInfo stage;
  stage.name = "simulate";
  std::int64_t chunk_count = 0, snapshot_count = 0, truth_count = 0;

  chunkscope::run_simulation(config, [&](chunkscope::SessionOutput &&session) {
    for (const auto &rec : session.player) player << chunkscope::to_jsonl(rec) << "\n";
    for (const auto &rec : session.cdn) cdn << chunkscope::to_jsonl(rec) << "\n";
    for (const auto &rec : session.snapshots) tcp << chunkscope::to_jsonl(rec) << "\n";
    for (const auto &rec : session.truth) truth << chunkscope::to_jsonl(rec) << "\n";
    sessions << chunkscope::to_jsonl(session.meta) << "\n";
    chunk_count += static_cast<std::int64_t>(session.player.size());
    snapshot_count += static_cast<std::int64_t>(session.snapshots.size());
    truth_count += static_cast<std::int64_t>(session.truth.size());
  });

  stage.duration_ms = timer.elapsed_ms();
  stage.counters = {{"sessions", config.n_sessions},
                    {"chunks", chunk_count},
                    {"snapshots", snapshot_count},
                    {"truth_records", truth_count}};
  stage.outputs = {"player.jsonl", "cdn.jsonl", "tcp.jsonl", "sessions.jsonl", "truth.jsonl"};
  manifest.config_hash = fingerprint;
  manifest.seed = config.seed;
  manifest.upsert_stage(std::move(stage));
  return kOk;
}

int cmd_ingest(const GlobalOpts &opts, const chunkscope::IngestPaths &paths,
               chunkscope::RunManifest &manifest) {
  Timer timer;
  auto result = chunkscope::run_ingest(paths, opts.out_dir);
  if (std::holds_alternative<chunkscope::IngestError>(result)) {
    std::cerr << "error: " << std::get<chunkscope::IngestError>(result).message << "\n";
    return kDataError;
  }
  const auto &report = std::get<chunkscope::JoinReport>(result);

  chunkscope::StageInfo stage;
  stage.name = "ingest";
  stage.duration_ms = timer.elapsed_ms();
  stage.counters = {{"joined", report.joined},
                    {"player_orphans", report.player_orphans},
                    {"cdn_orphans", report.cdn_orphans},
                    {"sessions_kept", report.sessions_kept},
                    {"sessions_total", report.sessions_total}};
  stage.inputs = {paths.player, paths.cdn, paths.tcp, paths.meta};
  stage.outputs = {"joined.jsonl", "sessions_kept.jsonl", "dropped_sessions.jsonl",
                   "join_report.json"};
  manifest.upsert_stage(std::move(stage));
  return kOk;
}

int cmd_diagnose(const GlobalOpts &opts, const std::string &in_dir, const std::string &labels,
                 const std::string &summary, const std::string &truth,
                 chunkscope::RunManifest &manifest) {
  Timer timer;
  const std::string scorecard =
      truth.empty() ? std::string() : opts.out_dir + "/scorecard.json";
  auto result = chunkscope::run_diagnose(in_dir, labels, summary, truth, scorecard,
                                         chunkscope::DiagnosisOptions{}, opts.jobs);
  if (std::holds_alternative<chunkscope::DiagnoseError>(result)) {
    std::cerr << "error: " << std::get<chunkscope::DiagnoseError>(result).message << "\n";
    return kDataError;
  }
  const auto &counters = std::get<chunkscope::DiagnoseCounters>(result);
  chunkscope::StageInfo stage;
  stage.name = "diagnose";
  stage.duration_ms = timer.elapsed_ms();
  stage.counters = {{"sessions", counters.sessions},
                    {"chunks", counters.chunks},
                    {"labels", counters.labels_emitted}};
  stage.inputs = {in_dir + "/joined.jsonl"};
  stage.outputs = {labels, summary};
  if (!scorecard.empty()) stage.outputs.push_back(scorecard);
  manifest.upsert_stage(std::move(stage));
  return kOk;
}

int cmd_analyze(const GlobalOpts &opts, const std::string &in_dir, const std::string &reports,
                chunkscope::RunManifest &manifest) {
  Timer timer;
  auto result = chunkscope::run_analyze(in_dir, reports, chunkscope::AggregateOptions{}, opts.jobs);
  if (std::holds_alternative<chunkscope::AnalyzeError>(result)) {
    std::cerr << "error: " << std::get<chunkscope::AnalyzeError>(result).message << "\n";
    return kDataError;
  }
  const auto &analysis = std::get<chunkscope::AnalysisResult>(result);
  chunkscope::StageInfo stage;
  stage.name = "analyze";
  stage.duration_ms = timer.elapsed_ms();
  stage.counters = {{"sessions", analysis.total_sessions}, {"chunks", analysis.total_chunks}};
  stage.inputs = {in_dir + "/joined.jsonl", in_dir + "/sessions_summary.jsonl"};
  stage.outputs = {reports};
  manifest.upsert_stage(std::move(stage));
  return kOk;
}

int cmd_report(const std::string &reports_dir, chunkscope::RunManifest *manifest) {
  Timer timer;
  auto result = chunkscope::render_reports(reports_dir);
  if (std::holds_alternative<chunkscope::ReportError>(result)) {
    std::cerr << "error: " << std::get<chunkscope::ReportError>(result).message << "\n";
    return kDataError;
  }
  if (manifest) {
    const auto &counters = std::get<chunkscope::ReportCounters>(result);
    chunkscope::StageInfo stage;
    stage.name = "report";
    stage.duration_ms = timer.elapsed_ms();
    stage.counters = {{"figures", counters.figures_written},
                      {"missing_inputs", counters.inputs_missing}};
    stage.inputs = {reports_dir};
    stage.outputs = {reports_dir};
    manifest->upsert_stage(std::move(stage));
  }
  return kOk;
}

int save_manifest_or_fail(const GlobalOpts &opts, const chunkscope::RunManifest &manifest) {
  if (!chunkscope::save_manifest(opts.out_dir + "/manifest.json", manifest)) {
    std::cerr << "error: cannot write manifest.json\n";
    return kDataError;
  }
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"chunkscope: chunk-level video delivery simulator and diagnosis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts opts;
  app.add_option("--config", opts.config_path, "Config file (TOML-style; builtin defaults if omitted)");
  std::uint64_t seed_value = 0;
  auto *seed_opt = app.add_option("--seed", seed_value, "Master seed override");
  app.add_option("--jobs", opts.jobs, "Worker threads for diagnose/analyze")
      ->check(CLI::Range(1, 256));
  app.add_option("--out", opts.out_dir, "Output directory");

  auto *simulate = app.add_subcommand("simulate", "Run the delivery simulator");
  auto *ingest = app.add_subcommand("ingest", "Parse, join, and proxy-filter logs");
  chunkscope::IngestPaths ingest_paths;
  ingest->add_option("--player", ingest_paths.player, "player.jsonl")->required();
  ingest->add_option("--cdn", ingest_paths.cdn, "cdn.jsonl")->required();
  ingest->add_option("--tcp", ingest_paths.tcp, "tcp.jsonl")->required();
  ingest->add_option("--meta", ingest_paths.meta, "sessions.jsonl")->required();

  auto *diagnose = app.add_subcommand("diagnose", "Per-chunk bottleneck classification");
  std::string diag_in, diag_labels, diag_summary, diag_truth;
  diagnose->add_option("--in", diag_in, "Ingest output directory")->required();
  diagnose->add_option("--labels", diag_labels, "labels.jsonl path (default <in>/labels.jsonl)");
  diagnose->add_option("--summary", diag_summary,
                       "sessions_summary.jsonl path (default <in>/sessions_summary.jsonl)");
  diagnose->add_option("--truth", diag_truth, "truth.jsonl for detector scoring");

  auto *analyze = app.add_subcommand("analyze", "Cross-session aggregate analyses");
  std::string analyze_in, analyze_reports;
  analyze->add_option("--in", analyze_in, "Directory with joined + summary files")->required();
  analyze->add_option("--reports", analyze_reports, "Reports directory (default <out>/reports)");

  auto *report = app.add_subcommand("report", "Render SVG figures from analysis CSVs");
  std::string report_in;
  report->add_option("--in", report_in, "Reports directory")->required();

  auto *pipeline = app.add_subcommand("pipeline", "simulate -> ingest -> diagnose -> analyze -> report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  if (seed_opt->count() > 0) opts.seed = seed_value;

  try {
    if (simulate->parsed() || pipeline->parsed()) {
      if (opts.out_dir.empty()) {
        std::cerr << "error: --out is required\n";
        return kConfigError;
      }
    }

    if (simulate->parsed()) {
      chunkscope::RunManifest manifest = chunkscope::load_manifest(opts.out_dir + "/manifest.json");
      if (int rc = cmd_simulate(opts, manifest); rc != kOk) return rc;
      return save_manifest_or_fail(opts, manifest);
    }

    if (ingest->parsed()) {
      if (opts.out_dir.empty()) {
        std::cerr << "error: --out is required\n";
        return kConfigError;
      }
      chunkscope::RunManifest manifest = chunkscope::load_manifest(opts.out_dir + "/manifest.json");
      if (int rc = cmd_ingest(opts, ingest_paths, manifest); rc != kOk) return rc;
      return save_manifest_or_fail(opts, manifest);
    }

    if (diagnose->parsed()) {
      if (diag_labels.empty()) diag_labels = diag_in + "/labels.jsonl";
      if (diag_summary.empty()) diag_summary = diag_in + "/sessions_summary.jsonl";
      GlobalOpts local = opts;
      if (local.out_dir.empty()) local.out_dir = diag_in;
      chunkscope::RunManifest manifest =
          chunkscope::load_manifest(local.out_dir + "/manifest.json");
      if (int rc = cmd_diagnose(local, diag_in, diag_labels, diag_summary, diag_truth, manifest);
          rc != kOk) {
        return rc;
      }
      return save_manifest_or_fail(local, manifest);
    }

    if (analyze->parsed()) {
      if (analyze_reports.empty()) {
        analyze_reports = (opts.out_dir.empty() ? analyze_in : opts.out_dir) + "/reports";
      }
      GlobalOpts local = opts;
      if (local.out_dir.empty()) local.out_dir = analyze_in;
      chunkscope::RunManifest manifest =
          chunkscope::load_manifest(local.out_dir + "/manifest.json");
      if (int rc = cmd_analyze(local, analyze_in, analyze_reports, manifest); rc != kOk) return rc;
      return save_manifest_or_fail(local, manifest);
    }

    if (report->parsed()) {
      return cmd_report(report_in, nullptr);
    }

    if (pipeline->parsed()) {
      chunkscope::RunManifest manifest = chunkscope::load_manifest(opts.out_dir + "/manifest.json");
      if (int rc = cmd_simulate(opts, manifest); rc != kOk) return rc;

      chunkscope::IngestPaths paths;
      paths.player = opts.out_dir + "/player.jsonl";
      paths.cdn = opts.out_dir + "/cdn.jsonl";
      paths.tcp = opts.out_dir + "/tcp.jsonl";
      paths.meta = opts.out_dir + "/sessions.jsonl";
      if (int rc = cmd_ingest(opts, paths, manifest); rc != kOk) return rc;

      if (int rc = cmd_diagnose(opts, opts.out_dir, opts.out_dir + "/labels.jsonl",
                                opts.out_dir + "/sessions_summary.jsonl",
                                opts.out_dir + "/truth.jsonl", manifest);
          rc != kOk) {
        return rc;
      }

      const std::string reports = opts.out_dir + "/reports";
      if (int rc = cmd_analyze(opts, opts.out_dir, reports, manifest); rc != kOk) return rc;
      if (int rc = cmd_report(reports, &manifest); rc != kOk) return rc;
      return save_manifest_or_fail(opts, manifest);
    }
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kOk;
}
