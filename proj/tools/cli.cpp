// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fedlabel/data/csv.hpp"
#include "fedlabel/data/dataset.hpp"
#include "fedlabel/harness/config.hpp"
#include "fedlabel/harness/experiment.hpp"
#include "fedlabel/harness/report.hpp"

namespace fedlabel::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

std::size_t default_threads() {
  if (const char* env = std::getenv("FEDLABEL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void simulate(const fs::path& config, std::optional<std::uint64_t> seed, const fs::path& out_dir,
              std::size_t threads, std::ostream& out) {
  harness::ExperimentConfig cfg = harness::load_config(config);
  if (seed) cfg.seed = *seed;
  harness::RunOptions options;
  options.out_dir = out_dir;
  options.threads = threads;
  const auto result = harness::run_experiment(cfg, options);
  const auto rows = harness::metrics_rows(result.rounds);
  harness::emit_report(rows, out_dir);
  for (const auto& r : result.rounds) {
    for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  }
  const auto summary = harness::summarize(rows);
  out << fmt::format("{} rounds, {} users -> {}\n", result.rounds.size(), cfg.users.size(),
                     out_dir.string());
  for (const auto& s : summary) {
    out << fmt::format("{:<8} local {:6.2f}  global {:6.2f}  increase {:+.2f}\n", s.name,
                       s.local_update, s.global_update, s.accuracy_increase);
  }
}

void preprocess(const fs::path& input, const fs::path& schema_path, const fs::path& out_dir,
                std::ostream& out) {
  const data::CsvSchema schema = harness::load_csv_schema(schema_path);
  const data::IngestResult ingest = data::ingest_csv(input, schema);
  const data::LabeledSet set = data::features_from_recordings(ingest.recordings);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
  const fs::path path = out_dir / "features.csv";
  std::ofstream file(path);
  if (!file) throw IoError(fmt::format("cannot write '{}'", path.string()));
  const std::size_t dim = set.size() ? set.x.cols() : data::kAxes * 50;
  file << "label";
  for (std::size_t c = 0; c < dim; ++c) file << ",f" << c;
  file << '\n';
  for (std::size_t r = 0; r < set.size(); ++r) {
    file << ingest.label_names[static_cast<std::size_t>(set.y[r])];
    for (double v : set.x.row(r)) file << fmt::format(",{:.17g}", v);
    file << '\n';
  }
  if (!file) throw IoError(fmt::format("failed writing '{}'", path.string()));
  out << fmt::format("{} windows from {} recordings ({} malformed rows skipped) -> {}\n",
                     set.size(), ingest.recordings.size(), ingest.malformed_rows,
                     path.string());
}

void report(const fs::path& metrics_dir, const fs::path& out_dir, std::ostream& out) {
  const fs::path path = fs::is_directory(metrics_dir) ? metrics_dir / "metrics.csv" : metrics_dir;
  const auto rows = harness::read_metrics_csv(path);
  harness::emit_report(rows, out_dir);
  out << fmt::format("report for {} rows -> {}\n", rows.size(), out_dir.string());
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated learning simulator with heterogeneous labels and models", "fedlabel"};
  app.require_subcommand(1);

  fs::path config, sim_out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = default_threads();
  auto* sim = app.add_subcommand("simulate", "Run a federated experiment from a config file");
  sim->add_option("--config", config, "Experiment config file")->required();
  sim->add_option("--seed", seed, "Override the config seed");
  sim->add_option("--out", sim_out, "Output directory for metrics, snapshots and charts")
      ->required();
  sim->add_option("--threads", threads,
                  "Worker threads for client work (default: FEDLABEL_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  fs::path input, schema, pre_out;
  auto* pre = app.add_subcommand("preprocess", "Turn an accelerometer CSV into feature windows");
  pre->add_option("--input", input, "Raw accelerometer CSV")->required();
  pre->add_option("--schema", schema, "Schema file with csv.* keys")->required();
  pre->add_option("--out", pre_out, "Output directory (features.csv)")->required();

  fs::path metrics, rep_out;
  auto* rep = app.add_subcommand("report", "Regenerate summary and charts from metrics.csv");
  rep->add_option("--metrics", metrics, "Run directory or metrics.csv path")->required();
  rep->add_option("--out", rep_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n"
        << app.get_formatter()->make_help(&app, app.get_name(), CLI::AppFormatMode::All);
    return kUsage;
  }

  try {
    if (sim->parsed()) {
      simulate(config, seed, sim_out, threads, out);
    } else if (pre->parsed()) {
      preprocess(input, schema, pre_out, out);
    } else {
      report(metrics, rep_out, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

}  // namespace fedlabel::cli
