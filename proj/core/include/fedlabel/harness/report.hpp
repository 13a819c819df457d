// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fedlabel/federation/round.hpp"

namespace fedlabel::harness {

/// One line of metrics.csv.
struct MetricsRow {
  std::size_t iteration = 0;
  UserId user = 0;
  double local_acc = 0.0;
  double global_acc = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct SummaryRow {
  std::string name;  // User_<id> or Average
  double local_update = 0.0;   // percent
  double global_update = 0.0;  // percent
  double accuracy_increase = 0.0;
};

std::vector<MetricsRow> metrics_rows(std::span<const federation::RoundMetrics> rounds);

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// Per-user means over all iterations (ascending id), then the average row.
std::vector<SummaryRow> summarize(std::span<const MetricsRow> rows);

/// Line chart of one or more series over iterations, as standalone SVG.
struct Series {
  std::string name;
  std::vector<double> values;  // accuracy in [0, 1], index 0 = iteration 1
};
std::string render_chart(const std::string& title, std::span<const Series> series);

/// Writes metrics.csv, summary.csv, user_<id>.svg and global_average.svg.
/// Throws IoError if the directory cannot be written.
void emit_report(std::span<const MetricsRow> rows, const std::filesystem::path& out_dir);

}  // namespace fedlabel::harness
