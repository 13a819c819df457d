// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedlabel/data/signal.hpp"

namespace fedlabel::data {

enum class MalformedPolicy { Skip, Fail };

/// Column-name mapping for accelerometer CSV exports.
struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string x = "x";
  std::string y = "y";
  std::string z = "z";
  std::string label = "label";
  std::optional<std::string> rate_column;  // per-row sampling rate in Hz
  std::optional<double> rate;              // fixed rate when no column is given
  double timestamp_scale = 1.0;            // multiplier converting timestamps to seconds
  char delimiter = ',';
  MalformedPolicy on_malformed = MalformedPolicy::Skip;
};

struct IngestResult {
  std::vector<RawRecording> recordings;
  std::vector<std::string> label_names;  // index == LabelId, first-appearance order
  std::size_t malformed_rows = 0;
  std::size_t dropped_runs = 0;  // runs whose rate could not be determined
};

/// Reads accelerometer rows and groups them into recordings by contiguous
/// label runs. Without a rate column or fixed rate, each run's rate is
/// inferred from the median timestamp step.
IngestResult ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

}  // namespace fedlabel::data
