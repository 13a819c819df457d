// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "fedlabel/federation/round.hpp"
#include "fedlabel/harness/config.hpp"

namespace fedlabel::harness {

/// A failure inside a round, tagged with the round index.
class RoundError : public Error {
 public:
  RoundError(std::size_t iteration, const std::string& what);
  [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Public set plus a shard source, both derived from the configured data source.
struct DataBundle {
  data::PublicDataset public_set;
  std::unique_ptr<federation::ShardSource> shards;
};

/// Synthetic: the public set is drawn from the reference clusters; every
/// (user, iteration) shard is a fresh drifted draw. CSV: a seeded per-label
/// public draw, the remainder partitioned into disjoint shards.
DataBundle prepare_data(const ExperimentConfig& cfg);

/// Installs the architecture scheduled for `iteration` and marks the user for
/// a rebuild (fresh network and optimizer state, distilled from the global
/// table). Without a change the state is returned unchanged.
federation::UserState apply_model_schedule(federation::UserState user,
                                           const ModelSchedule& schedule, std::size_t iteration);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // per-round persistence when set
  std::size_t threads = 1;
};

struct ExperimentResult {
  std::vector<federation::RoundMetrics> rounds;
  federation::GlobalScoreTable final_table;
};

/// Runs all configured rounds. With an output directory, each round appends
/// to metrics.csv, beta.csv and timings.csv and writes
/// snapshots/round_NNN.bin (and messages/round_NNN.jsonl when auditing).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Snapshot file: "FLGT", u32 version, u64 iteration, u64 rows, u64 cols,
/// then rows*cols little-endian f64 values, row-major.
void write_snapshot(const federation::GlobalScoreTable& table, const std::filesystem::path& path);
federation::GlobalScoreTable read_snapshot(const std::filesystem::path& path);

}  // namespace fedlabel::harness
