// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedlabel/data/dataset.hpp"
#include "fedlabel/distill/distill.hpp"
#include "fedlabel/federation/protocol.hpp"

namespace fedlabel::federation {

/// Supplies private shards; implementations must be deterministic in
/// (user, iteration).
class ShardSource {
 public:
  virtual ~ShardSource() = default;
  [[nodiscard]] virtual data::PrivateShard shard(UserId user, const LabelSet& labels,
                                                 std::size_t iteration) const = 0;
};

struct UserState {
  UserId id = 0;
  LabelSet labels;
  nn::Architecture architecture;  // the user's own model for the build path
  bool rebuild = false;  // set by an architecture swap: distill into `architecture` this round
};

struct RoundConfig {
  distill::DistillConfig distill;
  nn::TrainConfig train;
  BetaGranularity beta_granularity = BetaGranularity::UserLabel;
  bool restrict_accuracy = true;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t input_channels = data::kAxes;
};

struct FederationState {
  std::vector<UserState> users;  // ascending user id
  GlobalScoreTable global;
  std::size_t num_labels = 0;
};

enum class ClientPath { Build, Distill };

struct PhaseTimings {
  double build = 0.0;
  double distill = 0.0;
  double local_update = 0.0;
  double predict = 0.0;
  double aggregate = 0.0;
};

/// Everything a client produces in one round. Only `message` leaves the
/// device; the rest is local bookkeeping for metrics.
struct ClientOutcome {
  ScoreMessage message;
  double local_accuracy = 0.0;
  ClientPath path = ClientPath::Build;
  PhaseTimings timings;
};

/// One user's round: distill a student from the restricted global table and
/// fine-tune it on the shard. After an architecture swap the student is a
/// fresh network of the new architecture. When the table is uninformative
/// (cold start) the user's own architecture is trained on the shard instead.
/// Then score the public inputs and report accuracies.
ClientOutcome run_client(const UserState& user, const GlobalScoreTable& global,
                         const data::PublicDataset& pub, const data::PrivateShard& shard,
                         const RoundConfig& cfg, std::size_t iteration);

/// Collects score messages and performs the label-wise global update.
class Server {
 public:
  Server(OverlapMap overlap, std::size_t public_rows);

  /// Messages are the only accepted input.
  void submit(const ScoreMessage& message);
  [[nodiscard]] std::size_t pending() const noexcept { return inbox_.size(); }

  /// Aggregates all pending submissions (order-independent) and clears them.
  GlobalUpdate aggregate(std::size_t iteration);

  [[nodiscard]] const OverlapMap& overlap() const noexcept { return overlap_; }
  [[nodiscard]] const BetaWeights& last_beta() const noexcept { return last_beta_; }

 private:
  OverlapMap overlap_;
  std::size_t public_rows_;
  std::map<UserId, ClientScoreMatrix> inbox_;
  std::map<UserLabel, double> accuracy_;
  BetaWeights last_beta_;
};

struct UserRoundMetrics {
  UserId user = 0;
  double local_accuracy = 0.0;
  double global_accuracy = 0.0;  // global table restricted to the user's labels
  ClientPath path = ClientPath::Build;
};

struct RoundMetrics {
  std::size_t iteration = 0;
  std::vector<UserRoundMetrics> users;
  double global_average = 0.0;         // mean of per-user global accuracies
  double global_table_accuracy = 0.0;  // argmax over the whole universe
  PhaseTimings timings;
  std::vector<std::string> warnings;
  std::vector<ScoreMessage> messages;  // audit copy, ascending user id
  BetaWeights beta;
};

/// Runs every client (in parallel up to cfg.threads), aggregates at the
/// server barrier and replaces state.global. Clears pending rebuild flags.
RoundMetrics run_round(FederationState& state, std::size_t iteration,
                       const data::PublicDataset& pub, const ShardSource& shards,
                       const RoundConfig& cfg);

}  // namespace fedlabel::federation
