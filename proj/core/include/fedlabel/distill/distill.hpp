// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fedlabel/common.hpp"
#include "fedlabel/data/dataset.hpp"
#include "fedlabel/nn/network.hpp"
#include "fedlabel/nn/train.hpp"

namespace fedlabel::distill {

/// Rows whose restricted global mass is at or below this are uninformative.
inline constexpr double kMaskThreshold = 1e-9;

struct DistillConfig {
  double temperature = 1.0;
  nn::Architecture student = nn::Architecture::ann({8, 16});
  nn::TrainConfig train;

  /// Throws InvalidInputError for temperature <= 0 or an empty student.
  void validate() const;
};

/// Probability rows over a user's labels for the selected public samples.
struct SoftTargets {
  nn::Matrix probs;  // one row per kept public row, one column per label
  LabelSet labels;
};

struct Restriction {
  SoftTargets targets;
  std::vector<bool> keep;  // per public row; false = masked out
  [[nodiscard]] std::size_t kept() const noexcept;
  /// True when too few rows survive to distill from (cold start).
  [[nodiscard]] bool cold() const noexcept { return kept() < 2; }
};

/// Columns of `global` (rows = public samples, cols = label universe) for
/// `labels`, renormalized per row. Rows whose restricted sum is <= 1e-9 are
/// masked out.
Restriction restrict_and_normalize(const nn::Matrix& global, const LabelSet& labels);

/// Row-wise p^(1/T), renormalized. T = 1 is the identity.
SoftTargets soften(const SoftTargets& targets, double temperature);

/// Trains a fresh student on the kept public rows against softened targets.
/// Returns nullopt (cold start) when fewer than two rows are kept.
std::optional<nn::TrainResult> distill_student(const nn::Matrix& public_x,
                                               const Restriction& restriction,
                                               const DistillConfig& cfg, std::uint64_t seed);

/// Continues training `model` (Adam state included) on the private shard,
/// with one-hot targets over the model's output labels.
nn::TrainResult local_update(nn::Network model, const data::PrivateShard& shard,
                             const nn::TrainConfig& cfg);

/// One-hot rows of `labels` against the model label order.
nn::Matrix one_hot(std::span<const LabelId> labels, const LabelSet& columns);

}  // namespace fedlabel::distill
