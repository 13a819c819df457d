// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedlabel/common.hpp"
#include "fedlabel/data/signal.hpp"
#include "fedlabel/nn/matrix.hpp"

namespace fedlabel::data {

/// Feature rows with one label per row.
struct LabeledSet {
  nn::Matrix x;
  std::vector<LabelId> y;

  [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
  [[nodiscard]] LabeledSet subset(std::span<const std::size_t> rows) const;
};

/// Stacks feature windows (all of equal length) into a LabeledSet.
LabeledSet stack(std::span<const FeatureWindow> windows);

/// Windows every recording and converts each window to features.
LabeledSet features_from_recordings(std::span<const RawRecording> recordings,
                                    double seconds = kWindowSeconds);

/// Public inputs and ground truth shared by all parties.
struct PublicDataset {
  nn::Matrix x0;
  std::vector<LabelId> y0;
  std::vector<std::vector<std::size_t>> by_label;  // label id -> row indices

  /// Throws InvalidInputError unless every label in [0, num_labels) has a row.
  PublicDataset(LabeledSet set, std::size_t num_labels);

  [[nodiscard]] std::size_t size() const noexcept { return y0.size(); }
  [[nodiscard]] std::size_t num_labels() const noexcept { return by_label.size(); }
};

/// One user's private data for one iteration.
struct PrivateShard {
  UserId owner = 0;
  std::size_t iteration = 0;
  nn::Matrix features;
  std::vector<LabelId> labels;
  LabelSet label_set;
  std::vector<std::size_t> source_rows;  // rows of the partitioned dataset, if finite

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
};

struct SyntheticParams {
  std::size_t dim = 150;
  double separation = 6.0;  // distance between any two cluster means, in sigma
  double anisotropy = 0.5;  // per-dimension sigma drawn from [1 - a, 1 + a]
  double drift = 0.3;       // sigma of each mean's per-shard offset, per informative direction
  // Optional label families: group[l] is label l's family. Means within a
  // family are `separation` apart, across families `group_separation` apart.
  // Empty means every label is its own family (all means equidistant).
  std::vector<std::size_t> group;
  double group_separation = 0.0;
};

/// Anisotropic Gaussian clusters, one per label, with means placed by
/// family (see SyntheticParams). The cluster geometry is fixed by the construction seed; each call to
/// sample() draws rows from a stream seed, optionally displacing every
/// label's mean by a seeded random offset.
class SyntheticGenerator {
 public:
  SyntheticGenerator(std::size_t num_labels, SyntheticParams params, std::uint64_t seed);

  [[nodiscard]] const SyntheticParams& params() const noexcept { return params_; }
  [[nodiscard]] std::size_t num_labels() const noexcept { return means_.size(); }
  [[nodiscard]] std::span<const double> mean(LabelId label) const { return means_.at(label); }

  /// `per_label` rows for each label of `labels`, label-major in set order.
  /// Each label's mean is displaced by a seeded offset inside the span of
  /// the cluster means, N(0, drift^2) along every basis direction of that
  /// span; drift 0 reproduces the reference clusters.
  [[nodiscard]] LabeledSet sample(const LabelSet& labels, std::size_t per_label,
                                  std::uint64_t stream_seed, double drift) const;

 private:
  SyntheticParams params_;
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> sigmas_;
  std::vector<std::vector<double>> basis_;  // orthonormal, spans the means
};

/// Convenience form: all `num_labels` labels, drifted by `drift_iteration`
/// (0 means the reference distribution).
LabeledSet synth_generate(std::size_t num_labels, std::size_t per_label, std::size_t dim,
                          std::uint64_t seed, std::size_t drift_iteration,
                          const SyntheticParams& params = {});

/// Shard grid indexed [user][iteration - 1].
using ShardGrid = std::vector<std::vector<PrivateShard>>;

/// Disjoint draws: shard (m, i) receives exactly `per_label` rows of every
/// label in users[m]. Throws CapacityError naming the first starved label.
ShardGrid partition_noniid(const LabeledSet& dataset, std::span<const LabelSet> users,
                           std::size_t iterations, std::size_t per_label, std::uint64_t seed);

}  // namespace fedlabel::data
