// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/distill/distill.hpp"

#include <cmath>

#include <fmt/format.h>

namespace fedlabel::distill {

void DistillConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidInputError(fmt::format("distill temperature must be positive, got {}",
                                        temperature));
  }
  if (student.hidden.empty()) throw InvalidInputError("student architecture has no layers");
}

std::size_t Restriction::kept() const noexcept {
  std::size_t n = 0;
  for (bool k : keep) n += k ? 1 : 0;
  return n;
}

Restriction restrict_and_normalize(const nn::Matrix& global, const LabelSet& labels) {
  labels.check_within(global.cols());
  Restriction out;
  out.keep.assign(global.rows(), false);
  std::vector<double> kept_values;
  std::size_t kept_rows = 0;
  for (std::size_t r = 0; r < global.rows(); ++r) {
    double sum = 0.0;
    for (LabelId l : labels) sum += global(r, static_cast<std::size_t>(l));
    if (!(sum > kMaskThreshold)) continue;
    out.keep[r] = true;
    ++kept_rows;
    for (LabelId l : labels) kept_values.push_back(global(r, static_cast<std::size_t>(l)) / sum);
  }
  out.targets.probs = nn::Matrix(kept_rows, labels.size(), std::move(kept_values));
  out.targets.labels = labels;
  return out;
}

SoftTargets soften(const SoftTargets& targets, double temperature) {
  if (!(temperature > 0.0)) throw InvalidInputError("temperature must be positive");
  SoftTargets out = targets;
  if (temperature == 1.0) return out;
  const double power = 1.0 / temperature;
  for (std::size_t r = 0; r < out.probs.rows(); ++r) {
    auto row = out.probs.row(r);
    // Work in log space relative to the row maximum so large powers stay finite.
    double peak = -std::numeric_limits<double>::infinity();
    for (double p : row) {
      if (p > 0.0) peak = std::max(peak, std::log(p));
    }
    double sum = 0.0;
    for (double& p : row) {
      p = p > 0.0 ? std::exp(power * (std::log(p) - peak)) : 0.0;
      sum += p;
    }
    for (double& p : row) p /= sum;
  }
  return out;
}

nn::Matrix one_hot(std::span<const LabelId> labels, const LabelSet& columns) {
  nn::Matrix out(labels.size(), columns.size());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto c = columns.index_of(labels[r]);
    if (c < 0) {
      throw InvalidInputError(
          fmt::format("row {} has label {} outside the model's label set", r, labels[r]));
    }
    out(r, static_cast<std::size_t>(c)) = 1.0;
  }
  return out;
}

std::optional<nn::TrainResult> distill_student(const nn::Matrix& public_x,
                                               const Restriction& restriction,
                                               const DistillConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (restriction.keep.size() != public_x.rows()) {
    throw DimensionError(fmt::format("mask covers {} rows, public set has {}",
                                     restriction.keep.size(), public_x.rows()));
  }
  if (restriction.cold()) return std::nullopt;

  std::vector<std::size_t> rows;
  rows.reserve(restriction.kept());
  for (std::size_t r = 0; r < restriction.keep.size(); ++r) {
    if (restriction.keep[r]) rows.push_back(r);
  }
  const nn::Matrix x = public_x.select_rows(rows);
  const SoftTargets targets = soften(restriction.targets, cfg.temperature);

  const auto& labels = restriction.targets.labels;
  nn::Network student(nn::make_classifier(cfg.student, labels, public_x.cols(), data::kAxes),
                      derive_seed(seed, 0x696e6974));
  return nn::train(std::move(student), x, targets.probs,
                   cfg.train.with_seed(derive_seed(seed, 0x74726e)));
}

nn::TrainResult local_update(nn::Network model, const data::PrivateShard& shard,
                             const nn::TrainConfig& cfg) {
  if (shard.size() == 0) throw InvalidInputError("local update on an empty shard");
  if (!shard.label_set.is_subset_of(model.spec().output_labels)) {
    throw InvalidInputError(
        fmt::format("shard labels of user {} are not covered by the model output", shard.owner));
  }
  const nn::Matrix targets = one_hot(shard.labels, model.spec().output_labels);
  return nn::train(std::move(model), shard.features, targets, cfg);
}

}  // namespace fedlabel::distill
