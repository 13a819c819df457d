// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace fedlabel::data {

LabeledSet LabeledSet::subset(std::span<const std::size_t> rows) const {
  LabeledSet out;
  out.x = x.select_rows(rows);
  out.y.reserve(rows.size());
  for (std::size_t r : rows) out.y.push_back(y.at(r));
  return out;
}

LabeledSet stack(std::span<const FeatureWindow> windows) {
  LabeledSet out;
  if (windows.empty()) return out;
  const std::size_t dim = windows.front().features.size();
  out.x = nn::Matrix(windows.size(), dim);
  out.y.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].features.size() != dim) {
      throw DimensionError(fmt::format("feature window {} has length {}, expected {}", i,
                                       windows[i].features.size(), dim));
    }
    std::copy(windows[i].features.begin(), windows[i].features.end(), out.x.row(i).begin());
    out.y.push_back(windows[i].label);
  }
  return out;
}

LabeledSet features_from_recordings(std::span<const RawRecording> recordings, double seconds) {
  std::vector<FeatureWindow> windows;
  for (const RawRecording& rec : recordings) {
    for (const Segment& seg : window(rec, seconds)) {
      windows.push_back(make_feature_window(seg, rec.rate, rec.label));
    }
  }
  return stack(windows);
}

PublicDataset::PublicDataset(LabeledSet set, std::size_t num_labels)
    : x0(std::move(set.x)), y0(std::move(set.y)), by_label(num_labels) {
  if (x0.rows() != y0.size()) {
    throw DimensionError(
        fmt::format("public set has {} rows but {} labels", x0.rows(), y0.size()));
  }
  for (std::size_t r = 0; r < y0.size(); ++r) {
    const LabelId l = y0[r];
    if (l < 0 || static_cast<std::size_t>(l) >= num_labels) {
      throw InvalidInputError(fmt::format("public row {} has label {} outside universe", r, l));
    }
    by_label[static_cast<std::size_t>(l)].push_back(r);
  }
  for (std::size_t l = 0; l < num_labels; ++l) {
    if (by_label[l].empty()) {
      throw InvalidInputError(fmt::format("public dataset has no rows for label {}", l));
    }
  }
}

SyntheticGenerator::SyntheticGenerator(std::size_t num_labels, SyntheticParams params,
                                       std::uint64_t seed)
    : params_(params) {
  if (params_.dim < 2) throw InvalidInputError("synthetic dimension must be at least 2");
  if (num_labels == 0 || num_labels > params_.dim) {
    throw InvalidInputError(fmt::format("synthetic generator supports 1..{} labels, got {}",
                                        params_.dim, num_labels));
  }
  if (!(params_.anisotropy >= 0.0 && params_.anisotropy < 1.0)) {
    throw InvalidInputError("synthetic anisotropy must lie in [0, 1)");
  }
  std::mt19937_64 rng(derive_seed(seed, 0x6e6f6d));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> spread(1.0 - params_.anisotropy,
                                                1.0 + params_.anisotropy);

  if (!params_.group.empty() && params_.group.size() != num_labels) {
    throw InvalidInputError(fmt::format("synthetic groups name {} labels, expected {}",
                                        params_.group.size(), num_labels));
  }
  std::size_t num_groups = 0;
  for (std::size_t g : params_.group) num_groups = std::max(num_groups, g + 1);
  const double within = params_.separation / std::sqrt(2.0);
  const double across = params_.group_separation;
  if (num_groups > 0 && !(across >= params_.separation)) {
    throw InvalidInputError("group separation must be at least the within-group separation");
  }
  if (num_labels + num_groups > params_.dim) {
    throw InvalidInputError("synthetic dimension too small for the requested label families");
  }

  // Orthonormal directions (Gram-Schmidt): one per label, then one per family.
  std::vector<std::vector<double>>& basis = basis_;
  for (std::size_t k = 0; k < num_labels + num_groups; ++k) {
    std::vector<double> v(params_.dim);
    for (double& c : v) c = normal(rng);
    for (const auto& prev : basis) {
      double dot = 0.0;
      for (std::size_t d = 0; d < v.size(); ++d) dot += v[d] * prev[d];
      for (std::size_t d = 0; d < v.size(); ++d) v[d] -= dot * prev[d];
    }
    double norm = 0.0;
    for (double c : v) norm += c * c;
    norm = std::sqrt(norm);
    for (double& c : v) c /= norm;
    basis.push_back(std::move(v));
  }
  const double family =
      num_groups > 0 ? std::sqrt((across * across - params_.separation * params_.separation) / 2.0)
                     : 0.0;
  for (std::size_t l = 0; l < num_labels; ++l) {
    std::vector<double> m(params_.dim);
    for (std::size_t d = 0; d < m.size(); ++d) m[d] = within * basis[l][d];
    if (num_groups > 0) {
      const auto& u = basis[num_labels + params_.group[l]];
      for (std::size_t d = 0; d < m.size(); ++d) m[d] += family * u[d];
    }
    means_.push_back(std::move(m));
  }
  for (std::size_t l = 0; l < num_labels; ++l) {
    std::vector<double> s(params_.dim);
    for (double& c : s) c = spread(rng);
    sigmas_.push_back(std::move(s));
  }
}

LabeledSet SyntheticGenerator::sample(const LabelSet& labels, std::size_t per_label,
                                      std::uint64_t stream_seed, double drift) const {
  if (per_label == 0) throw InvalidInputError("per-label count must be at least 1");
  labels.check_within(num_labels());
  const std::size_t dim = params_.dim;
  LabeledSet out;
  out.x = nn::Matrix(labels.size() * per_label, dim);
  out.y.reserve(labels.size() * per_label);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t row = 0;
  for (LabelId label : labels) {
    const auto l = static_cast<std::size_t>(label);
    std::mt19937_64 rng(derive_seed(stream_seed, l));
    std::vector<double> center = means_[l];
    if (drift != 0.0) {
      for (const auto& e : basis_) {
        const double z = drift * normal(rng);
        for (std::size_t d = 0; d < dim; ++d) center[d] += z * e[d];
      }
    }
    for (std::size_t i = 0; i < per_label; ++i, ++row) {
      auto dst = out.x.row(row);
      for (std::size_t d = 0; d < dim; ++d) dst[d] = center[d] + sigmas_[l][d] * normal(rng);
      out.y.push_back(label);
    }
  }
  return out;
}

LabeledSet synth_generate(std::size_t num_labels, std::size_t per_label, std::size_t dim,
                          std::uint64_t seed, std::size_t drift_iteration,
                          const SyntheticParams& params) {
  SyntheticParams p = params;
  p.dim = dim;
  const SyntheticGenerator gen(num_labels, p, seed);
  std::vector<LabelId> all(num_labels);
  std::iota(all.begin(), all.end(), LabelId{0});
  const double drift = drift_iteration == 0 ? 0.0 : p.drift;
  return gen.sample(LabelSet(all), per_label, derive_seed(seed, 0x73796e, drift_iteration),
                    drift);
}

ShardGrid partition_noniid(const LabeledSet& dataset, std::span<const LabelSet> users,
                           std::size_t iterations, std::size_t per_label, std::uint64_t seed) {
  if (per_label == 0) throw InvalidInputError("per-label count must be at least 1");
  LabelId max_label = -1;
  for (LabelId l : dataset.y) max_label = std::max(max_label, l);
  for (const LabelSet& u : users) {
    for (LabelId l : u) max_label = std::max(max_label, l);
  }
  const auto num_labels = static_cast<std::size_t>(max_label + 1);

  std::vector<std::vector<std::size_t>> pool(num_labels);
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    pool[static_cast<std::size_t>(dataset.y[r])].push_back(r);
  }
  std::vector<std::size_t> owners(num_labels, 0);
  for (const LabelSet& u : users) {
    for (LabelId l : u) ++owners[static_cast<std::size_t>(l)];
  }
  for (std::size_t l = 0; l < num_labels; ++l) {
    const std::size_t need = owners[l] * iterations * per_label;
    if (need > pool[l].size()) {
      throw CapacityError(fmt::format("label {} is starved: shards need {} rows, dataset has {}",
                                      l, need, pool[l].size()));
    }
    std::mt19937_64 rng(derive_seed(seed, 0x70617274, l));
    std::shuffle(pool[l].begin(), pool[l].end(), rng);
  }

  std::vector<std::size_t> cursor(num_labels, 0);
  ShardGrid grid(users.size());
  for (std::size_t i = 1; i <= iterations; ++i) {
    for (std::size_t m = 0; m < users.size(); ++m) {
      std::vector<std::size_t> rows;
      for (LabelId l : users[m]) {
        auto& c = cursor[static_cast<std::size_t>(l)];
        const auto& p = pool[static_cast<std::size_t>(l)];
        rows.insert(rows.end(), p.begin() + static_cast<std::ptrdiff_t>(c),
                    p.begin() + static_cast<std::ptrdiff_t>(c + per_label));
        c += per_label;
      }
      LabeledSet part = dataset.subset(rows);
      PrivateShard shard;
      shard.owner = static_cast<UserId>(m + 1);
      shard.iteration = i;
      shard.features = std::move(part.x);
      shard.labels = std::move(part.y);
      shard.label_set = users[m];
      shard.source_rows = std::move(rows);
      grid[m].push_back(std::move(shard));
    }
  }
  return grid;
}

}  // namespace fedlabel::data
