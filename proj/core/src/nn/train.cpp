// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace fedlabel::nn {

TrainConfig::TrainConfig(std::size_t max_epochs, std::size_t batch_size, double learning_rate,
                         std::size_t patience, double validation_fraction, std::uint64_t seed)
    : max_epochs_(max_epochs),
      batch_size_(batch_size),
      learning_rate_(learning_rate),
      patience_(patience),
      validation_fraction_(validation_fraction),
      seed_(seed) {
  if (max_epochs_ < 1) throw InvalidInputError("train: max_epochs must be at least 1");
  if (batch_size_ < 1) throw InvalidInputError("train: batch_size must be at least 1");
  if (!(learning_rate_ > 0.0) || !std::isfinite(learning_rate_)) {
    throw InvalidInputError("train: learning_rate must be positive");
  }
  if (patience_ < 1) throw InvalidInputError("train: patience must be at least 1");
  if (!(validation_fraction_ > 0.0 && validation_fraction_ < 1.0)) {
    throw InvalidInputError("train: validation_fraction must lie in (0, 1)");
  }
}

TrainConfig TrainConfig::with_seed(std::uint64_t seed) const {
  TrainConfig copy = *this;
  copy.seed_ = seed;
  return copy;
}

std::size_t argmax(std::span<const double> row) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

TrainResult train(Network net, const Matrix& features, const Matrix& targets,
                  const TrainConfig& cfg) {
  const std::size_t n = features.rows();
  if (n == 0) throw InvalidInputError("train: empty dataset");
  if (n < 2) throw InvalidInputError("train: need at least 2 samples for a validation split");
  if (targets.rows() != n) {
    throw DimensionError(
        fmt::format("train: {} feature rows but {} target rows", n, targets.rows()));
  }
  if (targets.cols() != net.output_dim()) {
    throw DimensionError(fmt::format("train: targets have {} columns, network outputs {}",
                                     targets.cols(), net.output_dim()));
  }
  for (std::size_t r = 0; r < n; ++r) {
    auto t = targets.row(r);
    const double sum = std::accumulate(t.begin(), t.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-6) {
      throw InvalidInputError(
          fmt::format("train: target row {} sums to {}, expected a probability vector", r, sum));
    }
  }

  std::mt19937_64 rng(cfg.seed());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  auto n_val = static_cast<std::size_t>(
      std::llround(cfg.validation_fraction() * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train_idx(order.begin() + n_val, order.end());

  const Matrix val_x = features.select_rows(val_idx);
  const Matrix val_t = targets.select_rows(val_idx);
  auto val_loss = [&](const Network& candidate) {
    return loss_crossentropy(forward(candidate, val_x), val_t);
  };

  TrainResult result{net, 0.0, val_loss(net), 0};
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs(); ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size()) {
      const std::size_t stop = std::min(start + cfg.batch_size(), train_idx.size());
      std::span<const std::size_t> batch(train_idx.data() + start, stop - start);
      const Matrix bx = features.select_rows(batch);
      const Matrix bt = targets.select_rows(batch);
      adam_step(net, backward(net, bx, bt), cfg.learning_rate());
    }
    result.epochs_run = epoch + 1;

    const double loss = val_loss(net);
    if (!std::isfinite(loss)) {
      throw Error(fmt::format("train: validation loss became non-finite at epoch {}", epoch + 1));
    }
    if (loss < best_loss) {
      best_loss = loss;
      result.network = net;
      stale = 0;
    } else if (++stale >= cfg.patience()) {
      break;
    }
  }
  result.validation_loss = best_loss;
  return result;
}

}  // namespace fedlabel::nn
