// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

#include "fedlabel/nn/matrix.hpp"
#include "fedlabel/nn/network.hpp"

namespace fedlabel::nn {

/// Mini-batch Adam settings with early stopping. Invalid values are rejected
/// by the constructor.
class TrainConfig {
 public:
  explicit TrainConfig(std::size_t max_epochs = 5, std::size_t batch_size = 32,
                       double learning_rate = 1e-3, std::size_t patience = 1,
                       double validation_fraction = 0.1, std::uint64_t seed = 0);

  [[nodiscard]] std::size_t max_epochs() const noexcept { return max_epochs_; }
  [[nodiscard]] std::size_t batch_size() const noexcept { return batch_size_; }
  [[nodiscard]] double learning_rate() const noexcept { return learning_rate_; }
  [[nodiscard]] std::size_t patience() const noexcept { return patience_; }
  [[nodiscard]] double validation_fraction() const noexcept { return validation_fraction_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  [[nodiscard]] TrainConfig with_seed(std::uint64_t seed) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;

 private:
  std::size_t max_epochs_;
  std::size_t batch_size_;
  double learning_rate_;
  std::size_t patience_;
  double validation_fraction_;
  std::uint64_t seed_;
};

struct TrainResult {
  Network network;
  double validation_loss = 0.0;  // loss of the restored best epoch
  double initial_validation_loss = 0.0;
  std::size_t epochs_run = 0;
};

/// Trains `net` on (features, targets). A seeded permutation holds out
/// validation_fraction of the rows; every epoch reshuffles the rest into
/// mini-batches. Training stops once validation loss has failed to improve for
/// `patience` consecutive epochs, and the best epoch's network is returned.
TrainResult train(Network net, const Matrix& features, const Matrix& targets,
                  const TrainConfig& cfg);

/// Row-wise argmax with ties resolved to the lowest column.
std::size_t argmax(std::span<const double> row) noexcept;

}  // namespace fedlabel::nn
