// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fedlabel/common.hpp"
#include "fedlabel/nn/matrix.hpp"

namespace fedlabel::nn {

enum class LayerKind { Dense, Conv1D };
enum class Activation { None, ReLU, Softmax };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t units = 1;  // units for Dense, filters for Conv1D
  Activation activation = Activation::ReLU;
  std::size_t kernel_width = 1;  // Conv1D only

  static LayerSpec dense(std::size_t units, Activation act = Activation::ReLU) {
    return {LayerKind::Dense, units, act, 1};
  }
  static LayerSpec conv1d(std::size_t filters, std::size_t kernel_width,
                          Activation act = Activation::ReLU) {
    return {LayerKind::Conv1D, filters, act, kernel_width};
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Declarative layer stack. Inputs are flat vectors of `input_dim` values laid
/// out channel-major (`input_channels` sequences of input_dim / input_channels
/// samples each); Conv1D layers must form a prefix of the stack and their
/// output is flattened before the first Dense layer.
struct ModelSpec {
  std::vector<LayerSpec> layers;
  LabelSet output_labels;
  std::size_t input_dim = 0;
  std::size_t input_channels = 1;

  /// Throws InvalidInputError naming the offending layer.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Hidden layers only; the classification head is appended per label set.
struct Architecture {
  std::vector<LayerSpec> hidden;

  static Architecture ann(std::initializer_list<std::size_t> units);
  static Architecture cnn(std::initializer_list<std::size_t> filters, std::size_t kernel_width = 3);

  /// Short human-readable form, e.g. "cnn(16,32)" or "ann(8,16)".
  [[nodiscard]] std::string describe() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Hidden layers of `arch` followed by a Dense softmax head over `labels`.
ModelSpec make_classifier(const Architecture& arch, const LabelSet& labels, std::size_t input_dim,
                          std::size_t input_channels);

/// Per-layer shape after validation.
struct LayerShape {
  std::size_t in_channels = 0;
  std::size_t in_length = 0;
  std::size_t out_channels = 0;
  std::size_t out_length = 0;
  [[nodiscard]] std::size_t in_size() const noexcept { return in_channels * in_length; }
  [[nodiscard]] std::size_t out_size() const noexcept { return out_channels * out_length; }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

std::vector<LayerShape> layer_shapes(const ModelSpec& spec);

/// Weights and bias of one layer. Dense weights are (units x inputs);
/// Conv1D weights are (filters x in_channels x kernel_width), row-major.
struct LayerParams {
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

using ParamSet = std::vector<LayerParams>;

struct AdamState {
  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Network {
 public:
  /// He-uniform init for ReLU layers, Glorot-uniform otherwise; zero biases.
  Network(ModelSpec spec, std::uint64_t seed);

  [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::vector<LayerShape>& shapes() const noexcept { return shapes_; }
  [[nodiscard]] ParamSet& params() noexcept { return params_; }
  [[nodiscard]] const ParamSet& params() const noexcept { return params_; }
  [[nodiscard]] AdamState& adam() noexcept { return adam_; }
  [[nodiscard]] const AdamState& adam() const noexcept { return adam_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept;
  [[nodiscard]] std::size_t output_dim() const noexcept { return spec_.output_labels.size(); }

  friend bool operator==(const Network&, const Network&) = default;

 private:
  ModelSpec spec_;
  std::vector<LayerShape> shapes_;
  ParamSet params_;
  AdamState adam_;
};

/// Zero-valued parameter set with the shapes of `net`.
ParamSet zeros_like(const Network& net);

/// Scores, one row per sample and one column per output label.
Matrix forward(const Network& net, const Matrix& batch);

/// Mean over rows of -sum_l t[l] * log(max(s[l], 1e-12)).
double loss_crossentropy(const Matrix& scores, const Matrix& targets);

inline constexpr double kLogClip = 1e-12;

/// Analytic gradients of loss_crossentropy(forward(net, batch), targets).
ParamSet backward(const Network& net, const Matrix& batch, const Matrix& targets);

/// One Adam update with bias correction; increments the step counter.
void adam_step(Network& net, const ParamSet& grads, double learning_rate,
               const AdamParams& hp = {});

}  // namespace fedlabel::nn
