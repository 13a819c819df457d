// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

namespace fedlabel::nn {

namespace {

std::size_t weight_count(const LayerSpec& layer, const LayerShape& shape) {
  if (layer.kind == LayerKind::Dense) return layer.units * shape.in_size();
  return layer.units * shape.in_channels * layer.kernel_width;
}

void apply_activation(Activation act, Matrix& m) {
  switch (act) {
    case Activation::None:
      return;
    case Activation::ReLU:
      for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::Softmax:
      for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        const double peak = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
          v = std::exp(v - peak);
          sum += v;
        }
        for (double& v : row) v /= sum;
      }
      return;
  }
}

// Turns dL/d(output) into dL/d(pre-activation) in place.
void activation_backward(Activation act, const Matrix& output, Matrix& grad) {
  switch (act) {
    case Activation::None:
      return;
    case Activation::ReLU: {
      auto out = output.values();
      auto g = grad.values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (out[i] <= 0.0) g[i] = 0.0;
      }
      return;
    }
    case Activation::Softmax:
      for (std::size_t r = 0; r < grad.rows(); ++r) {
        auto p = output.row(r);
        auto g = grad.row(r);
        double dot = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) dot += g[j] * p[j];
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = p[j] * (g[j] - dot);
      }
      return;
  }
}

void dense_forward(const LayerParams& p, const LayerShape& s, const Matrix& in, Matrix& out) {
  const std::size_t n_in = s.in_size();
  const std::size_t n_out = s.out_size();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const double* x = in.row(r).data();
    double* y = out.row(r).data();
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* w = p.weights.data() + o * n_in;
      double acc = p.bias[o];
      for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
      y[o] = acc;
    }
  }
}

void conv_forward(const LayerParams& p, const LayerShape& s, std::size_t k, const Matrix& in,
                  Matrix& out) {
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const double* x = in.row(r).data();
    double* y = out.row(r).data();
    for (std::size_t f = 0; f < s.out_channels; ++f) {
      double* yf = y + f * s.out_length;
      std::fill(yf, yf + s.out_length, p.bias[f]);
      for (std::size_t c = 0; c < s.in_channels; ++c) {
        const double* xc = x + c * s.in_length;
        const double* w = p.weights.data() + (f * s.in_channels + c) * k;
        for (std::size_t j = 0; j < k; ++j) {
          const double wj = w[j];
          const double* xs = xc + j;
          for (std::size_t t = 0; t < s.out_length; ++t) yf[t] += wj * xs[t];
        }
      }
    }
  }
}

void dense_backward(const LayerParams& p, const LayerShape& s, const Matrix& in,
                    const Matrix& dz, LayerParams& grad, Matrix* din) {
  const std::size_t n_in = s.in_size();
  const std::size_t n_out = s.out_size();
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const double* x = in.row(r).data();
    const double* d = dz.row(r).data();
    double* dx = din ? din->row(r).data() : nullptr;
    for (std::size_t o = 0; o < n_out; ++o) {
      const double g = d[o];
      if (g == 0.0) continue;
      grad.bias[o] += g;
      double* gw = grad.weights.data() + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) gw[i] += g * x[i];
      if (dx) {
        const double* w = p.weights.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) dx[i] += g * w[i];
      }
    }
  }
}

void conv_backward(const LayerParams& p, const LayerShape& s, std::size_t k, const Matrix& in,
                   const Matrix& dz, LayerParams& grad, Matrix* din) {
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const double* x = in.row(r).data();
    const double* d = dz.row(r).data();
    double* dx = din ? din->row(r).data() : nullptr;
    for (std::size_t f = 0; f < s.out_channels; ++f) {
      const double* df = d + f * s.out_length;
      for (std::size_t t = 0; t < s.out_length; ++t) grad.bias[f] += df[t];
      for (std::size_t c = 0; c < s.in_channels; ++c) {
        const double* xc = x + c * s.in_length;
        const std::size_t w_off = (f * s.in_channels + c) * k;
        for (std::size_t j = 0; j < k; ++j) {
          const double* xs = xc + j;
          double acc = 0.0;
          for (std::size_t t = 0; t < s.out_length; ++t) acc += df[t] * xs[t];
          grad.weights[w_off + j] += acc;
          if (dx) {
            const double wj = p.weights[w_off + j];
            double* dxs = dx + c * s.in_length + j;
            for (std::size_t t = 0; t < s.out_length; ++t) dxs[t] += wj * df[t];
          }
        }
      }
    }
  }
}

// Forward pass; when `trace` is given it receives the input followed by every
// layer's post-activation output.
Matrix run_forward(const Network& net, const Matrix& batch, std::vector<Matrix>* trace) {
  const ModelSpec& spec = net.spec();
  if (batch.cols() != spec.input_dim) {
    throw DimensionError(fmt::format("layer 0: input has {} columns, model expects {}",
                                     batch.cols(), spec.input_dim));
  }
  if (trace) {
    trace->clear();
    trace->reserve(spec.layers.size() + 1);
    trace->push_back(batch);
  }
  Matrix current = batch;
  for (std::size_t k = 0; k < spec.layers.size(); ++k) {
    const LayerSpec& layer = spec.layers[k];
    const LayerShape& shape = net.shapes()[k];
    Matrix out(current.rows(), shape.out_size());
    if (layer.kind == LayerKind::Dense) {
      dense_forward(net.params()[k], shape, current, out);
    } else {
      conv_forward(net.params()[k], shape, layer.kernel_width, current, out);
    }
    apply_activation(layer.activation, out);
    if (trace) trace->push_back(out);
    current = std::move(out);
  }
  return current;
}

void check_same_shapes(const Network& net, const ParamSet& grads) {
  const ParamSet& params = net.params();
  if (grads.size() != params.size()) {
    throw DimensionError(
        fmt::format("gradient set has {} layers, network has {}", grads.size(), params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].weights.size() != params[k].weights.size() ||
        grads[k].bias.size() != params[k].bias.size()) {
      throw DimensionError(fmt::format("layer {}: gradient shape does not match parameters", k));
    }
  }
}

}  // namespace

void ModelSpec::validate() const {
  if (layers.empty()) throw InvalidInputError("model must have at least one layer");
  if (output_labels.empty()) throw InvalidInputError("model must have at least one output label");
  if (input_dim == 0) throw InvalidInputError("model input dimension must be positive");
  if (input_channels == 0) throw InvalidInputError("model input channel count must be positive");
  bool seen_dense = false;
  std::size_t length = input_dim / input_channels;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const LayerSpec& layer = layers[k];
    if (layer.units == 0) throw InvalidInputError(fmt::format("layer {}: zero units", k));
    if (layer.activation == Activation::Softmax && k + 1 != layers.size()) {
      throw InvalidInputError(
          fmt::format("layer {}: softmax is only allowed on the final layer", k));
    }
    if (layer.kind == LayerKind::Conv1D) {
      if (seen_dense) {
        throw InvalidInputError(fmt::format("layer {}: Conv1D may not follow a Dense layer", k));
      }
      if (k == 0 && input_dim % input_channels != 0) {
        throw InvalidInputError(fmt::format("layer 0: input dimension {} is not divisible by {} "
                                            "channels",
                                            input_dim, input_channels));
      }
      if (layer.kernel_width == 0 || layer.kernel_width > length) {
        throw InvalidInputError(fmt::format("layer {}: kernel width {} must lie in [1, {}]", k,
                                            layer.kernel_width, length));
      }
      length = length - layer.kernel_width + 1;
    } else {
      seen_dense = true;
    }
  }
  const auto shapes = layer_shapes(*this);
  if (shapes.back().out_size() != output_labels.size()) {
    throw InvalidInputError(fmt::format("final layer width {} does not match {} output labels",
                                        shapes.back().out_size(), output_labels.size()));
  }
}

std::vector<LayerShape> layer_shapes(const ModelSpec& spec) {
  std::vector<LayerShape> shapes;
  shapes.reserve(spec.layers.size());
  bool flat = true;
  LayerShape cur{1, spec.input_dim, 1, spec.input_dim};
  if (!spec.layers.empty() && spec.layers.front().kind == LayerKind::Conv1D) {
    flat = false;
    cur.out_channels = spec.input_channels;
    cur.out_length = spec.input_dim / spec.input_channels;
  }
  for (const LayerSpec& layer : spec.layers) {
    LayerShape s;
    if (layer.kind == LayerKind::Conv1D && !flat) {
      s.in_channels = cur.out_channels;
      s.in_length = cur.out_length;
      s.out_channels = layer.units;
      s.out_length = s.in_length >= layer.kernel_width ? s.in_length - layer.kernel_width + 1 : 0;
    } else {
      flat = true;
      s.in_channels = 1;
      s.in_length = cur.out_size();
      s.out_channels = 1;
      s.out_length = layer.units;
    }
    shapes.push_back(s);
    cur = s;
  }
  return shapes;
}

Architecture Architecture::ann(std::initializer_list<std::size_t> units) {
  Architecture a;
  for (std::size_t u : units) a.hidden.push_back(LayerSpec::dense(u));
  return a;
}

Architecture Architecture::cnn(std::initializer_list<std::size_t> filters,
                               std::size_t kernel_width) {
  Architecture a;
  for (std::size_t f : filters) a.hidden.push_back(LayerSpec::conv1d(f, kernel_width));
  return a;
}

std::string Architecture::describe() const {
  if (hidden.empty()) return "linear()";
  const bool conv = hidden.front().kind == LayerKind::Conv1D;
  std::string out = conv ? "cnn(" : "ann(";
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(hidden[i].units);
  }
  out += ')';
  return out;
}

ModelSpec make_classifier(const Architecture& arch, const LabelSet& labels, std::size_t input_dim,
                          std::size_t input_channels) {
  ModelSpec spec;
  spec.layers = arch.hidden;
  spec.layers.push_back(LayerSpec::dense(labels.size(), Activation::Softmax));
  spec.output_labels = labels;
  spec.input_dim = input_dim;
  spec.input_channels = input_channels;
  spec.validate();
  return spec;
}

Network::Network(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  shapes_ = layer_shapes(spec_);
  std::mt19937_64 rng(seed);
  params_.resize(spec_.layers.size());
  for (std::size_t k = 0; k < spec_.layers.size(); ++k) {
    const LayerSpec& layer = spec_.layers[k];
    const LayerShape& shape = shapes_[k];
    const std::size_t n_w = weight_count(layer, shape);
    double fan_in = 0.0;
    double fan_out = 0.0;
    if (layer.kind == LayerKind::Dense) {
      fan_in = static_cast<double>(shape.in_size());
      fan_out = static_cast<double>(layer.units);
    } else {
      fan_in = static_cast<double>(shape.in_channels * layer.kernel_width);
      fan_out = static_cast<double>(layer.units * layer.kernel_width);
    }
    const double limit = layer.activation == Activation::ReLU
                             ? std::sqrt(6.0 / fan_in)
                             : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    params_[k].weights.resize(n_w);
    for (double& w : params_[k].weights) w = dist(rng);
    params_[k].bias.assign(layer.units, 0.0);
  }
  adam_.first_moment = zeros_like(*this);
  adam_.second_moment = zeros_like(*this);
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.weights.size() + p.bias.size();
  return n;
}

ParamSet zeros_like(const Network& net) {
  ParamSet out(net.params().size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].weights.assign(net.params()[k].weights.size(), 0.0);
    out[k].bias.assign(net.params()[k].bias.size(), 0.0);
  }
  return out;
}

Matrix forward(const Network& net, const Matrix& batch) { return run_forward(net, batch, nullptr); }

double loss_crossentropy(const Matrix& scores, const Matrix& targets) {
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols()) {
    throw DimensionError(fmt::format("scores are {}x{} but targets are {}x{}", scores.rows(),
                                     scores.cols(), targets.rows(), targets.cols()));
  }
  if (scores.rows() == 0) throw InvalidInputError("cross-entropy of an empty batch");
  double total = 0.0;
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto s = scores.row(r);
    auto t = targets.row(r);
    for (std::size_t l = 0; l < s.size(); ++l) {
      if (t[l] != 0.0) total -= t[l] * std::log(std::max(s[l], kLogClip));
    }
  }
  return total / static_cast<double>(scores.rows());
}

ParamSet backward(const Network& net, const Matrix& batch, const Matrix& targets) {
  std::vector<Matrix> trace;
  const Matrix scores = run_forward(net, batch, &trace);
  if (targets.rows() != scores.rows() || targets.cols() != scores.cols()) {
    throw DimensionError(fmt::format("targets are {}x{} but scores are {}x{}", targets.rows(),
                                     targets.cols(), scores.rows(), scores.cols()));
  }
  const double inv_n = 1.0 / static_cast<double>(scores.rows());
  Matrix grad(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto s = scores.row(r);
    auto t = targets.row(r);
    auto g = grad.row(r);
    for (std::size_t l = 0; l < s.size(); ++l) {
      g[l] = s[l] > kLogClip ? -t[l] * inv_n / s[l] : 0.0;
    }
  }

  ParamSet grads = zeros_like(net);
  const auto& layers = net.spec().layers;
  for (std::size_t k = layers.size(); k-- > 0;) {
    activation_backward(layers[k].activation, trace[k + 1], grad);
    const Matrix& input = trace[k];
    Matrix din;
    Matrix* din_ptr = nullptr;
    if (k > 0) {
      din = Matrix(input.rows(), input.cols());
      din_ptr = &din;
    }
    if (layers[k].kind == LayerKind::Dense) {
      dense_backward(net.params()[k], net.shapes()[k], input, grad, grads[k], din_ptr);
    } else {
      conv_backward(net.params()[k], net.shapes()[k], layers[k].kernel_width, input, grad,
                    grads[k], din_ptr);
    }
    if (k > 0) grad = std::move(din);
  }
  return grads;
}

void adam_step(Network& net, const ParamSet& grads, double learning_rate, const AdamParams& hp) {
  check_same_shapes(net, grads);
  AdamState& st = net.adam();
  st.step += 1;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
      v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon);
    }
  };
  for (std::size_t k = 0; k < grads.size(); ++k) {
    update(net.params()[k].weights, grads[k].weights, st.first_moment[k].weights,
           st.second_moment[k].weights);
    update(net.params()[k].bias, grads[k].bias, st.first_moment[k].bias,
           st.second_moment[k].bias);
  }
}

}  // namespace fedlabel::nn
