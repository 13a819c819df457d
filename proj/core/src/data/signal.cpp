// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/data/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <fmt/format.h>

namespace fedlabel::data {

namespace {

constexpr std::size_t kDecimationOrder = 8;
constexpr double kCutoffFraction = 0.8;

// Direct form II transposed, in place, starting from state (z1, z2) per section.
void sos_filter(std::span<const Biquad> sections, std::vector<double>& x, double initial) {
  for (const Biquad& s : sections) {
    // Steady state for a constant input `initial`; every section has unit DC gain.
    double z2 = (s.b2 - s.a2) * initial;
    double z1 = (s.b1 - s.a1) * initial + z2;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

}  // namespace

std::vector<Segment> window(const RawRecording& rec, double seconds) {
  if (!(seconds > 0.0)) throw InvalidInputError("window length must be positive");
  if (!(rec.rate > 0.0)) throw InvalidRateError("recording rate must be positive");
  const auto per_window = static_cast<std::size_t>(std::llround(seconds * rec.rate));
  if (per_window == 0) throw InvalidInputError("window shorter than one sample");
  for (const auto& axis : rec.samples) {
    if (axis.size() != rec.size()) throw DimensionError("recording axes differ in length");
  }
  const std::size_t count = rec.size() / per_window;
  std::vector<Segment> out(count);
  for (std::size_t w = 0; w < count; ++w) {
    for (std::size_t a = 0; a < kAxes; ++a) {
      auto first = rec.samples[a].begin() + static_cast<std::ptrdiff_t>(w * per_window);
      out[w][a].assign(first, first + static_cast<std::ptrdiff_t>(per_window));
    }
  }
  return out;
}

std::vector<Biquad> butterworth_lowpass(std::size_t order, double cutoff) {
  if (order == 0 || order % 2 != 0) throw InvalidInputError("butterworth order must be even");
  if (!(cutoff > 0.0 && cutoff < 1.0)) {
    throw InvalidInputError(fmt::format("cutoff {} must lie in (0, 1)", cutoff));
  }
  // Analog prototype prewarped for the bilinear transform with fs = 2.
  constexpr double fs = 2.0;
  const double warped = 2.0 * fs * std::tan(std::numbers::pi * cutoff / fs);
  std::vector<Biquad> sections;
  sections.reserve(order / 2);
  for (std::size_t k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * static_cast<double>(2 * k + order + 1) /
                         static_cast<double>(2 * order);
    const std::complex<double> pole = warped * std::polar(1.0, theta);
    const std::complex<double> z = (2.0 * fs + pole) / (2.0 * fs - pole);
    const double a1 = -2.0 * z.real();
    const double a2 = std::norm(z);
    // Both zeros at z = -1; scale for H(1) = 1.
    const double gain = (1.0 + a1 + a2) / 4.0;
    sections.push_back({gain, 2.0 * gain, gain, a1, a2});
  }
  return sections;
}

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n == 0) return {};
  if (n == 1) return {signal[0]};
  const std::size_t pad = std::min<std::size_t>(3 * (2 * sections.size() + 1), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * signal[0] - signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * signal[n - 1] - signal[n - 1 - i]);

  sos_filter(sections, ext, ext.front());
  std::reverse(ext.begin(), ext.end());
  sos_filter(sections, ext, ext.front());
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> decimate(std::span<const double> signal, double from_rate, double to_rate) {
  if (!(to_rate > 0.0) || !(from_rate > 0.0)) throw InvalidRateError("rates must be positive");
  if (from_rate < to_rate) {
    throw InvalidRateError(
        fmt::format("cannot decimate from {} Hz up to {} Hz", from_rate, to_rate));
  }
  const double ratio = from_rate / to_rate;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9) {
    throw InvalidRateError(fmt::format("{} Hz is not an integer multiple of {} Hz", from_rate,
                                       to_rate));
  }
  const auto factor = static_cast<std::size_t>(rounded);
  if (factor == 1) return {signal.begin(), signal.end()};

  const auto sections = butterworth_lowpass(kDecimationOrder, kCutoffFraction / rounded);
  const std::vector<double> smoothed = filtfilt(sections, signal);
  std::vector<double> out;
  out.reserve((smoothed.size() + factor - 1) / factor);
  for (std::size_t i = 0; i < smoothed.size(); i += factor) out.push_back(smoothed[i]);
  return out;
}

std::vector<double> dwt_approx(std::span<const double> signal) {
  if (signal.empty()) throw InvalidInputError("dwt of an empty signal");
  const std::size_t half = (signal.size() + 1) / 2;
  std::vector<double> out(half);
  for (std::size_t k = 0; k < half; ++k) {
    const double a = signal[2 * k];
    const double b = 2 * k + 1 < signal.size() ? signal[2 * k + 1] : signal.back();
    out[k] = (a + b) / std::numbers::sqrt2;
  }
  return out;
}

FeatureWindow make_feature_window(const Segment& segment, double from_rate, LabelId label) {
  FeatureWindow fw;
  fw.label = label;
  for (const auto& axis : segment) {
    const auto coeffs = dwt_approx(decimate(axis, from_rate, kTargetRate));
    fw.features.insert(fw.features.end(), coeffs.begin(), coeffs.end());
  }
  return fw;
}

}  // namespace fedlabel::data
