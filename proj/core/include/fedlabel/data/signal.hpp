// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fedlabel/common.hpp"

namespace fedlabel::data {

inline constexpr std::size_t kAxes = 3;
inline constexpr double kTargetRate = 50.0;
inline constexpr double kWindowSeconds = 2.0;

/// Triaxial samples, one vector per axis (x, y, z).
using Segment = std::array<std::vector<double>, kAxes>;

/// A contiguous accelerometer recording with a single activity label.
struct RawRecording {
  std::vector<double> timestamps;  // seconds
  Segment samples;                 // m/s^2
  double rate = 0.0;               // Hz
  LabelId label = 0;

  [[nodiscard]] std::size_t size() const noexcept { return samples[0].size(); }
  [[nodiscard]] double duration() const noexcept {
    return rate > 0.0 ? static_cast<double>(size()) / rate : 0.0;
  }
};

struct FeatureWindow {
  std::vector<double> features;
  LabelId label = 0;
};

/// Splits a recording into non-overlapping windows of `seconds`; the trailing
/// remainder is dropped. A recording shorter than one window yields nothing.
std::vector<Segment> window(const RawRecording& rec, double seconds = kWindowSeconds);

/// Second-order section of a digital IIR filter (a0 normalized to 1).
struct Biquad {
  double b0, b1, b2;
  double a1, a2;
};

/// Butterworth low-pass as cascaded biquads with unit DC gain per section.
/// `cutoff` is relative to Nyquist and must lie in (0, 1); `order` must be even.
std::vector<Biquad> butterworth_lowpass(std::size_t order, double cutoff);

/// Zero-phase (forward-backward) filtering with odd-extension padding and
/// steady-state initial conditions.
std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> signal);

/// Integer-factor decimation: order-8 Butterworth low-pass at 80% of the
/// target Nyquist, applied forward-backward, then subsampling.
/// Throws InvalidRateError if from_rate is not an integer multiple of to_rate.
std::vector<double> decimate(std::span<const double> signal, double from_rate,
                             double to_rate = kTargetRate);

/// Single-level Haar approximation coefficients, (s[2k] + s[2k+1]) / sqrt(2).
/// Odd-length input is padded by repeating the final sample.
std::vector<double> dwt_approx(std::span<const double> signal);

/// decimate -> dwt_approx per axis, concatenated x||y||z.
FeatureWindow make_feature_window(const Segment& segment, double from_rate, LabelId label = 0);

}  // namespace fedlabel::data
