// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedlabel {

// Error hierarchy. Every failure surfaced by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class InvalidRateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class UndefinedAccuracyError : public Error {
 public:
  using Error::Error;
};

using LabelId = std::int32_t;
using UserId = std::int32_t;

/// Ordered set of activity label ids. Order is significant: score columns
/// follow it.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<LabelId> ids);
  explicit LabelSet(std::vector<LabelId> ids);

  [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
  [[nodiscard]] bool empty() const noexcept { return members_.empty(); }
  [[nodiscard]] bool contains(LabelId id) const noexcept;
  /// Column index of `id`, or -1 when absent.
  [[nodiscard]] std::ptrdiff_t index_of(LabelId id) const noexcept;
  [[nodiscard]] LabelId operator[](std::size_t i) const { return members_[i]; }
  [[nodiscard]] std::span<const LabelId> members() const noexcept { return members_; }
  [[nodiscard]] auto begin() const noexcept { return members_.begin(); }
  [[nodiscard]] auto end() const noexcept { return members_.end(); }
  [[nodiscard]] bool is_subset_of(const LabelSet& other) const noexcept;
  /// Throws InvalidInputError unless every id lies in [0, universe_size).
  void check_within(std::size_t universe_size) const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<LabelId> members_;
};

/// Stateless seed derivation so that every (user, iteration, purpose) stream
/// is independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0) noexcept;

}  // namespace fedlabel
