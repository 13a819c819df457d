// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/common.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace fedlabel {

namespace {

void check_unique(const std::vector<LabelId>& ids) {
  if (ids.empty()) {
    throw InvalidInputError("label set must not be empty");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0) {
      throw InvalidInputError(fmt::format("negative label id {}", ids[i]));
    }
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (ids[i] == ids[j]) {
        throw InvalidInputError(fmt::format("duplicate label id {} in label set", ids[i]));
      }
    }
  }
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

LabelSet::LabelSet(std::initializer_list<LabelId> ids) : members_(ids) { check_unique(members_); }

LabelSet::LabelSet(std::vector<LabelId> ids) : members_(std::move(ids)) { check_unique(members_); }

bool LabelSet::contains(LabelId id) const noexcept {
  return std::find(members_.begin(), members_.end(), id) != members_.end();
}

std::ptrdiff_t LabelSet::index_of(LabelId id) const noexcept {
  auto it = std::find(members_.begin(), members_.end(), id);
  return it == members_.end() ? -1 : it - members_.begin();
}

bool LabelSet::is_subset_of(const LabelSet& other) const noexcept {
  return std::all_of(members_.begin(), members_.end(),
                     [&](LabelId id) { return other.contains(id); });
}

void LabelSet::check_within(std::size_t universe_size) const {
  for (LabelId id : members_) {
    if (static_cast<std::size_t>(id) >= universe_size) {
      throw InvalidInputError(
          fmt::format("label id {} outside universe of {} labels", id, universe_size));
    }
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) noexcept {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (c + 0x85157af5ULL));
  return h;
}

}  // namespace fedlabel
