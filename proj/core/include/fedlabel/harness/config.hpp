// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedlabel/data/csv.hpp"
#include "fedlabel/data/dataset.hpp"
#include "fedlabel/distill/distill.hpp"
#include "fedlabel/federation/protocol.hpp"
#include "fedlabel/nn/network.hpp"
#include "fedlabel/nn/train.hpp"

namespace fedlabel::harness {

/// Parse or validation failure. Messages carry "line N" for syntax errors
/// and the dotted field path for semantic ones.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ScheduleChange {
  std::size_t at_iteration = 0;
  nn::Architecture architecture;

  friend bool operator==(const ScheduleChange&, const ScheduleChange&) = default;
};

struct ModelSchedule {
  nn::Architecture initial;
  std::vector<ScheduleChange> changes;  // strictly increasing iterations

  /// Architecture in force during `iteration`.
  [[nodiscard]] const nn::Architecture& at(std::size_t iteration) const;
  /// The change scheduled for exactly `iteration`, if any.
  [[nodiscard]] const ScheduleChange* change_at(std::size_t iteration) const;
};

struct UserConfig {
  UserId id = 0;
  LabelSet labels;
  ModelSchedule schedule;
};

/// Overrides the synthetic drift magnitude of one (user, iteration) shard.
struct DriftShift {
  UserId user = 0;
  std::size_t iteration = 0;
  double magnitude = 0.0;
};

struct SyntheticSource {
  data::SyntheticParams params;
  std::vector<DriftShift> shifts;
};

struct CsvSource {
  std::filesystem::path path;
  data::CsvSchema schema;
};

struct ExperimentConfig {
  std::vector<std::string> labels;
  std::vector<UserConfig> users;  // ascending id
  std::size_t iterations = 15;
  std::size_t per_label_per_iteration = 200;
  std::size_t public_per_label = 200;
  std::variant<SyntheticSource, CsvSource> source = SyntheticSource{};
  distill::DistillConfig distill;
  nn::TrainConfig train;
  std::uint64_t seed = 0;
  federation::BetaGranularity beta_granularity = federation::BetaGranularity::UserLabel;
  bool restrict_accuracy = true;
  bool audit_messages = false;
  std::size_t kernel_width = 3;

  [[nodiscard]] std::size_t input_dim() const;
  /// Throws ConfigError naming the violated field.
  void validate() const;
};

/// Parses an architecture such as "ann(16,16,32)" or "cnn(16,32)".
nn::Architecture parse_architecture(std::string_view text, std::size_t kernel_width = 3);

/// Flat `section.key = value` text; `#` starts a comment. Relative CSV paths
/// resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Reads only `csv.*` keys (used by the preprocess command).
data::CsvSchema load_csv_schema(const std::filesystem::path& path);

}  // namespace fedlabel::harness
