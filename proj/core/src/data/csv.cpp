// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/data/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include <fmt/format.h>

namespace fedlabel::data {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct Row {
  double t;
  double x, y, z;
  std::string label;
  std::optional<double> rate;
};

std::optional<double> infer_rate(const std::vector<double>& ts) {
  if (ts.size() < 2) return std::nullopt;
  std::vector<double> steps;
  steps.reserve(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) steps.push_back(ts[i] - ts[i - 1]);
  auto mid = steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2);
  std::nth_element(steps.begin(), mid, steps.end());
  if (!(*mid > 0.0)) return std::nullopt;
  return std::round(1.0 / *mid);
}

}  // namespace

IngestResult ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw SchemaError(fmt::format("'{}': missing header row", path.string()));

  const auto header = split(line, schema.delimiter);
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw SchemaError(fmt::format("'{}': missing required column '{}'", path.string(), name));
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_t = column(schema.timestamp);
  const std::size_t c_x = column(schema.x);
  const std::size_t c_y = column(schema.y);
  const std::size_t c_z = column(schema.z);
  const std::size_t c_label = column(schema.label);
  const std::optional<std::size_t> c_rate =
      schema.rate_column ? std::optional(column(*schema.rate_column)) : std::nullopt;

  IngestResult result;
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, schema.delimiter);
    std::optional<Row> row;
    if (fields.size() == header.size()) {
      auto t = parse_number(fields[c_t]);
      auto x = parse_number(fields[c_x]);
      auto y = parse_number(fields[c_y]);
      auto z = parse_number(fields[c_z]);
      std::optional<double> rate;
      bool rate_ok = true;
      if (c_rate) {
        rate = parse_number(fields[*c_rate]);
        rate_ok = rate && *rate > 0.0;
      }
      if (t && x && y && z && rate_ok && !fields[c_label].empty()) {
        row = Row{*t * schema.timestamp_scale, *x, *y, *z, std::string(fields[c_label]), rate};
      }
    }
    if (!row) {
      if (schema.on_malformed == MalformedPolicy::Fail) {
        throw SchemaError(fmt::format("'{}' line {}: malformed row", path.string(), line_no));
      }
      ++result.malformed_rows;
      continue;
    }
    rows.push_back(std::move(*row));
  }

  auto label_id = [&](const std::string& name) {
    auto it = std::find(result.label_names.begin(), result.label_names.end(), name);
    if (it != result.label_names.end()) {
      return static_cast<LabelId>(it - result.label_names.begin());
    }
    result.label_names.push_back(name);
    return static_cast<LabelId>(result.label_names.size() - 1);
  };

  std::size_t start = 0;
  while (start < rows.size()) {
    std::size_t stop = start + 1;
    while (stop < rows.size() && rows[stop].label == rows[start].label &&
           rows[stop].rate == rows[start].rate) {
      ++stop;
    }
    RawRecording rec;
    rec.label = label_id(rows[start].label);
    for (std::size_t i = start; i < stop; ++i) {
      rec.timestamps.push_back(rows[i].t);
      rec.samples[0].push_back(rows[i].x);
      rec.samples[1].push_back(rows[i].y);
      rec.samples[2].push_back(rows[i].z);
    }
    std::optional<double> rate = rows[start].rate ? rows[start].rate : schema.rate;
    if (!rate) rate = infer_rate(rec.timestamps);
    if (rate) {
      rec.rate = *rate;
      result.recordings.push_back(std::move(rec));
    } else {
      ++result.dropped_runs;
    }
    start = stop;
  }
  return result;
}

}  // namespace fedlabel::data
