// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/harness/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace fedlabel::harness {

namespace {

constexpr const char* kMetricsHeader = "iteration,user,local_acc,global_acc";
constexpr const char* kSummaryHeader = "user,local_update,global_update,accuracy_increase";

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

template <typename T>
T parse_field(std::string_view s, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw SchemaError(fmt::format("metrics.csv line {}: bad field '{}'", line, s));
  }
  return v;
}

}  // namespace

std::vector<MetricsRow> metrics_rows(std::span<const federation::RoundMetrics> rounds) {
  std::vector<MetricsRow> rows;
  for (const auto& r : rounds) {
    for (const auto& u : r.users) {
      rows.push_back({r.iteration, u.user, u.local_accuracy, u.global_accuracy});
    }
  }
  return rows;
}

void write_metrics_csv(std::span<const MetricsRow> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{:.6f},{:.6f}\n", r.iteration, r.user, r.local_acc, r.global_acc);
  }
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw SchemaError(fmt::format("'{}' does not start with '{}'", path.string(), kMetricsHeader));
  }
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<std::string_view, 4> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto comma = line.find(',', start);
      if ((i < 3) == (comma == std::string::npos)) {
        throw SchemaError(fmt::format("metrics.csv line {}: expected 4 fields", line_no));
      }
      f[i] = std::string_view(line).substr(start, comma == std::string::npos ? line.npos
                                                                              : comma - start);
      start = comma + 1;
    }
    rows.push_back({parse_field<std::size_t>(f[0], line_no), parse_field<UserId>(f[1], line_no),
                    parse_field<double>(f[2], line_no), parse_field<double>(f[3], line_no)});
  }
  return rows;
}

std::vector<SummaryRow> summarize(std::span<const MetricsRow> rows) {
  struct Acc {
    double local = 0.0, global = 0.0;
    std::size_t n = 0;
  };
  std::map<UserId, Acc> per_user;
  for (const auto& r : rows) {
    auto& a = per_user[r.user];
    a.local += r.local_acc;
    a.global += r.global_acc;
    ++a.n;
  }
  std::vector<SummaryRow> out;
  SummaryRow avg{"Average"};
  for (const auto& [user, a] : per_user) {
    const double local = 100.0 * a.local / static_cast<double>(a.n);
    const double global = 100.0 * a.global / static_cast<double>(a.n);
    out.push_back({fmt::format("User_{}", user), local, global, global - local});
    avg.local_update += local;
    avg.global_update += global;
  }
  if (!per_user.empty()) {
    const auto n = static_cast<double>(per_user.size());
    avg.local_update /= n;
    avg.global_update /= n;
    avg.accuracy_increase = avg.global_update - avg.local_update;
    out.push_back(avg);
  }
  return out;
}

std::string render_chart(const std::string& title, std::span<const Series> series) {
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
  constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                  "#ff7f0e", "#9467bd", "#8c564b"};
  std::size_t n = 0;
  for (const auto& s : series) n = std::max(n, s.values.size());
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](std::size_t i) {
    return kLeft + (n > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(n - 1) : plot_w / 2);
  };
  auto py = [&](double v) { return kTop + plot_h * (1.0 - std::clamp(v, 0.0, 1.0)); };

  std::ostringstream svg;
  svg << fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kLeft + plot_w / 2, xml_escape(title));
  for (int tick = 0; tick <= 10; tick += 2) {
    const double y = py(tick / 10.0);
    svg << fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#dddddd\"/>\n"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
        kLeft, y, kLeft + plot_w, kLeft - 6, y + 4, tick * 10);
  }
  for (std::size_t i = 0; i < n; ++i) {
    svg << fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(i),
                       kTop + plot_h + 18, i + 1);
  }
  svg << fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{3}\" y2=\"{2}\" stroke=\"black\"/>\n"
      "<text x=\"{4}\" y=\"{5}\" text-anchor=\"middle\">Iteration</text>\n"
      "<text x=\"16\" y=\"{6}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {6})\">"
      "Accuracy (%)</text>\n",
      kLeft, kTop, kTop + plot_h, kLeft + plot_w, kLeft + plot_w / 2, kHeight - 10,
      kTop + plot_h / 2);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % kColors.size()];
    std::string points;
    for (std::size_t i = 0; i < series[s].values.size(); ++i) {
      points += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(i), py(series[s].values[i]));
    }
    svg << fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color,
        points);
    const double ly = kTop + 10 + 20 * static_cast<double>(s);
    svg << fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n"
        "<text x=\"{4}\" y=\"{5}\">{6}</text>\n",
        kLeft + plot_w + 12, ly, kLeft + plot_w + 32, color, kLeft + plot_w + 38, ly + 4,
        xml_escape(series[s].name));
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_report(std::span<const MetricsRow> rows, const std::filesystem::path& out_dir) {
  if (rows.empty()) throw InvalidInputError("report needs at least one round of metrics");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));

  write_metrics_csv(rows, out_dir / "metrics.csv");
  {
    auto out = open_out(out_dir / "summary.csv");
    out << kSummaryHeader << '\n';
    for (const auto& s : summarize(rows)) {
      out << fmt::format("{},{:.2f},{:.2f},{:.2f}\n", s.name, s.local_update, s.global_update,
                         s.accuracy_increase);
    }
  }

  std::map<UserId, std::map<std::size_t, const MetricsRow*>> by_user;
  std::map<std::size_t, std::pair<double, double>> sums;
  std::map<std::size_t, std::size_t> counts;
  for (const auto& r : rows) {
    by_user[r.user][r.iteration] = &r;
    sums[r.iteration].first += r.local_acc;
    sums[r.iteration].second += r.global_acc;
    ++counts[r.iteration];
  }
  for (const auto& [user, its] : by_user) {
    std::array<Series, 2> series{Series{"Local update", {}}, Series{"Global update", {}}};
    for (const auto& [it, r] : its) {
      series[0].values.push_back(r->local_acc);
      series[1].values.push_back(r->global_acc);
    }
    auto out = open_out(out_dir / fmt::format("user_{}.svg", user));
    out << render_chart(fmt::format("User_{}", user), series);
  }
  std::array<Series, 2> avg{Series{"Local average", {}}, Series{"Global average", {}}};
  for (const auto& [it, s] : sums) {
    const auto n = static_cast<double>(counts[it]);
    avg[0].values.push_back(s.first / n);
    avg[1].values.push_back(s.second / n);
  }
  auto out = open_out(out_dir / "global_average.svg");
  out << render_chart("Global average accuracy", avg);
}

}  // namespace fedlabel::harness
