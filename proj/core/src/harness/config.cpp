// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace fedlabel::harness {

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(delim, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::map<std::string, Entry> tokenize(std::string_view text) {
  std::map<std::string, Entry> entries;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", line_no));
    if (value.empty()) {
      throw ConfigError(fmt::format("line {}: key '{}' has no value", line_no, key));
    }
    if (entries.contains(key)) {
      throw ConfigError(fmt::format("line {}: duplicate key '{}' (first set on line {})", line_no,
                                    key, entries[key].line));
    }
    entries.emplace(key, Entry{value, line_no});
  }
  if (entries.empty()) throw ConfigError("line 1: configuration is empty");
  return entries;
}

// Consumes keys from the tokenized map; anything left over is unknown.
class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  std::optional<Entry> take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    Entry e = std::move(it->second);
    entries_.erase(it);
    return e;
  }

  template <typename T>
  void number(const std::string& key, T& out) {
    auto e = take(key);
    if (!e) return;
    T v{};
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
      throw ConfigError(
          fmt::format("line {}: '{}' is not a valid number for '{}'", e->line, e->value, key));
    }
    out = v;
  }

  void flag(const std::string& key, bool& out) {
    auto e = take(key);
    if (!e) return;
    if (e->value == "true") {
      out = true;
    } else if (e->value == "false") {
      out = false;
    } else {
      throw ConfigError(
          fmt::format("line {}: '{}' must be true or false, got '{}'", e->line, key, e->value));
    }
  }

  void text(const std::string& key, std::string& out) {
    if (auto e = take(key)) out = e->value;
  }

  std::vector<std::string> keys_with_prefix(std::string_view prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) {
      if (k.starts_with(prefix)) out.push_back(k);
    }
    return out;
  }

  void reject_leftovers() const {
    if (entries_.empty()) return;
    const auto first = std::min_element(entries_.begin(), entries_.end(), [](auto& a, auto& b) {
      return a.second.line < b.second.line;
    });
    throw ConfigError(fmt::format("line {}: unknown key '{}'", first->second.line, first->first));
  }

 private:
  std::map<std::string, Entry> entries_;
};

std::size_t parse_count(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(fmt::format("'{}' is not a valid {}", s, what));
  }
  return v;
}

void read_schema(Reader& r, data::CsvSchema& schema) {
  r.text("csv.timestamp", schema.timestamp);
  r.text("csv.x", schema.x);
  r.text("csv.y", schema.y);
  r.text("csv.z", schema.z);
  r.text("csv.label", schema.label);
  if (auto e = r.take("csv.rate_column")) schema.rate_column = e->value;
  double rate = 0.0;
  r.number("csv.rate", rate);
  if (rate > 0.0) schema.rate = rate;
  r.number("csv.timestamp_scale", schema.timestamp_scale);
  if (auto e = r.take("csv.delimiter")) {
    if (e->value == "tab") {
      schema.delimiter = '\t';
    } else if (e->value.size() == 1) {
      schema.delimiter = e->value[0];
    } else {
      throw ConfigError(fmt::format("line {}: csv.delimiter must be one character or 'tab'",
                                    e->line));
    }
  }
  if (auto e = r.take("csv.on_malformed")) {
    if (e->value == "skip") {
      schema.on_malformed = data::MalformedPolicy::Skip;
    } else if (e->value == "fail") {
      schema.on_malformed = data::MalformedPolicy::Fail;
    } else {
      throw ConfigError(fmt::format("line {}: csv.on_malformed must be skip or fail", e->line));
    }
  }
}

}  // namespace

const nn::Architecture& ModelSchedule::at(std::size_t iteration) const {
  const nn::Architecture* current = &initial;
  for (const auto& c : changes) {
    if (c.at_iteration <= iteration) current = &c.architecture;
  }
  return *current;
}

const ScheduleChange* ModelSchedule::change_at(std::size_t iteration) const {
  for (const auto& c : changes) {
    if (c.at_iteration == iteration) return &c;
  }
  return nullptr;
}

std::size_t ExperimentConfig::input_dim() const {
  if (const auto* syn = std::get_if<SyntheticSource>(&source)) return syn->params.dim;
  return data::kAxes * static_cast<std::size_t>(data::kTargetRate * data::kWindowSeconds / 2.0);
}

nn::Architecture parse_architecture(std::string_view text, std::size_t kernel_width) {
  text = trim(text);
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw ConfigError(fmt::format("architecture '{}' must look like ann(8,16) or cnn(16,32)",
                                  text));
  }
  const auto kind = trim(text.substr(0, open));
  const auto units = split_list(text.substr(open + 1, text.size() - open - 2), ',');
  if (units.empty()) throw ConfigError(fmt::format("architecture '{}' has no layers", text));
  nn::Architecture arch;
  for (const auto& u : units) {
    const std::size_t n = parse_count(u, "layer width");
    if (n == 0) throw ConfigError(fmt::format("architecture '{}' has a zero-width layer", text));
    if (kind == "ann") {
      arch.hidden.push_back(nn::LayerSpec::dense(n));
    } else if (kind == "cnn") {
      arch.hidden.push_back(nn::LayerSpec::conv1d(n, kernel_width));
    } else {
      throw ConfigError(fmt::format("unknown architecture kind '{}' (use ann or cnn)", kind));
    }
  }
  return arch;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  Reader r(tokenize(text));
  ExperimentConfig cfg;

  auto at_line = [](const Entry& e, auto&& fn) {
    try {
      return fn();
    } catch (const ConfigError& err) {
      throw ConfigError(fmt::format("line {}: {}", e.line, err.what()));
    }
  };

  auto labels = r.take("experiment.labels");
  if (!labels) throw ConfigError("field 'experiment.labels': required");
  cfg.labels = split_list(labels->value, ',');
  r.number("experiment.iterations", cfg.iterations);
  r.number("experiment.seed", cfg.seed);
  r.number("experiment.per_label_per_iteration", cfg.per_label_per_iteration);
  r.number("experiment.public_per_label", cfg.public_per_label);
  r.number("model.kernel_width", cfg.kernel_width);

  std::string source = "synthetic";
  r.text("data.source", source);
  if (source == "synthetic") {
    SyntheticSource syn;
    r.number("synthetic.dim", syn.params.dim);
    r.number("synthetic.separation", syn.params.separation);
    r.number("synthetic.anisotropy", syn.params.anisotropy);
    r.number("synthetic.drift", syn.params.drift);
    r.number("synthetic.group_separation", syn.params.group_separation);
    if (auto e = r.take("synthetic.groups")) {
      std::vector<std::size_t> group(cfg.labels.size(), SIZE_MAX);
      std::size_t next = 0;
      for (const auto& family : split_list(e->value, ';')) {
        for (const auto& name : split_list(family, ',')) {
          auto it = std::find(cfg.labels.begin(), cfg.labels.end(), name);
          if (it == cfg.labels.end()) {
            throw ConfigError(
                fmt::format("line {}: field 'synthetic.groups': unknown label '{}'", e->line, name));
          }
          auto& slot = group[static_cast<std::size_t>(it - cfg.labels.begin())];
          if (slot != SIZE_MAX) {
            throw ConfigError(fmt::format(
                "line {}: field 'synthetic.groups': label '{}' listed twice", e->line, name));
          }
          slot = next;
        }
        ++next;
      }
      for (auto& g : group) {
        if (g == SIZE_MAX) g = next++;
      }
      syn.params.group = std::move(group);
    }
    if (auto e = r.take("synthetic.shifts")) {
      for (const auto& item : split_list(e->value, ',')) {
        at_line(*e, [&] {
          const auto at = item.find('@');
          const auto colon = item.find(':');
          if (at == std::string::npos || colon == std::string::npos || colon < at) {
            throw ConfigError(fmt::format("shift '{}' must look like user@iteration:magnitude",
                                          item));
          }
          DriftShift s;
          s.user = static_cast<UserId>(parse_count(trim(std::string_view(item).substr(0, at)),
                                                   "user id"));
          s.iteration = parse_count(
              trim(std::string_view(item).substr(at + 1, colon - at - 1)), "iteration");
          const std::string mag(trim(std::string_view(item).substr(colon + 1)));
          auto [ptr, ec] = std::from_chars(mag.data(), mag.data() + mag.size(), s.magnitude);
          if (ec != std::errc{} || ptr != mag.data() + mag.size() || s.magnitude < 0.0) {
            throw ConfigError(fmt::format("shift magnitude '{}' is invalid", mag));
          }
          syn.shifts.push_back(s);
        });
      }
    }
    cfg.source = syn;
  } else if (source == "csv") {
    CsvSource csv;
    auto path = r.take("csv.path");
    if (!path) throw ConfigError("field 'csv.path': required when data.source = csv");
    csv.path = path->value;
    if (csv.path.is_relative() && !base_dir.empty()) csv.path = base_dir / csv.path;
    read_schema(r, csv.schema);
    cfg.source = csv;
  } else {
    throw ConfigError(fmt::format("field 'data.source': unknown source '{}'", source));
  }

  std::size_t max_epochs = 5, batch = 32, patience = 1;
  double lr = 1e-3, val = 0.1;
  r.number("train.max_epochs", max_epochs);
  r.number("train.batch_size", batch);
  r.number("train.learning_rate", lr);
  r.number("train.patience", patience);
  r.number("train.validation_fraction", val);
  try {
    cfg.train = nn::TrainConfig(max_epochs, batch, lr, patience, val, 0);
  } catch (const Error& e) {
    throw ConfigError(fmt::format("field 'train': {}", e.what()));
  }
  cfg.distill.train = cfg.train;

  r.number("distill.temperature", cfg.distill.temperature);
  if (auto e = r.take("distill.student")) {
    cfg.distill.student = at_line(*e, [&] { return parse_architecture(e->value, cfg.kernel_width); });
  }

  if (auto e = r.take("federation.beta_granularity")) {
    if (e->value == "user") {
      cfg.beta_granularity = federation::BetaGranularity::User;
    } else if (e->value == "user-label") {
      cfg.beta_granularity = federation::BetaGranularity::UserLabel;
    } else {
      throw ConfigError(fmt::format(
          "line {}: federation.beta_granularity must be user or user-label", e->line));
    }
  }
  r.flag("federation.restrict_accuracy", cfg.restrict_accuracy);
  r.flag("output.audit_messages", cfg.audit_messages);

  // user.<id>.{labels,model,schedule}
  std::map<UserId, UserConfig> users;
  std::map<UserId, std::size_t> user_lines;
  for (const auto& key : r.keys_with_prefix("user.")) {
    const auto dot = key.find('.', 5);
    if (dot == std::string::npos) continue;
    const std::string id_text = key.substr(5, dot - 5);
    const std::string field = key.substr(dot + 1);
    if (field != "labels" && field != "model" && field != "schedule") continue;
    auto e = r.take(key);
    const auto id = static_cast<UserId>(at_line(*e, [&] { return parse_count(id_text, "user id"); }));
    if (id == 0) throw ConfigError(fmt::format("line {}: user ids start at 1", e->line));
    UserConfig& u = users[id];
    u.id = id;
    user_lines.try_emplace(id, e->line);
    if (field == "labels") {
      std::vector<LabelId> ids;
      for (const auto& name : split_list(e->value, ',')) {
        auto it = std::find(cfg.labels.begin(), cfg.labels.end(), name);
        if (it == cfg.labels.end()) {
          throw ConfigError(fmt::format("field '{}': unknown label '{}'", key, name));
        }
        ids.push_back(static_cast<LabelId>(it - cfg.labels.begin()));
      }
      try {
        u.labels = LabelSet(ids);
      } catch (const Error& err) {
        throw ConfigError(fmt::format("field '{}': {}", key, err.what()));
      }
    } else if (field == "model") {
      u.schedule.initial = at_line(*e, [&] { return parse_architecture(e->value, cfg.kernel_width); });
    } else {
      for (const auto& item : split_list(e->value, ';')) {
        at_line(*e, [&] {
          const auto colon = item.find(':');
          if (colon == std::string::npos) {
            throw ConfigError(fmt::format("schedule entry '{}' must look like 10:ann(16,16,32)",
                                          item));
          }
          ScheduleChange c;
          c.at_iteration = parse_count(trim(std::string_view(item).substr(0, colon)), "iteration");
          c.architecture = parse_architecture(std::string_view(item).substr(colon + 1),
                                              cfg.kernel_width);
          u.schedule.changes.push_back(std::move(c));
        });
      }
    }
  }
  r.reject_leftovers();

  for (auto& [id, u] : users) {
    if (u.labels.empty()) {
      throw ConfigError(fmt::format("field 'user.{}.labels': required", id));
    }
    if (u.schedule.initial.hidden.empty()) {
      throw ConfigError(fmt::format("field 'user.{}.model': required", id));
    }
    cfg.users.push_back(std::move(u));
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (labels.empty()) throw ConfigError("field 'experiment.labels': at least one label required");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i] == labels[j]) {
        throw ConfigError(fmt::format("field 'experiment.labels': duplicate label '{}'",
                                      labels[i]));
      }
    }
  }
  if (users.empty()) throw ConfigError("field 'user': at least one user required");
  if (iterations == 0) throw ConfigError("field 'experiment.iterations': must be at least 1");
  if (per_label_per_iteration == 0) {
    throw ConfigError("field 'experiment.per_label_per_iteration': must be at least 1");
  }
  if (public_per_label == 0) {
    throw ConfigError("field 'experiment.public_per_label': must be at least 1");
  }
  try {
    distill.validate();
  } catch (const Error& e) {
    throw ConfigError(fmt::format("field 'distill': {}", e.what()));
  }

  std::vector<bool> covered(labels.size(), false);
  for (std::size_t k = 0; k < users.size(); ++k) {
    const UserConfig& u = users[k];
    if (k > 0 && users[k - 1].id >= u.id) {
      throw ConfigError("field 'user': user ids must be unique and ascending");
    }
    try {
      u.labels.check_within(labels.size());
    } catch (const Error& e) {
      throw ConfigError(fmt::format("field 'user.{}.labels': {}", u.id, e.what()));
    }
    for (LabelId l : u.labels) covered[static_cast<std::size_t>(l)] = true;

    std::size_t prev = 0;
    for (const auto& c : u.schedule.changes) {
      if (c.at_iteration < 1 || c.at_iteration > iterations || c.at_iteration <= prev) {
        throw ConfigError(fmt::format("field 'user.{}.schedule': change at iteration {} must be "
                                      "strictly increasing within [1, {}]",
                                      u.id, c.at_iteration, iterations));
      }
      prev = c.at_iteration;
    }
    auto check_arch = [&](const nn::Architecture& arch, const std::string& field) {
      try {
        (void)nn::make_classifier(arch, u.labels, input_dim(), data::kAxes);
      } catch (const Error& e) {
        throw ConfigError(fmt::format("field '{}': {}", field, e.what()));
      }
    };
    check_arch(u.schedule.initial, fmt::format("user.{}.model", u.id));
    for (const auto& c : u.schedule.changes) {
      check_arch(c.architecture, fmt::format("user.{}.schedule", u.id));
    }
    try {
      (void)nn::make_classifier(distill.student, u.labels, input_dim(), data::kAxes);
    } catch (const Error& e) {
      throw ConfigError(fmt::format("field 'distill.student': {}", e.what()));
    }
  }
  for (std::size_t l = 0; l < labels.size(); ++l) {
    if (!covered[l]) {
      throw ConfigError(fmt::format("field 'user.*.labels': label '{}' is owned by no user",
                                    labels[l]));
    }
  }

  if (const auto* syn = std::get_if<SyntheticSource>(&source)) {
    if (syn->params.dim < 2 || syn->params.dim < labels.size()) {
      throw ConfigError("field 'synthetic.dim': must be at least 2 and at least the label count");
    }
    if (!(syn->params.separation > 0.0)) {
      throw ConfigError("field 'synthetic.separation': must be positive");
    }
    if (!(syn->params.anisotropy >= 0.0 && syn->params.anisotropy < 1.0)) {
      throw ConfigError("field 'synthetic.anisotropy': must lie in [0, 1)");
    }
    if (!syn->params.group.empty()) {
      std::size_t families = 0;
      for (std::size_t g : syn->params.group) families = std::max(families, g + 1);
      if (syn->params.dim < labels.size() + families) {
        throw ConfigError("field 'synthetic.dim': too small for the label families");
      }
      if (!(syn->params.group_separation >= syn->params.separation)) {
        throw ConfigError(
            "field 'synthetic.group_separation': must be at least synthetic.separation");
      }
    }
    if (!(syn->params.drift >= 0.0)) {
      throw ConfigError("field 'synthetic.drift': must be non-negative");
    }
    for (const auto& s : syn->shifts) {
      const bool known = std::any_of(users.begin(), users.end(),
                                     [&](const UserConfig& u) { return u.id == s.user; });
      if (!known || s.iteration < 1 || s.iteration > iterations) {
        throw ConfigError(fmt::format("field 'synthetic.shifts': {}@{} names no user/iteration",
                                      s.user, s.iteration));
      }
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

data::CsvSchema load_csv_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open schema '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  Reader r(tokenize(buf.str()));
  data::CsvSchema schema;
  read_schema(r, schema);
  r.reject_leftovers();
  return schema;
}

}  // namespace fedlabel::harness
