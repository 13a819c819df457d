// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/harness/experiment.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "fedlabel/data/csv.hpp"
#include "fedlabel/harness/report.hpp"

namespace fedlabel::harness {

namespace {

enum SeedStream : std::uint64_t {
  kGeometry = 0x67656f,
  kPublic = 0x707562,
  kShard = 0x736872,
  kPartition = 0x707274,
  kRound = 0x726e64,
};

class SyntheticShards final : public federation::ShardSource {
 public:
  SyntheticShards(data::SyntheticGenerator gen, std::vector<DriftShift> shifts,
                  std::size_t per_label, std::uint64_t seed)
      : gen_(std::move(gen)), shifts_(std::move(shifts)), per_label_(per_label), seed_(seed) {}

  data::PrivateShard shard(UserId user, const LabelSet& labels,
                           std::size_t iteration) const override {
    double drift = gen_.params().drift;
    for (const auto& s : shifts_) {
      if (s.user == user && s.iteration == iteration) drift = s.magnitude;
    }
    data::LabeledSet set = gen_.sample(
        labels, per_label_, derive_seed(seed_, kShard, static_cast<std::uint64_t>(user), iteration),
        drift);
    data::PrivateShard out;
    out.owner = user;
    out.iteration = iteration;
    out.features = std::move(set.x);
    out.labels = std::move(set.y);
    out.label_set = labels;
    return out;
  }

 private:
  data::SyntheticGenerator gen_;
  std::vector<DriftShift> shifts_;
  std::size_t per_label_;
  std::uint64_t seed_;
};

class GridShards final : public federation::ShardSource {
 public:
  GridShards(data::ShardGrid grid, std::vector<UserId> ids)
      : grid_(std::move(grid)), ids_(std::move(ids)) {}

  data::PrivateShard shard(UserId user, const LabelSet& labels,
                           std::size_t iteration) const override {
    const auto it = std::find(ids_.begin(), ids_.end(), user);
    if (it == ids_.end()) throw InvalidInputError(fmt::format("no shards for user {}", user));
    const auto& row = grid_[static_cast<std::size_t>(it - ids_.begin())];
    if (iteration == 0 || iteration > row.size()) {
      throw InvalidInputError(fmt::format("no shard for user {} at iteration {}", user, iteration));
    }
    data::PrivateShard out = row[iteration - 1];
    out.owner = user;
    if (out.label_set != labels) {
      throw InvalidInputError(fmt::format("user {}: shard labels differ from request", user));
    }
    return out;
  }

 private:
  data::ShardGrid grid_;
  std::vector<UserId> ids_;
};

DataBundle prepare_synthetic(const ExperimentConfig& cfg, const SyntheticSource& src) {
  const std::size_t num_labels = cfg.labels.size();
  data::SyntheticGenerator gen(num_labels, src.params, derive_seed(cfg.seed, kGeometry));
  std::vector<LabelId> all(num_labels);
  std::iota(all.begin(), all.end(), LabelId{0});
  data::LabeledSet pub =
      gen.sample(LabelSet(all), cfg.public_per_label, derive_seed(cfg.seed, kPublic), 0.0);
  DataBundle out{data::PublicDataset(std::move(pub), num_labels), nullptr};
  out.shards = std::make_unique<SyntheticShards>(std::move(gen), src.shifts,
                                                 cfg.per_label_per_iteration, cfg.seed);
  return out;
}

DataBundle prepare_csv(const ExperimentConfig& cfg, const CsvSource& src) {
  const data::IngestResult ingest = data::ingest_csv(src.path, src.schema);
  std::vector<LabelId> remap(ingest.label_names.size(), -1);
  for (std::size_t i = 0; i < ingest.label_names.size(); ++i) {
    auto it = std::find(cfg.labels.begin(), cfg.labels.end(), ingest.label_names[i]);
    if (it != cfg.labels.end()) remap[i] = static_cast<LabelId>(it - cfg.labels.begin());
  }
  data::LabeledSet features = data::features_from_recordings(ingest.recordings);
  std::vector<std::size_t> known;
  for (std::size_t r = 0; r < features.size(); ++r) {
    const LabelId mapped = remap[static_cast<std::size_t>(features.y[r])];
    features.y[r] = mapped;
    if (mapped >= 0) known.push_back(r);
  }
  features = features.subset(known);

  std::vector<std::vector<std::size_t>> by_label(cfg.labels.size());
  for (std::size_t r = 0; r < features.size(); ++r) {
    by_label[static_cast<std::size_t>(features.y[r])].push_back(r);
  }
  std::vector<std::size_t> public_rows;
  std::vector<std::size_t> private_rows;
  for (std::size_t l = 0; l < by_label.size(); ++l) {
    auto& rows = by_label[l];
    if (rows.size() < cfg.public_per_label) {
      throw CapacityError(fmt::format("label '{}' has {} windows, public set needs {}",
                                      cfg.labels[l], rows.size(), cfg.public_per_label));
    }
    std::mt19937_64 rng(derive_seed(cfg.seed, kPublic, l));
    std::shuffle(rows.begin(), rows.end(), rng);
    public_rows.insert(public_rows.end(), rows.begin(),
                       rows.begin() + static_cast<std::ptrdiff_t>(cfg.public_per_label));
    private_rows.insert(private_rows.end(),
                        rows.begin() + static_cast<std::ptrdiff_t>(cfg.public_per_label),
                        rows.end());
  }
  std::sort(public_rows.begin(), public_rows.end());
  std::sort(private_rows.begin(), private_rows.end());

  std::vector<LabelSet> sets;
  std::vector<UserId> ids;
  for (const auto& u : cfg.users) {
    sets.push_back(u.labels);
    ids.push_back(u.id);
  }
  data::ShardGrid grid =
      data::partition_noniid(features.subset(private_rows), sets, cfg.iterations,
                             cfg.per_label_per_iteration, derive_seed(cfg.seed, kPartition));
  DataBundle out{data::PublicDataset(features.subset(public_rows), cfg.labels.size()), nullptr};
  out.shards = std::make_unique<GridShards>(std::move(grid), std::move(ids));
  return out;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::string round_name(std::size_t iteration, const char* ext) {
  return fmt::format("round_{:03}{}", iteration, ext);
}

void persist_round(const federation::RoundMetrics& m, const federation::GlobalScoreTable& table,
                   const std::vector<MetricsRow>& all_rows, const std::filesystem::path& dir,
                   bool audit) {
  write_metrics_csv(all_rows, dir / "metrics.csv");
  write_snapshot(table, dir / "snapshots" / round_name(m.iteration, ".bin"));

  const bool first = m.iteration == 1;
  const auto mode = first ? std::ios::trunc : std::ios::app;
  {
    auto out = open_out(dir / "beta.csv", std::ios::out | mode);
    if (first) out << "iteration,user,label,beta\n";
    for (const auto& [key, b] : m.beta.weights) {
      out << fmt::format("{},{},{},{:.6f}\n", m.iteration, key.first, key.second, b);
    }
  }
  {
    auto out = open_out(dir / "timings.csv", std::ios::out | mode);
    if (first) out << "iteration,build_s,distill_s,local_update_s,predict_s,aggregate_s\n";
    const auto& t = m.timings;
    out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", m.iteration, t.build, t.distill,
                       t.local_update, t.predict, t.aggregate);
  }
  if (!m.warnings.empty()) {
    auto out = open_out(dir / "warnings.log", std::ios::out | std::ios::app);
    for (const auto& w : m.warnings) out << w << '\n';
  }
  if (audit) {
    auto out = open_out(dir / "messages" / round_name(m.iteration, ".jsonl"), std::ios::out);
    for (const auto& msg : m.messages) out << federation::encode_json(msg) << '\n';
  }
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> buf{};
  for (std::size_t i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw IoError("truncated snapshot");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

constexpr std::uint32_t kSnapshotVersion = 1;

}  // namespace

RoundError::RoundError(std::size_t iteration, const std::string& what)
    : Error(fmt::format("round {}: {}", iteration, what)), iteration_(iteration) {}

DataBundle prepare_data(const ExperimentConfig& cfg) {
  if (const auto* syn = std::get_if<SyntheticSource>(&cfg.source)) {
    return prepare_synthetic(cfg, *syn);
  }
  return prepare_csv(cfg, std::get<CsvSource>(cfg.source));
}

federation::UserState apply_model_schedule(federation::UserState user,
                                           const ModelSchedule& schedule, std::size_t iteration) {
  if (const ScheduleChange* change = schedule.change_at(iteration)) {
    user.architecture = change->architecture;
    user.rebuild = true;
  }
  return user;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  DataBundle data = prepare_data(cfg);

  federation::FederationState state;
  state.num_labels = cfg.labels.size();
  state.global = federation::GlobalScoreTable::zero(data.public_set.size(), state.num_labels);
  for (const auto& u : cfg.users) {
    state.users.push_back({u.id, u.labels, u.schedule.initial, false});
  }

  federation::RoundConfig round_cfg;
  round_cfg.distill = cfg.distill;
  round_cfg.train = cfg.train;
  round_cfg.beta_granularity = cfg.beta_granularity;
  round_cfg.restrict_accuracy = cfg.restrict_accuracy;
  round_cfg.seed = derive_seed(cfg.seed, kRound);
  round_cfg.threads = std::max<std::size_t>(options.threads, 1);

  if (options.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*options.out_dir / "snapshots", ec);
    if (cfg.audit_messages) std::filesystem::create_directories(*options.out_dir / "messages", ec);
    if (ec) {
      throw IoError(fmt::format("cannot create '{}': {}", options.out_dir->string(),
                                ec.message()));
    }
    std::filesystem::remove(*options.out_dir / "warnings.log", ec);
  }

  ExperimentResult result;
  std::vector<MetricsRow> rows;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    for (std::size_t m = 0; m < state.users.size(); ++m) {
      state.users[m] = apply_model_schedule(std::move(state.users[m]), cfg.users[m].schedule, it);
    }
    federation::RoundMetrics metrics;
    try {
      metrics = federation::run_round(state, it, data.public_set, *data.shards, round_cfg);
    } catch (const RoundError&) {
      throw;
    } catch (const std::exception& e) {
      throw RoundError(it, e.what());
    }
    for (const auto& u : metrics.users) rows.push_back({it, u.user, u.local_accuracy, u.global_accuracy});
    if (options.out_dir) {
      persist_round(metrics, state.global, rows, *options.out_dir, cfg.audit_messages);
    }
    result.rounds.push_back(std::move(metrics));
  }
  result.final_table = state.global;
  return result;
}

void write_snapshot(const federation::GlobalScoreTable& table, const std::filesystem::path& path) {
  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  out.write("FLGT", 4);
  const std::uint32_t version = kSnapshotVersion;
  for (std::size_t i = 0; i < 4; ++i) out.put(static_cast<char>((version >> (8 * i)) & 0xff));
  put_u64(out, table.iteration);
  put_u64(out, table.scores.rows());
  put_u64(out, table.scores.cols());
  for (double v : table.scores.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

federation::GlobalScoreTable read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open snapshot '{}'", path.string()));
  std::array<char, 8> head{};
  in.read(head.data(), head.size());
  if (!in || std::memcmp(head.data(), "FLGT", 4) != 0) {
    throw IoError(fmt::format("'{}' is not a score-table snapshot", path.string()));
  }
  std::uint32_t version = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    version |= static_cast<std::uint32_t>(static_cast<unsigned char>(head[4 + i])) << (8 * i);
  }
  if (version != kSnapshotVersion) {
    throw IoError(fmt::format("snapshot version {} is not supported", version));
  }
  federation::GlobalScoreTable table;
  table.iteration = get_u64(in);
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  std::vector<double> values(rows * cols);
  for (double& v : values) v = std::bit_cast<double>(get_u64(in));
  table.scores = nn::Matrix(rows, cols, std::move(values));
  return table;
}

}  // namespace fedlabel::harness
