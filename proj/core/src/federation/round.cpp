// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/federation/round.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

#include <fmt/format.h>

namespace fedlabel::federation {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

enum SeedPurpose : std::uint64_t { kBuildInit = 1, kBuildTrain, kDistill, kLocalTrain };

std::uint64_t client_seed(const RoundConfig& cfg, UserId user, std::size_t iteration,
                          SeedPurpose purpose) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(user), iteration, purpose);
}

}  // namespace

ClientOutcome run_client(const UserState& user, const GlobalScoreTable& global,
                         const data::PublicDataset& pub, const data::PrivateShard& shard,
                         const RoundConfig& cfg, std::size_t iteration) {
  if (shard.label_set != user.labels) {
    throw ProtocolError(fmt::format("user {}: shard label set does not match the user's labels",
                                    user.id));
  }
  ClientOutcome out;
  std::optional<nn::Network> model;

  {
    auto start = Clock::now();
    const distill::Restriction restriction = distill::restrict_and_normalize(global.scores,
                                                                             user.labels);
    distill::DistillConfig dcfg = cfg.distill;
    if (user.rebuild) dcfg.student = user.architecture;
    auto student = distill::distill_student(pub.x0, restriction, dcfg,
                                            client_seed(cfg, user.id, iteration, kDistill));
    out.timings.distill = seconds_since(start);
    if (student) {
      start = Clock::now();
      model = distill::local_update(std::move(student->network), shard,
                                    cfg.train.with_seed(
                                        client_seed(cfg, user.id, iteration, kLocalTrain)))
                  .network;
      out.timings.local_update = seconds_since(start);
      out.path = ClientPath::Distill;
    }
  }
  if (!model) {
    const auto start = Clock::now();
    nn::Network fresh(nn::make_classifier(user.architecture, user.labels, pub.x0.cols(),
                                          cfg.input_channels),
                      client_seed(cfg, user.id, iteration, kBuildInit));
    model = nn::train(std::move(fresh), shard.features,
                      distill::one_hot(shard.labels, user.labels),
                      cfg.train.with_seed(client_seed(cfg, user.id, iteration, kBuildTrain)))
                .network;
    out.timings.build = seconds_since(start);
    out.path = ClientPath::Build;
  }

  const auto start = Clock::now();
  const ClientScoreMatrix scores = predict_public_scores(*model, pub.x0, user.id, iteration);
  out.local_accuracy = client_accuracy(scores, pub.y0, cfg.restrict_accuracy);
  std::vector<double> reported;
  reported.reserve(user.labels.size());
  for (LabelId l : user.labels) {
    if (!cfg.restrict_accuracy) {
      reported.push_back(client_accuracy(scores, pub.y0, false));
    } else if (cfg.beta_granularity == BetaGranularity::UserLabel) {
      reported.push_back(label_accuracy(scores, pub.y0, l));
    } else {
      reported.push_back(out.local_accuracy);
    }
  }
  out.message = to_message(scores, std::move(reported));
  out.timings.predict = seconds_since(start);
  return out;
}

Server::Server(OverlapMap overlap, std::size_t public_rows)
    : overlap_(std::move(overlap)), public_rows_(public_rows) {
  const auto missing = overlap_.uncovered();
  if (!missing.empty()) {
    throw ProtocolError(fmt::format("label {} is owned by no user", missing.front()));
  }
}

void Server::submit(const ScoreMessage& message) {
  ClientScoreMatrix scores = from_message(message);
  if (scores.scores.rows() != public_rows_) {
    throw ProtocolError(fmt::format("user {} scored {} rows, public set has {}", scores.user,
                                    scores.scores.rows(), public_rows_));
  }
  for (LabelId l : scores.labels) {
    if (static_cast<std::size_t>(l) >= overlap_.num_labels()) {
      throw ProtocolError(fmt::format("user {} sent unknown label {}", scores.user, l));
    }
    const auto& owners = overlap_.owners(l);
    if (!std::binary_search(owners.begin(), owners.end(), scores.user)) {
      throw ProtocolError(fmt::format("user {} does not own label {}", scores.user, l));
    }
  }
  if (inbox_.contains(scores.user)) {
    throw ProtocolError(fmt::format("user {} submitted twice in one round", scores.user));
  }
  for (std::size_t i = 0; i < message.label_ids.size(); ++i) {
    accuracy_[{message.user_id, message.label_ids[i]}] = message.label_accuracy[i];
  }
  inbox_.emplace(scores.user, std::move(scores));
}

GlobalUpdate Server::aggregate(std::size_t iteration) {
  last_beta_ = compute_beta(overlap_, accuracy_);
  std::vector<ClientScoreMatrix> ordered;
  ordered.reserve(inbox_.size());
  for (auto& [id, s] : inbox_) ordered.push_back(std::move(s));
  inbox_.clear();
  accuracy_.clear();
  return global_update(ordered, last_beta_, overlap_, iteration);
}

RoundMetrics run_round(FederationState& state, std::size_t iteration,
                       const data::PublicDataset& pub, const ShardSource& shards,
                       const RoundConfig& cfg) {
  const std::size_t n_users = state.users.size();
  std::vector<ClientOutcome> outcomes(n_users);
  std::vector<std::exception_ptr> failures(n_users);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t m = next++; m < n_users; m = next++) {
      try {
        const UserState& user = state.users[m];
        const data::PrivateShard shard = shards.shard(user.id, user.labels, iteration);
        outcomes[m] = run_client(user, state.global, pub, shard, cfg, iteration);
      } catch (...) {
        failures[m] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(cfg.threads, 1, std::max<std::size_t>(n_users, 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::vector<std::pair<UserId, LabelSet>> owned;
  for (const UserState& u : state.users) owned.emplace_back(u.id, u.labels);
  Server server(OverlapMap(owned, state.num_labels), pub.size());
  for (const ClientOutcome& o : outcomes) server.submit(o.message);
  const auto start = Clock::now();
  GlobalUpdate update = server.aggregate(iteration);
  const double aggregate_time = seconds_since(start);

  RoundMetrics metrics;
  metrics.iteration = iteration;
  metrics.warnings = std::move(update.warnings);
  metrics.beta = server.last_beta();
  metrics.timings.aggregate = aggregate_time;
  double sum = 0.0;
  for (std::size_t m = 0; m < n_users; ++m) {
    UserState& user = state.users[m];
    const ClientOutcome& o = outcomes[m];
    UserRoundMetrics um;
    um.user = user.id;
    um.local_accuracy = o.local_accuracy;
    um.global_accuracy = restricted_global_accuracy(update.table, pub.y0, user.labels);
    um.path = o.path;
    sum += um.global_accuracy;
    metrics.users.push_back(um);
    metrics.messages.push_back(o.message);
    metrics.timings.build += o.timings.build;
    metrics.timings.distill += o.timings.distill;
    metrics.timings.local_update += o.timings.local_update;
    metrics.timings.predict += o.timings.predict;
    user.rebuild = false;
  }
  metrics.global_average = n_users ? sum / static_cast<double>(n_users) : 0.0;
  metrics.global_table_accuracy = global_accuracy(update.table, pub.y0);
  state.global = std::move(update.table);
  return metrics;
}

}  // namespace fedlabel::federation
