// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "fedlabel/federation/protocol.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "fedlabel/nn/train.hpp"

namespace fedlabel::federation {

namespace {

void check_y0(const nn::Matrix& scores, std::span<const LabelId> y0) {
  if (scores.rows() != y0.size()) {
    throw DimensionError(
        fmt::format("{} score rows but {} ground-truth labels", scores.rows(), y0.size()));
  }
}

// Argmax over `labels` columns; ties go to the lowest label id.
LabelId best_label(std::span<const double> row, const LabelSet& labels) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best] || (row[i] == row[best] && labels[i] < labels[best])) best = i;
  }
  return labels[best];
}

}  // namespace

ScoreMessage to_message(const ClientScoreMatrix& scores, std::vector<double> label_accuracy) {
  if (label_accuracy.size() != scores.labels.size()) {
    throw ProtocolError(fmt::format("user {}: {} accuracies for {} labels", scores.user,
                                    label_accuracy.size(), scores.labels.size()));
  }
  ScoreMessage msg;
  msg.user_id = scores.user;
  msg.iteration = scores.iteration;
  msg.label_ids.assign(scores.labels.begin(), scores.labels.end());
  msg.row_count = scores.scores.rows();
  msg.scores.assign(scores.scores.values().begin(), scores.scores.values().end());
  msg.label_accuracy = std::move(label_accuracy);
  return msg;
}

ClientScoreMatrix from_message(const ScoreMessage& msg) {
  if (msg.label_ids.empty()) throw ProtocolError(fmt::format("user {}: no labels", msg.user_id));
  if (msg.scores.size() != msg.row_count * msg.label_ids.size()) {
    throw ProtocolError(fmt::format("user {}: {} scores for {} rows x {} labels", msg.user_id,
                                    msg.scores.size(), msg.row_count, msg.label_ids.size()));
  }
  if (msg.label_accuracy.size() != msg.label_ids.size()) {
    throw ProtocolError(fmt::format("user {}: accuracy metadata does not match labels",
                                    msg.user_id));
  }
  for (double a : msg.label_accuracy) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw ProtocolError(fmt::format("user {}: accuracy {} outside [0, 1]", msg.user_id, a));
    }
  }
  ClientScoreMatrix out;
  out.user = msg.user_id;
  out.iteration = msg.iteration;
  out.labels = LabelSet(msg.label_ids);
  out.scores = nn::Matrix(msg.row_count, msg.label_ids.size(), msg.scores);
  if (!out.scores.all_finite()) {
    throw ProtocolError(fmt::format("user {}: non-finite scores", msg.user_id));
  }
  return out;
}

std::string encode_json(const ScoreMessage& msg) {
  nlohmann::json j;
  j["user_id"] = msg.user_id;
  j["iteration"] = msg.iteration;
  j["label_ids"] = msg.label_ids;
  j["row_count"] = msg.row_count;
  j["scores"] = msg.scores;
  j["label_accuracy"] = msg.label_accuracy;
  return j.dump();
}

ScoreMessage decode_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ScoreMessage msg;
    j.at("user_id").get_to(msg.user_id);
    j.at("iteration").get_to(msg.iteration);
    j.at("label_ids").get_to(msg.label_ids);
    j.at("row_count").get_to(msg.row_count);
    j.at("scores").get_to(msg.scores);
    j.at("label_accuracy").get_to(msg.label_accuracy);
    if (j.size() != 6) throw ProtocolError("score message carries unexpected fields");
    return msg;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(fmt::format("malformed score message: {}", e.what()));
  }
}

GlobalScoreTable GlobalScoreTable::zero(std::size_t rows, std::size_t num_labels) {
  return {0, nn::Matrix(rows, num_labels)};
}

bool GlobalScoreTable::is_zero() const noexcept {
  auto v = scores.values();
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

OverlapMap::OverlapMap(std::span<const std::pair<UserId, LabelSet>> users,
                       std::size_t num_labels)
    : owners_(num_labels) {
  for (const auto& [user, labels] : users) {
    labels.check_within(num_labels);
    for (LabelId l : labels) owners_[static_cast<std::size_t>(l)].push_back(user);
  }
  for (auto& o : owners_) {
    std::sort(o.begin(), o.end());
    if (std::adjacent_find(o.begin(), o.end()) != o.end()) {
      throw ProtocolError("duplicate user id in overlap map");
    }
  }
}

std::vector<LabelId> OverlapMap::uncovered() const {
  std::vector<LabelId> out;
  for (std::size_t l = 0; l < owners_.size(); ++l) {
    if (owners_[l].empty()) out.push_back(static_cast<LabelId>(l));
  }
  return out;
}

double BetaWeights::at(UserId user, LabelId label) const {
  auto it = weights.find({user, label});
  if (it == weights.end()) {
    throw ProtocolError(fmt::format("no beta for user {} label {}", user, label));
  }
  return it->second;
}

ClientScoreMatrix predict_public_scores(const nn::Network& model, const nn::Matrix& public_x,
                                        UserId user, std::size_t iteration) {
  return {user, iteration, model.spec().output_labels, nn::forward(model, public_x)};
}

double client_accuracy(const ClientScoreMatrix& scores, std::span<const LabelId> y0,
                       bool restrict_to_own) {
  check_y0(scores.scores, y0);
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t r = 0; r < y0.size(); ++r) {
    if (restrict_to_own && !scores.labels.contains(y0[r])) continue;
    ++total;
    if (best_label(scores.scores.row(r), scores.labels) == y0[r]) ++correct;
  }
  if (total == 0) {
    throw UndefinedAccuracyError(
        fmt::format("user {}: no public rows to evaluate accuracy on", scores.user));
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

double label_accuracy(const ClientScoreMatrix& scores, std::span<const LabelId> y0,
                      LabelId label) {
  check_y0(scores.scores, y0);
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t r = 0; r < y0.size(); ++r) {
    if (y0[r] != label) continue;
    ++total;
    if (best_label(scores.scores.row(r), scores.labels) == label) ++correct;
  }
  if (total == 0) {
    throw UndefinedAccuracyError(fmt::format("no public rows with label {}", label));
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

BetaWeights compute_beta(const OverlapMap& overlap, const std::map<UserLabel, double>& accuracy) {
  BetaWeights beta;
  for (std::size_t l = 0; l < overlap.num_labels(); ++l) {
    const auto label = static_cast<LabelId>(l);
    const auto& owners = overlap.owners(label);
    for (UserId user : owners) {
      if (owners.size() == 1) {
        beta.weights[{user, label}] = 1.0;
        continue;
      }
      auto it = accuracy.find({user, label});
      if (it == accuracy.end()) {
        throw ProtocolError(
            fmt::format("missing accuracy for user {} on overlapping label {}", user, label));
      }
      if (!(it->second >= 0.0 && it->second <= 1.0)) {
        throw ProtocolError(fmt::format("accuracy {} for user {} label {} outside [0, 1]",
                                        it->second, user, label));
      }
      beta.weights[{user, label}] = it->second;
    }
  }
  return beta;
}

GlobalUpdate global_update(std::span<const ClientScoreMatrix> submissions, const BetaWeights& beta,
                           const OverlapMap& overlap, std::size_t iteration) {
  if (submissions.empty()) throw ProtocolError("global update without submissions");
  const std::size_t rows = submissions.front().scores.rows();
  std::map<UserId, const ClientScoreMatrix*> by_user;
  for (const auto& s : submissions) {
    if (s.scores.rows() != rows) {
      throw ProtocolError(fmt::format("user {} scored {} public rows, expected {}", s.user,
                                      s.scores.rows(), rows));
    }
    if (s.scores.cols() != s.labels.size()) {
      throw ProtocolError(fmt::format("user {}: score columns do not match labels", s.user));
    }
    if (!by_user.emplace(s.user, &s).second) {
      throw ProtocolError(fmt::format("user {} submitted twice", s.user));
    }
  }

  GlobalUpdate out;
  out.table.iteration = iteration;
  out.table.scores = nn::Matrix(rows, overlap.num_labels());
  for (std::size_t l = 0; l < overlap.num_labels(); ++l) {
    const auto label = static_cast<LabelId>(l);
    const auto& owners = overlap.owners(label);
    if (owners.empty()) throw ProtocolError(fmt::format("label {} is owned by no user", label));

    std::vector<std::pair<const ClientScoreMatrix*, double>> parts;
    double weight_sum = 0.0;
    for (UserId user : owners) {
      auto it = by_user.find(user);
      if (it == by_user.end()) {
        throw ProtocolError(fmt::format("owner {} of label {} did not submit", user, label));
      }
      if (!it->second->labels.contains(label)) {
        throw ProtocolError(fmt::format("user {} submitted no scores for label {}", user, label));
      }
      const double b = beta.at(user, label);
      parts.emplace_back(it->second, b);
      weight_sum += b;
    }
    if (!(weight_sum > 0.0)) {
      out.warnings.push_back(fmt::format(
          "iteration {}: label {} has zero total beta, using the unweighted mean", iteration,
          label));
      for (auto& p : parts) p.second = 1.0;
      weight_sum = static_cast<double>(parts.size());
    }
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (const auto& [sub, b] : parts) {
        acc += b * sub->scores(r, static_cast<std::size_t>(sub->labels.index_of(label)));
      }
      out.table.scores(r, l) = acc / weight_sum;
    }
  }
  return out;
}

double global_accuracy(const GlobalScoreTable& global, std::span<const LabelId> y0) {
  check_y0(global.scores, y0);
  if (global.is_zero()) throw UndefinedAccuracyError("global table has not been aggregated yet");
  if (y0.empty()) throw UndefinedAccuracyError("empty public set");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < y0.size(); ++r) {
    if (static_cast<LabelId>(nn::argmax(global.scores.row(r))) == y0[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(y0.size());
}

double restricted_global_accuracy(const GlobalScoreTable& global, std::span<const LabelId> y0,
                                  const LabelSet& labels) {
  check_y0(global.scores, y0);
  if (global.is_zero()) throw UndefinedAccuracyError("global table has not been aggregated yet");
  labels.check_within(global.scores.cols());
  std::vector<double> row(labels.size());
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t r = 0; r < y0.size(); ++r) {
    if (!labels.contains(y0[r])) continue;
    ++total;
    for (std::size_t c = 0; c < labels.size(); ++c) {
      row[c] = global.scores(r, static_cast<std::size_t>(labels[c]));
    }
    if (best_label(row, labels) == y0[r]) ++correct;
  }
  if (total == 0) throw UndefinedAccuracyError("no public rows carry the requested labels");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace fedlabel::federation
