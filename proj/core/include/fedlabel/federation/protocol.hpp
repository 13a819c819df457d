// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedlabel/common.hpp"
#include "fedlabel/nn/matrix.hpp"
#include "fedlabel/nn/network.hpp"

namespace fedlabel::federation {

/// A client's softmax scores over its own labels for every public sample.
struct ClientScoreMatrix {
  UserId user = 0;
  std::size_t iteration = 0;
  LabelSet labels;
  nn::Matrix scores;  // rows = public samples, cols = labels (in set order)
};

/// The only payload a client sends to the server: label ids, scores and
/// accuracy metadata. Carries no model parameters.
struct ScoreMessage {
  UserId user_id = 0;
  std::size_t iteration = 0;
  std::vector<LabelId> label_ids;
  std::size_t row_count = 0;
  std::vector<double> scores;          // row-major, row_count x label_ids.size()
  std::vector<double> label_accuracy;  // one per label id, in label order

  friend bool operator==(const ScoreMessage&, const ScoreMessage&) = default;
};

ScoreMessage to_message(const ClientScoreMatrix& scores, std::vector<double> label_accuracy);
/// Validates shapes; throws ProtocolError on inconsistent messages.
ClientScoreMatrix from_message(const ScoreMessage& msg);

/// JSON audit form: {"user_id", "iteration", "label_ids", "row_count",
/// "scores", "label_accuracy"}.
std::string encode_json(const ScoreMessage& msg);
ScoreMessage decode_json(const std::string& text);

/// Server state: the latest global score table.
struct GlobalScoreTable {
  std::size_t iteration = 0;
  nn::Matrix scores;  // rows = public samples, cols = label universe

  /// The all-zero initial table.
  static GlobalScoreTable zero(std::size_t rows, std::size_t num_labels);
  [[nodiscard]] bool is_zero() const noexcept;
};

/// label -> owning users (ascending).
class OverlapMap {
 public:
  OverlapMap(std::span<const std::pair<UserId, LabelSet>> users, std::size_t num_labels);

  [[nodiscard]] std::size_t num_labels() const noexcept { return owners_.size(); }
  [[nodiscard]] const std::vector<UserId>& owners(LabelId label) const {
    return owners_.at(static_cast<std::size_t>(label));
  }
  [[nodiscard]] bool is_unique(LabelId label) const { return owners(label).size() == 1; }
  [[nodiscard]] std::vector<LabelId> uncovered() const;

 private:
  std::vector<std::vector<UserId>> owners_;
};

using UserLabel = std::pair<UserId, LabelId>;

struct BetaWeights {
  std::map<UserLabel, double> weights;  // defined iff the user owns the label

  [[nodiscard]] double at(UserId user, LabelId label) const;
};

enum class BetaGranularity { User, UserLabel };

/// Predicted class scores of `model` on the public inputs.
ClientScoreMatrix predict_public_scores(const nn::Network& model, const nn::Matrix& public_x,
                                        UserId user, std::size_t iteration);

/// Argmax accuracy over the client's labels (ties to the lowest column).
/// With `restrict_to_own`, only rows whose truth lies in the client's labels
/// count. Throws UndefinedAccuracyError on an empty evaluation set.
double client_accuracy(const ClientScoreMatrix& scores, std::span<const LabelId> y0,
                       bool restrict_to_own = true);

/// Fraction of rows with truth `label` that the client classifies as `label`.
double label_accuracy(const ClientScoreMatrix& scores, std::span<const LabelId> y0,
                      LabelId label);

/// beta = 1 for labels with a single owner, the supplied accuracy otherwise.
/// Throws ProtocolError if an overlapping (user, label) has no accuracy.
BetaWeights compute_beta(const OverlapMap& overlap, const std::map<UserLabel, double>& accuracy);

struct GlobalUpdate {
  GlobalScoreTable table;
  std::vector<std::string> warnings;
};

/// Label-wise beta-weighted average of the owners' scores, reduced in
/// ascending user order. A label whose weights sum to zero falls back to the
/// unweighted mean and is reported in `warnings`.
GlobalUpdate global_update(std::span<const ClientScoreMatrix> submissions, const BetaWeights& beta,
                           const OverlapMap& overlap, std::size_t iteration);

/// Argmax over the whole label universe. Throws UndefinedAccuracyError for a
/// zero table.
double global_accuracy(const GlobalScoreTable& global, std::span<const LabelId> y0);

/// The global table seen through one user's labels: argmax over `labels`
/// columns on rows whose truth lies in `labels`.
double restricted_global_accuracy(const GlobalScoreTable& global, std::span<const LabelId> y0,
                                  const LabelSet& labels);

}  // namespace fedlabel::federation
