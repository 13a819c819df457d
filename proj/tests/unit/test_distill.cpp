// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fedlabel/data/dataset.hpp"
#include "fedlabel/distill/distill.hpp"

namespace fedlabel::distill {
namespace {

nn::Matrix random_table(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  nn::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (double& v : m.row(r)) sum += (v = unit(rng));
    for (double& v : m.row(r)) v /= sum;
  }
  return m;
}

DistillConfig fast_config() {
  DistillConfig cfg;
  cfg.student = nn::Architecture::ann({16});
  cfg.train = nn::TrainConfig(5, 16, 5e-3, 2, 0.1, 0);
  return cfg;
}

TEST(Restrict, RenormalizesSelectedColumns) {
  const nn::Matrix g(1, 4, {0.1, 0.2, 0.3, 0.4});
  const auto r = restrict_and_normalize(g, LabelSet{2, 3});
  ASSERT_EQ(r.kept(), 1u);
  EXPECT_NEAR(r.targets.probs(0, 0), 0.428571, 1e-6);
  EXPECT_NEAR(r.targets.probs(0, 1), 0.571429, 1e-6);
  EXPECT_NEAR(r.targets.probs(0, 0), 0.3 / 0.7, 1e-15);
}

TEST(Restrict, ZeroTableIsColdStart) {
  const auto r = restrict_and_normalize(nn::Matrix(10, 4), LabelSet{0, 1});
  EXPECT_EQ(r.kept(), 0u);
  EXPECT_TRUE(r.cold());
  EXPECT_EQ(r.targets.probs.rows(), 0u);
}

TEST(Restrict, FullUniverseIsIdentity) {
  const nn::Matrix g = random_table(6, 4, 1);
  const auto r = restrict_and_normalize(g, LabelSet{0, 1, 2, 3});
  ASSERT_EQ(r.kept(), 6u);
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    EXPECT_NEAR(r.targets.probs.values()[i], g.values()[i], 1e-12);
  }
}

TEST(Restrict, MasksRowsWithoutMassAndRowsSumToOne) {
  nn::Matrix g = random_table(5, 4, 2);
  g(1, 0) = 0.0;
  g(1, 1) = 0.0;
  const auto r = restrict_and_normalize(g, LabelSet{1, 0});
  EXPECT_FALSE(r.keep[1]);
  EXPECT_EQ(r.kept(), 4u);
  for (std::size_t row = 0; row < r.targets.probs.rows(); ++row) {
    EXPECT_NEAR(r.targets.probs(row, 0) + r.targets.probs(row, 1), 1.0, 1e-6);
  }
}

TEST(Restrict, PermutedLabelsPermuteColumns) {
  const nn::Matrix g = random_table(8, 4, 3);
  const auto a = restrict_and_normalize(g, LabelSet{0, 2, 3});
  const auto b = restrict_and_normalize(g, LabelSet{3, 0, 2});
  const std::size_t map[3] = {2, 0, 1};  // b column c holds a column map[c]
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_NEAR(b.targets.probs(r, c), a.targets.probs(r, map[c]), 1e-15);
    }
  }
}

TEST(Soften, TemperatureOneIsIdentity) {
  SoftTargets t{random_table(7, 3, 4), LabelSet{0, 1, 2}};
  const auto s = soften(t, 1.0);
  for (std::size_t i = 0; i < t.probs.values().size(); ++i) {
    EXPECT_NEAR(s.probs.values()[i], t.probs.values()[i], 1e-12);
  }
}

TEST(Soften, HighTemperatureFlattens) {
  SoftTargets t{nn::Matrix(1, 2, {0.9, 0.1}), LabelSet{0, 1}};
  const auto s = soften(t, 100.0);
  // Closed form: 0.9^(1/T) / (0.9^(1/T) + 0.1^(1/T)).
  const double a = std::pow(0.9, 0.01), b = std::pow(0.1, 0.01);
  EXPECT_NEAR(s.probs(0, 0), a / (a + b), 1e-12);
  EXPECT_NEAR(s.probs(0, 0), 0.5, 1e-2);
  EXPECT_NEAR(s.probs(0, 1), 0.5, 1e-2);
}

TEST(Soften, BalancedRowIsFixedPoint) {
  SoftTargets t{nn::Matrix(1, 2, {0.5, 0.5}), LabelSet{0, 1}};
  for (double temp : {0.25, 2.0, 7.0}) {
    const auto s = soften(t, temp);
    EXPECT_NEAR(s.probs(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(s.probs(0, 1), 0.5, 1e-15);
  }
  EXPECT_THROW((void)soften(t, 0.0), InvalidInputError);
}

class Student : public ::testing::Test {
 protected:
  static constexpr std::size_t kLabels = 4;
  data::LabeledSet pub = data::synth_generate(kLabels, 60, 30, 5, 0);

  // One-hot global table built from the public truth.
  nn::Matrix one_hot_table() const {
    nn::Matrix g(pub.size(), kLabels);
    for (std::size_t r = 0; r < pub.size(); ++r) g(r, static_cast<std::size_t>(pub.y[r])) = 1.0;
    return g;
  }
};

TEST_F(Student, LearnsItsLabelSubsetFromOneHotTargets) {
  const LabelSet labels{1, 3};
  const auto restriction = restrict_and_normalize(one_hot_table(), labels);
  EXPECT_EQ(restriction.kept(), 120u);
  const auto result = distill_student(pub.x, restriction, fast_config(), 9);
  ASSERT_TRUE(result.has_value());
  EXPECT_EQ(result->network.output_dim(), 2u);
  const auto scores = nn::forward(result->network, pub.x);
  std::size_t ok = 0, total = 0;
  for (std::size_t r = 0; r < pub.size(); ++r) {
    if (!labels.contains(pub.y[r])) continue;
    ++total;
    ok += labels[nn::argmax(scores.row(r))] == pub.y[r] ? 1 : 0;
  }
  EXPECT_GE(static_cast<double>(ok) / static_cast<double>(total), 0.9);
}

TEST_F(Student, IsDeterministic) {
  const auto restriction = restrict_and_normalize(one_hot_table(), LabelSet{0, 2});
  const auto a = distill_student(pub.x, restriction, fast_config(), 3);
  const auto b = distill_student(pub.x, restriction, fast_config(), 3);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->network, b->network);
}

TEST_F(Student, MaskedRowsHaveNoInfluence) {
  const auto restriction = restrict_and_normalize(one_hot_table(), LabelSet{0, 2});
  nn::Matrix x = pub.x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (restriction.keep[r]) continue;
    for (double& v : x.row(r)) v = 0.0;
  }
  const auto a = distill_student(pub.x, restriction, fast_config(), 3);
  const auto b = distill_student(x, restriction, fast_config(), 3);
  EXPECT_EQ(a->network, b->network);
}

TEST_F(Student, ColdTableReturnsNothing) {
  const auto restriction = restrict_and_normalize(nn::Matrix(pub.size(), kLabels), LabelSet{0});
  EXPECT_FALSE(distill_student(pub.x, restriction, fast_config(), 1).has_value());
}

TEST(DistillConfigTest, Validation) {
  DistillConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.temperature = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidInputError);
  cfg.temperature = 1.0;
  cfg.student.hidden.clear();
  EXPECT_THROW(cfg.validate(), InvalidInputError);
}

class LocalUpdate : public ::testing::Test {
 protected:
  data::SyntheticGenerator gen{4, data::SyntheticParams{30, 4.0, 0.5, 0.0, {}, 0.0}, 11};
  LabelSet labels{0, 1};

  data::PrivateShard shard(std::uint64_t stream) const {
    auto set = gen.sample(labels, 100, stream, 0.0);
    return {1, 1, std::move(set.x), std::move(set.y), labels, {}};
  }
};

TEST_F(LocalUpdate, SameDistributionKeepsValidationLoss) {
  const auto pub = gen.sample(LabelSet{0, 1, 2, 3}, 100, 99, 0.0);
  nn::Matrix g(pub.size(), 4);
  for (std::size_t r = 0; r < pub.size(); ++r) g(r, static_cast<std::size_t>(pub.y[r])) = 1.0;
  const auto student = distill_student(pub.x, restrict_and_normalize(g, labels), fast_config(), 4);
  ASSERT_TRUE(student);
  const auto updated = local_update(student->network, shard(1), fast_config().train);
  EXPECT_LE(updated.validation_loss, 1.1 * updated.initial_validation_loss);
}

TEST_F(LocalUpdate, ColdStartTrainsOwnModelAndIsDeterministic) {
  const nn::Network own(nn::make_classifier(nn::Architecture::cnn({4, 8}), labels, 30, 3), 6);
  const auto a = local_update(own, shard(2), fast_config().train);
  const auto b = local_update(own, shard(2), fast_config().train);
  EXPECT_EQ(a.network, b.network);
  EXPECT_LT(a.validation_loss, a.initial_validation_loss);
  EXPECT_EQ(a.network.spec().layers.front().kind, nn::LayerKind::Conv1D);
}

TEST_F(LocalUpdate, RejectsForeignLabels) {
  const nn::Network own(nn::make_classifier(nn::Architecture::ann({4}), LabelSet{0, 2}, 30, 3), 6);
  EXPECT_THROW((void)local_update(own, shard(3), fast_config().train), InvalidInputError);
}

TEST(OneHot, FollowsColumnOrder) {
  const std::vector<LabelId> y = {3, 1};
  const auto m = one_hot(y, LabelSet{3, 1});
  EXPECT_EQ(m, nn::Matrix(2, 2, {1, 0, 0, 1}));
  EXPECT_THROW((void)one_hot(std::vector<LabelId>{2}, LabelSet{3, 1}), InvalidInputError);
}

}  // namespace
}  // namespace fedlabel::distill
