// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fedlabel/data/dataset.hpp"
#include "fedlabel/distill/distill.hpp"
#include "fedlabel/nn/train.hpp"

namespace fedlabel::data {
namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

TEST(Synthetic, SameSeedWithoutDriftIsIdentical) {
  const auto a = synth_generate(4, 20, 150, 9, 0);
  const auto b = synth_generate(4, 20, 150, 9, 0);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.x, synth_generate(4, 20, 150, 10, 0).x);
}

TEST(Synthetic, DriftChangesSuccessiveIterations) {
  const auto a = synth_generate(4, 20, 150, 9, 1);
  const auto b = synth_generate(4, 20, 150, 9, 2);
  EXPECT_NE(a.x, b.x);
  EXPECT_EQ(a.x, synth_generate(4, 20, 150, 9, 1).x);
}

TEST(Synthetic, PublicLayoutOfTwoThousandPerLabel) {
  const auto set = synth_generate(4, 2000, 150, 0, 0);
  EXPECT_EQ(set.size(), 8000u);
  const PublicDataset pub(set, 4);
  for (const auto& rows : pub.by_label) EXPECT_EQ(rows.size(), 2000u);
}

TEST(Synthetic, EquidistantMeansWithoutFamilies) {
  SyntheticParams p;
  p.separation = 4.0;
  const SyntheticGenerator gen(4, p, 3);
  for (LabelId a = 0; a < 4; ++a) {
    for (LabelId b = a + 1; b < 4; ++b) EXPECT_NEAR(distance(gen.mean(a), gen.mean(b)), 4.0, 1e-9);
  }
}

TEST(Synthetic, FamilyGeometry) {
  SyntheticParams p;
  p.separation = 2.5;
  p.group = {0, 1, 0, 1};
  p.group_separation = 3.5;
  const SyntheticGenerator gen(4, p, 3);
  for (LabelId a = 0; a < 4; ++a) {
    for (LabelId b = a + 1; b < 4; ++b) {
      const double expected = p.group[static_cast<std::size_t>(a)] ==
                                      p.group[static_cast<std::size_t>(b)]
                                  ? 2.5
                                  : 3.5;
      EXPECT_NEAR(distance(gen.mean(a), gen.mean(b)), expected, 1e-9) << a << "," << b;
    }
  }
  p.group_separation = 2.0;
  EXPECT_THROW(SyntheticGenerator(4, p, 3), InvalidInputError);
}

TEST(Synthetic, RejectsBadParameters) {
  SyntheticParams p;
  p.dim = 1;
  EXPECT_THROW(SyntheticGenerator(1, p, 0), InvalidInputError);
  p.dim = 3;
  EXPECT_THROW(SyntheticGenerator(4, p, 0), InvalidInputError);
  p.dim = 10;
  p.anisotropy = 1.0;
  EXPECT_THROW(SyntheticGenerator(4, p, 0), InvalidInputError);
}

TEST(Synthetic, SixSigmaClustersAreLearnable) {
  SyntheticParams p;
  p.separation = 6.0;
  const auto set = synth_generate(4, 250, 150, 21, 0, p);
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(5);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t cut = set.size() * 4 / 5;
  const auto train_set = set.subset(std::span(order).first(cut));
  const auto test_set = set.subset(std::span(order).subspan(cut));

  const LabelSet labels{0, 1, 2, 3};
  nn::Network net(nn::make_classifier(nn::Architecture::ann({32}), labels, 150, 3), 1);
  const auto result = nn::train(net, train_set.x, distill::one_hot(train_set.y, labels),
                                nn::TrainConfig(5, 32, 1e-3, 2, 0.1, 2));
  const auto scores = nn::forward(result.network, test_set.x);
  std::size_t ok = 0;
  for (std::size_t r = 0; r < test_set.size(); ++r) {
    ok += static_cast<LabelId>(nn::argmax(scores.row(r))) == test_set.y[r] ? 1 : 0;
  }
  EXPECT_GE(static_cast<double>(ok) / static_cast<double>(test_set.size()), 0.95);
}

class Partition : public ::testing::Test {
 protected:
  // Labels A..D = 0..3 with the overlapping chain {A,B},{B,C},{C,D}.
  std::vector<LabelSet> users{{0, 1}, {1, 2}, {2, 3}};
  LabeledSet dataset = synth_generate(4, 60, 10, 4, 0);
};

TEST_F(Partition, ShardSizesAndLabels) {
  const auto grid = partition_noniid(dataset, users, 1, 10, 7);
  ASSERT_EQ(grid.size(), 3u);
  for (std::size_t m = 0; m < 3; ++m) {
    ASSERT_EQ(grid[m].size(), 1u);
    const auto& shard = grid[m][0];
    EXPECT_EQ(shard.size(), 20u);
    EXPECT_EQ(shard.owner, static_cast<UserId>(m + 1));
    EXPECT_EQ(shard.iteration, 1u);
    for (LabelId l : shard.labels) EXPECT_TRUE(users[m].contains(l));
    for (LabelId l : users[m]) {
      EXPECT_EQ(std::count(shard.labels.begin(), shard.labels.end(), l), 10);
    }
  }
}

TEST_F(Partition, RowsAreNeverAssignedTwice) {
  const auto grid = partition_noniid(dataset, users, 3, 10, 7);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& row : grid) {
    for (const auto& shard : row) {
      total += shard.source_rows.size();
      seen.insert(shard.source_rows.begin(), shard.source_rows.end());
      for (std::size_t i = 0; i < shard.size(); ++i) {
        EXPECT_EQ(dataset.y[shard.source_rows[i]], shard.labels[i]);
      }
    }
  }
  EXPECT_EQ(seen.size(), total);
}

TEST_F(Partition, IsDeterministicInSeed) {
  const auto a = partition_noniid(dataset, users, 2, 10, 7);
  const auto b = partition_noniid(dataset, users, 2, 10, 7);
  const auto c = partition_noniid(dataset, users, 2, 10, 8);
  EXPECT_EQ(a[1][1].source_rows, b[1][1].source_rows);
  EXPECT_NE(a[1][1].source_rows, c[1][1].source_rows);
}

TEST_F(Partition, StarvedLabelIsNamed) {
  try {
    (void)partition_noniid(dataset, users, 15, 2000, 7);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("label 0"), std::string::npos);
  }
  // 40 rows per shard: B is owned twice and needs 80 of its 60.
  try {
    (void)partition_noniid(dataset, users, 1, 40, 7);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("label 1"), std::string::npos);
  }
}

TEST(PublicDatasetTest, EveryLabelNeedsARow) {
  LabeledSet set{nn::Matrix(2, 3), {0, 2}};
  EXPECT_THROW(PublicDataset(set, 3), InvalidInputError);
  set.y = {0, 1};
  const PublicDataset pub(set, 2);
  EXPECT_EQ(pub.by_label[1], std::vector<std::size_t>{1});
}

}  // namespace
}  // namespace fedlabel::data
