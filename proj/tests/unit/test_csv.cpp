// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>

#include <gtest/gtest.h>

#include "fedlabel/data/csv.hpp"
#include "fedlabel/data/dataset.hpp"
#include "fedlabel/harness/config.hpp"

namespace fedlabel::data {
namespace {

const std::filesystem::path kFixtures = FEDLABEL_FIXTURE_DIR;

TEST(IngestCsv, FourRowFixture) {
  const auto r = ingest_csv(kFixtures / "four_rows.csv");
  ASSERT_EQ(r.recordings.size(), 1u);
  const auto& rec = r.recordings[0];
  EXPECT_EQ(rec.size(), 4u);
  EXPECT_DOUBLE_EQ(rec.rate, 100.0);
  EXPECT_DOUBLE_EQ(rec.samples[1][2], 9.83);
  EXPECT_EQ(r.label_names, std::vector<std::string>{"Walk"});
  EXPECT_EQ(r.malformed_rows, 0u);
}

TEST(IngestCsv, MalformedRowIsSkippedAndCounted) {
  const auto r = ingest_csv(kFixtures / "one_malformed.csv");
  ASSERT_EQ(r.recordings.size(), 1u);
  EXPECT_EQ(r.recordings[0].size(), 3u);
  EXPECT_EQ(r.malformed_rows, 1u);
}

TEST(IngestCsv, MalformedRowFailsUnderStrictPolicy) {
  CsvSchema schema;
  schema.on_malformed = MalformedPolicy::Fail;
  EXPECT_THROW((void)ingest_csv(kFixtures / "one_malformed.csv", schema), SchemaError);
}

TEST(IngestCsv, EmptyFileHasNoHeader) {
  EXPECT_THROW((void)ingest_csv(kFixtures / "empty.csv"), SchemaError);
}

TEST(IngestCsv, MissingColumnIsNamed) {
  try {
    (void)ingest_csv(kFixtures / "missing_column.csv");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("'z'"), std::string::npos);
  }
}

TEST(IngestCsv, UnreadableFileIsIoError) {
  EXPECT_THROW((void)ingest_csv(kFixtures / "does_not_exist.csv"), IoError);
}

TEST(IngestCsv, MappedSchemaWithRateColumn) {
  const auto schema = harness::load_csv_schema(kFixtures / "hhar_like.schema");
  EXPECT_EQ(schema.delimiter, ';');
  const auto r = ingest_csv(kFixtures / "hhar_like.csv", schema);
  ASSERT_EQ(r.recordings.size(), 3u);
  EXPECT_EQ(r.label_names, (std::vector<std::string>{"sit", "walk", "stand"}));
  EXPECT_EQ(r.recordings[0].size(), 600u);
  EXPECT_DOUBLE_EQ(r.recordings[2].rate, 200.0);
  EXPECT_NEAR(r.recordings[1].timestamps[1] - r.recordings[1].timestamps[0], 0.01, 1e-9);

  const LabeledSet features = features_from_recordings(r.recordings);
  EXPECT_EQ(features.size(), 3u + 2u + 2u);
  EXPECT_EQ(features.x.cols(), 150u);
  EXPECT_EQ(features.y.front(), 0);
  EXPECT_EQ(features.y.back(), 2);
}

}  // namespace
}  // namespace fedlabel::data
