// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"

namespace fedlabel::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = FEDLABEL_FIXTURE_DIR;

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "fedlabel");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fedlabel_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

TEST(Cli, MissingConfigIsUsageError) {
  const auto r = invoke({"simulate", "--out", "x"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--config"), std::string::npos);
  EXPECT_NE(r.err.find("preprocess"), std::string::npos);  // full help follows the error
}

TEST(Cli, UnknownFlagAndNoSubcommandAreUsageErrors) {
  EXPECT_EQ(invoke({"simulate", "--config", "a", "--out", "b", "--bogus"}).code, 1);
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"simulate", "--config", "a", "--out", "b", "--threads", "0"}).code, 1);
}

TEST(Cli, HelpExitsZero) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
  const auto sub = invoke({"simulate", "--help"});
  EXPECT_EQ(sub.code, 0);
  EXPECT_NE(sub.out.find("--seed"), std::string::npos);
}

TEST(Cli, RuntimeFailureIsExitTwo) {
  const auto r = invoke({"simulate", "--config", (kFixtures / "nope.cfg").string(), "--out",
                         scratch("missing").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope.cfg"), std::string::npos);
}

TEST(Cli, PreprocessFourRowFixtureYieldsNoWindows) {
  const fs::path out = scratch("pre4");
  const auto r = invoke({"preprocess", "--input", (kFixtures / "four_rows.csv").string(),
                         "--schema", (kFixtures / "hhar_like.schema").string(), "--out",
                         out.string()});
  // The mapped schema does not fit the plain fixture.
  EXPECT_EQ(r.code, 2);

  std::ofstream(out.string() + ".schema") << "csv.label = label\n";
  const auto ok = invoke({"preprocess", "--input", (kFixtures / "four_rows.csv").string(),
                          "--schema", out.string() + ".schema", "--out", out.string()});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(line_count(out / "features.csv"), 1u);  // header only: 0.04 s < one window
}

TEST(Cli, PreprocessMappedFixture) {
  const fs::path out = scratch("pre_hhar");
  const auto r = invoke({"preprocess", "--input", (kFixtures / "hhar_like.csv").string(),
                         "--schema", (kFixtures / "hhar_like.schema").string(), "--out",
                         out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(out / "features.csv"), 1u + 7u);
  std::ifstream in(out / "features.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.substr(0, 12), "label,f0,f1,");
  EXPECT_NE(header.find(",f149"), std::string::npos);
}

TEST(Cli, SimulateThenReport) {
  const fs::path cfg = scratch("sim").string() + ".cfg";
  std::ofstream(cfg) << "experiment.labels = A, B, C\n"
                        "experiment.iterations = 2\n"
                        "experiment.per_label_per_iteration = 20\n"
                        "experiment.public_per_label = 10\n"
                        "synthetic.dim = 12\n"
                        "user.1.labels = A, B\nuser.1.model = ann(4)\n"
                        "user.2.labels = B, C\nuser.2.model = cnn(2)\n";
  const fs::path out = scratch("sim");
  const auto r = invoke({"simulate", "--config", cfg.string(), "--seed", "0", "--out",
                         out.string(), "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"metrics.csv", "summary.csv", "user_1.svg", "user_2.svg",
                        "global_average.svg", "beta.csv", "timings.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_EQ(line_count(out / "metrics.csv"), 1u + 4u);
  EXPECT_NE(r.out.find("Average"), std::string::npos);

  const fs::path rep = scratch("rep");
  const auto again = invoke({"report", "--metrics", out.string(), "--out", rep.string()});
  ASSERT_EQ(again.code, 0) << again.err;
  std::ifstream a(out / "summary.csv"), b(rep / "summary.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
}

}  // namespace
}  // namespace fedlabel::cli
