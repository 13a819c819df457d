// Copyright 2026 The fedlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "fedlabel/data/signal.hpp"
#include "fedlabel/federation/protocol.hpp"
#include "fedlabel/nn/network.hpp"

namespace {

using namespace fedlabel;

nn::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  nn::Matrix m(rows, cols);
  for (double& v : m.values()) v = unit(rng);
  return m;
}

nn::Architecture arch_for(std::int64_t which) {
  switch (which) {
    case 0: return nn::Architecture::ann({16, 16, 32});
    case 1: return nn::Architecture::cnn({16, 32});
    default: return nn::Architecture::cnn({8, 16, 16, 32});
  }
}

void BM_Forward(benchmark::State& state) {
  const nn::Network net(nn::make_classifier(arch_for(state.range(0)), LabelSet{0, 1}, 150, 3), 1);
  const nn::Matrix x = random_matrix(800, 150, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(net, x));
  state.SetItemsProcessed(state.iterations() * 800);
  state.SetLabel(arch_for(state.range(0)).describe());
}
BENCHMARK(BM_Forward)->DenseRange(0, 2);

void BM_TrainStep(benchmark::State& state) {
  nn::Network net(nn::make_classifier(arch_for(state.range(0)), LabelSet{0, 1}, 150, 3), 1);
  const nn::Matrix x = random_matrix(32, 150, 2);
  nn::Matrix t(32, 2);
  for (std::size_t r = 0; r < 32; ++r) t(r, r % 2) = 1.0;
  for (auto _ : state) nn::adam_step(net, nn::backward(net, x, t), 1e-3);
  state.SetItemsProcessed(state.iterations() * 32);
  state.SetLabel(arch_for(state.range(0)).describe());
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 2);

void BM_Decimate(benchmark::State& state) {
  const auto rate = static_cast<double>(state.range(0));
  std::vector<double> s(static_cast<std::size_t>(2 * rate));
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = std::sin(2.0 * std::numbers::pi * 3.0 * static_cast<double>(i) / rate);
  }
  for (auto _ : state) benchmark::DoNotOptimize(data::decimate(s, rate));
}
BENCHMARK(BM_Decimate)->Arg(100)->Arg(200);

void BM_DwtApprox(benchmark::State& state) {
  const nn::Matrix s = random_matrix(1, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(data::dwt_approx(s.values()));
}
BENCHMARK(BM_DwtApprox)->Arg(100)->Arg(1 << 12);

void BM_GlobalUpdate(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::vector<std::pair<UserId, LabelSet>> users = {
      {1, LabelSet{0, 1}}, {2, LabelSet{1, 2}}, {3, LabelSet{2, 3}}};
  const federation::OverlapMap overlap(users, 4);
  std::vector<federation::ClientScoreMatrix> subs;
  std::map<federation::UserLabel, double> acc;
  for (const auto& [u, labels] : users) {
    subs.push_back({u, 1, labels, random_matrix(rows, 2, static_cast<std::uint64_t>(u))});
    for (LabelId l : labels) acc[{u, l}] = 0.8;
  }
  const auto beta = federation::compute_beta(overlap, acc);
  for (auto _ : state) benchmark::DoNotOptimize(federation::global_update(subs, beta, overlap, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GlobalUpdate)->Arg(800)->Arg(8000);

}  // namespace

BENCHMARK_MAIN();
