// Copyright 2026 The robustec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "robustec/estimators.h"
#include "robustec/rng.h"
#include "robustec/sim.h"

namespace {

robustec::TrialDataset scenario_a(std::size_t n1, std::size_t n0, std::size_t d) {
  auto cfg = robustec::sim::default_config(robustec::sim::Scenario::kA);
  cfg.n1 = n1;
  cfg.n0 = n0;
  cfg.dim = d;
  return robustec::sim::generate_scenario(cfg, 0).data;
}

// Args: n0, d.
void BM_CombinedTau(benchmark::State& state) {
  const auto ds = scenario_a(100, static_cast<std::size_t>(state.range(0)),
                             static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(robustec::combined_tau(ds).tau);
}
BENCHMARK(BM_CombinedTau)
    ->Args({500, 2})
    ->Args({1000, 2})
    ->Args({2000, 2})
    ->Args({1000, 4})
    ->Args({1000, 8})
    ->Unit(benchmark::kMillisecond);

void BM_TrialOnlyTau(benchmark::State& state) {
  const auto ds = scenario_a(static_cast<std::size_t>(state.range(0)), 0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(robustec::trial_only_tau(ds).tau);
}
BENCHMARK(BM_TrialOnlyTau)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_PhiloxNormal(benchmark::State& state) {
  robustec::Philox rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
}
BENCHMARK(BM_PhiloxNormal);

void BM_GenerateD1(benchmark::State& state) {
  auto cfg = robustec::sim::default_config(robustec::sim::Scenario::kD1);
  std::uint64_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(robustec::sim::generate_scenario(cfg, rep++).tau_true);
}
BENCHMARK(BM_GenerateD1);

}  // namespace

BENCHMARK_MAIN();
