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

// Data-generating processes and the Monte Carlo harness.
//
// Every scenario draws n1 trial rows (S=1, A ~ Bernoulli(p1)) followed by n0
// external rows (S=0, A=0), with Y = b(X, S) + A m(X) + eps:
//   A   d=2, X ~ N(0, I) in both sources, b = 1 + X1 + 0.5 X2,
//       m = 2 + 0.5 X1, sd 1. For d != 2 the linear part extends as
//       sum_j X_j / j.
//   B   D2 with beta = 0.5 and 0.3 added to every external outcome.
//   D1  d=5, X ~ N(mu_S, I), mu_1 = 0, mu_0 = 0.2,
//       b = 102 + beta S + 5 X1 - (2 X2 + 2)^2 + 3 X4^3 - 25 sin(5 X5),
//       m = -4 |X3| - 2 X5, sd sqrt(10).
//   D2  d=10, X ~ N(mu_S, Sigma), Sigma_jj = 1, Sigma_jk = 1/sqrt(d),
//       mu_1 = -2, mu_0 = -2 + beta, b = X'X / d, m = 2, sd 1/2.
// A and B are artifact-defined scenarios; outputs label them as such.

#ifndef ROBUSTEC_SIM_H_
#define ROBUSTEC_SIM_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robustec/data.h"
#include "robustec/estimators.h"

namespace robustec::sim {

enum class Scenario { kA, kB, kD1, kD2 };

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);
bool is_artifact_defined(Scenario s);

struct ScenarioConfig {
  Scenario scenario = Scenario::kA;
  std::size_t n1 = 50;
  std::size_t n0 = 200;
  double beta = 0.0;
  std::uint64_t seed = 1;
  double p1 = 0.5;
  std::size_t dim = 2;
  double noise_sd = 1.0;
  // Added to every external outcome.
  double source_gap = 0.0;
};

// Scenario defaults for dim, noise_sd, beta and source_gap.
ScenarioConfig default_config(Scenario s);

// Throws kInvalidArgument unless n1 >= 4, 0 < p1 < 1, noise_sd > 0 and the
// dimension is supported (D1 requires d = 5, D2 d >= 2).
void validate_config(const ScenarioConfig& cfg);

// E[Y | X = x, S = s, A = a].
double conditional_mean(const ScenarioConfig& cfg, const double* x, int s, int a);

struct GeneratedData {
  TrialDataset data;
  double tau_true;
};

// Deterministic in (cfg, replication); the replication selects a Philox
// substream of cfg.seed.
GeneratedData generate_scenario(const ScenarioConfig& cfg, std::uint64_t replication);

// Closed form of E[m(X) | S=1]; D1 gives -4 sqrt(2/pi).
double tau_true(const ScenarioConfig& cfg);

// E[m(X) | S=1] from `draws` trial covariate draws.
struct OracleEstimate {
  double mean;
  double standard_error;
};
OracleEstimate tau_true_monte_carlo(const ScenarioConfig& cfg, std::size_t draws,
                                    std::uint64_t seed);

struct EstimatorSpec {
  std::string label;
  Method method = Method::kAipwTrial;
  EstimatorOptions options;
};

struct ReplicationRecord {
  bool ok = false;
  double tau = 0.0;
  double se = 0.0;
  bool covered = false;
  std::optional<double> lambda;
  std::string error;  // error code name when !ok
};

struct EstimatorMetrics {
  std::string label;
  Method method = Method::kAipwTrial;
  std::size_t replications = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double mean_abs_bias = 0.0;      // |mean estimate - tau_true|
  double empirical_variance = 0.0;  // n - 1 denominator
  double mc_se = 0.0;              // sqrt(empirical_variance / successes)
  double coverage_rate = 0.0;
  double mean_se = 0.0;
  double seconds = 0.0;  // summed wall-clock over replications
  std::map<std::string, std::size_t> failure_codes;
  std::vector<ReplicationRecord> records;  // by replication index
};

struct MonteCarloMetrics {
  ScenarioConfig config;
  std::size_t replications = 0;
  double tau_true = 0.0;
  unsigned workers = 1;
  double wall_seconds = 0.0;
  std::vector<EstimatorMetrics> estimators;

  const EstimatorMetrics& find(std::string_view label) const;
};

struct RunOptions {
  unsigned workers = 1;  // 0 selects the hardware concurrency
};

// Estimator failures are recorded per replication and never abort the run.
// Results other than timings do not depend on the worker count.
MonteCarloMetrics run_monte_carlo(const ScenarioConfig& cfg,
                                  const std::vector<EstimatorSpec>& estimators, std::size_t R,
                                  const RunOptions& options = {});

// One line per estimator; `preamble` lines are written first as "# " comments.
// Timing fields are excluded so the text is reproducible.
std::string metrics_csv(const MonteCarloMetrics& metrics,
                        const std::vector<std::string>& preamble = {});

// "replication,lambda" for the first combined estimator; failed replications
// are skipped. Throws kNoLambdaData without a combined estimator or when every
// replication failed.
std::string export_lambda_distribution(const MonteCarloMetrics& metrics,
                                       const std::vector<std::string>& preamble = {});

}  // namespace robustec::sim

#endif  // ROBUSTEC_SIM_H_
