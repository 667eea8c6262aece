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

#include "robustec/sim.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <thread>

#include "robustec/error.h"
#include "robustec/rng.h"

namespace robustec::sim {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Covariate draw for a row of source s.
void draw_covariates(const ScenarioConfig& cfg, int s, Philox& rng, double* x) {
  const std::size_t d = cfg.dim;
  switch (cfg.scenario) {
    case Scenario::kA:
      for (std::size_t j = 0; j < d; ++j) x[j] = rng.normal();
      return;
    case Scenario::kD1: {
      const double mu = s == 1 ? 0.0 : 0.2;
      for (std::size_t j = 0; j < d; ++j) x[j] = mu + rng.normal();
      return;
    }
    case Scenario::kB:
    case Scenario::kD2: {
      // Equicorrelated: sqrt(1 - rho) z_j + sqrt(rho) z_0.
      const double rho = 1.0 / std::sqrt(static_cast<double>(d));
      const double mu = s == 1 ? -2.0 : -2.0 + cfg.beta;
      const double common = std::sqrt(rho) * rng.normal();
      const double own = std::sqrt(1.0 - rho);
      for (std::size_t j = 0; j < d; ++j) x[j] = mu + common + own * rng.normal();
      return;
    }
  }
}

double effect(const ScenarioConfig& cfg, const double* x) {
  switch (cfg.scenario) {
    case Scenario::kA: return 2.0 + 0.5 * x[0];
    case Scenario::kD1: return -4.0 * std::abs(x[2]) - 2.0 * x[4];
    case Scenario::kB:
    case Scenario::kD2: return 2.0;
  }
  return 0.0;
}

ReplicationRecord run_one(const TrialDataset& ds, double tau, const EstimatorSpec& spec) {
  ReplicationRecord rec;
  try {
    const EstimateReport r = estimate(ds, spec.method, spec.options);
    if (!std::isfinite(r.tau) || !std::isfinite(r.se)) {
      rec.error = "NonFinite";
      return rec;
    }
    rec.ok = true;
    rec.tau = r.tau;
    rec.se = r.se;
    rec.covered = r.ci_lo <= tau && tau <= r.ci_hi;
    rec.lambda = r.lambda;
  } catch (const Error& e) {
    rec.error = std::string(error_code_name(e.cause()));
  } catch (const std::exception&) {
    rec.error = "Exception";
  }
  return rec;
}

void aggregate(EstimatorMetrics& m, double tau) {
  m.replications = m.records.size();
  double sum = 0.0, sum_se = 0.0;
  std::size_t covered = 0;
  for (const auto& r : m.records) {
    if (!r.ok) {
      ++m.failures;
      ++m.failure_codes[r.error];
      continue;
    }
    ++m.successes;
    sum += r.tau;
    sum_se += r.se;
    covered += r.covered ? 1 : 0;
  }
  if (m.successes == 0) return;
  const double n = static_cast<double>(m.successes);
  m.mean_estimate = sum / n;
  m.bias = m.mean_estimate - tau;
  m.mean_abs_bias = std::abs(m.bias);
  m.mean_se = sum_se / n;
  m.coverage_rate = static_cast<double>(covered) / n;
  if (m.successes > 1) {
    double ss = 0.0;
    for (const auto& r : m.records) {
      if (r.ok) ss += (r.tau - m.mean_estimate) * (r.tau - m.mean_estimate);
    }
    m.empirical_variance = ss / (n - 1.0);
    m.mc_se = std::sqrt(m.empirical_variance / n);
  }
}

}  // namespace

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kA: return "A";
    case Scenario::kB: return "B";
    case Scenario::kD1: return "D1";
    case Scenario::kD2: return "D2";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::kA, Scenario::kB, Scenario::kD1, Scenario::kD2}) {
    if (scenario_name(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scenario '" + std::string(name) + "'");
}

bool is_artifact_defined(Scenario s) { return s == Scenario::kA || s == Scenario::kB; }

ScenarioConfig default_config(Scenario s) {
  ScenarioConfig c;
  c.scenario = s;
  switch (s) {
    case Scenario::kA:
      c.dim = 2;
      c.noise_sd = 1.0;
      break;
    case Scenario::kB:
      c.dim = 10;
      c.noise_sd = 0.5;
      c.beta = 0.5;
      c.source_gap = 0.3;
      break;
    case Scenario::kD1:
      c.dim = 5;
      c.noise_sd = std::sqrt(10.0);
      break;
    case Scenario::kD2:
      c.dim = 10;
      c.noise_sd = 0.5;
      break;
  }
  return c;
}

void validate_config(const ScenarioConfig& c) {
  if (c.n1 < 4) throw Error(ErrorCode::kInvalidArgument, "n1 must be at least 4");
  if (!(c.p1 > 0.0 && c.p1 < 1.0)) throw Error(ErrorCode::kInvalidArgument, "p1 must lie in (0, 1)");
  if (!(c.noise_sd > 0.0) || !std::isfinite(c.noise_sd)) {
    throw Error(ErrorCode::kInvalidArgument, "noise sd must be positive");
  }
  if (!std::isfinite(c.beta) || !std::isfinite(c.source_gap)) {
    throw Error(ErrorCode::kInvalidArgument, "beta and source gap must be finite");
  }
  switch (c.scenario) {
    case Scenario::kA:
      if (c.dim < 1) throw Error(ErrorCode::kInvalidArgument, "scenario A needs d >= 1");
      break;
    case Scenario::kD1:
      if (c.dim != 5) throw Error(ErrorCode::kInvalidArgument, "scenario D1 has d = 5");
      break;
    case Scenario::kB:
    case Scenario::kD2:
      if (c.dim < 2) throw Error(ErrorCode::kInvalidArgument, "scenario needs d >= 2");
      break;
  }
}

double conditional_mean(const ScenarioConfig& cfg, const double* x, int s, int a) {
  double b = 0.0;
  switch (cfg.scenario) {
    case Scenario::kA:
      b = 1.0;
      for (std::size_t j = 0; j < cfg.dim; ++j) b += x[j] / static_cast<double>(j + 1);
      break;
    case Scenario::kD1: {
      const double q = 2.0 * x[1] + 2.0;
      b = 102.0 + cfg.beta * s + 5.0 * x[0] - q * q + 3.0 * x[3] * x[3] * x[3] -
          25.0 * std::sin(5.0 * x[4]);
      break;
    }
    case Scenario::kB:
    case Scenario::kD2:
      for (std::size_t j = 0; j < cfg.dim; ++j) b += x[j] * x[j];
      b /= static_cast<double>(cfg.dim);
      break;
  }
  if (s == 0) b += cfg.source_gap;
  return b + (a == 1 ? effect(cfg, x) : 0.0);
}

GeneratedData generate_scenario(const ScenarioConfig& cfg, std::uint64_t replication) {
  validate_config(cfg);
  Philox rng(cfg.seed, replication);
  const std::size_t n = cfg.n1 + cfg.n0;
  const std::size_t d = cfg.dim;
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::uint8_t> s(n), a(n);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const int si = i < cfg.n1 ? 1 : 0;
    double* xi = x.data() + i * d;
    draw_covariates(cfg, si, rng, xi);
    const int ai = si == 1 && rng.bernoulli(cfg.p1) ? 1 : 0;
    s[i] = static_cast<std::uint8_t>(si);
    a[i] = static_cast<std::uint8_t>(ai);
    y[static_cast<Eigen::Index>(i)] = conditional_mean(cfg, xi, si, ai) + cfg.noise_sd * rng.normal();
  }
  return {TrialDataset(std::move(x), std::move(s), std::move(a), std::move(y), {}, cfg.p1),
          tau_true(cfg)};
}

double tau_true(const ScenarioConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::kA:
    case Scenario::kB:
    case Scenario::kD2: return 2.0;
    case Scenario::kD1: return -4.0 * std::sqrt(2.0 / std::numbers::pi);
  }
  return 0.0;
}

OracleEstimate tau_true_monte_carlo(const ScenarioConfig& cfg, std::size_t draws,
                                    std::uint64_t seed) {
  validate_config(cfg);
  if (draws < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two draws");
  Philox rng(seed);
  std::vector<double> x(cfg.dim);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    draw_covariates(cfg, 1, rng, x.data());
    const double v = effect(cfg, x.data());
    const double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(draws - 1);
  return {mean, std::sqrt(var / static_cast<double>(draws))};
}

const EstimatorMetrics& MonteCarloMetrics::find(std::string_view label) const {
  for (const auto& e : estimators) {
    if (e.label == label) return e;
  }
  throw Error(ErrorCode::kInvalidArgument, "no estimator labelled '" + std::string(label) + "'");
}

MonteCarloMetrics run_monte_carlo(const ScenarioConfig& cfg,
                                  const std::vector<EstimatorSpec>& estimators, std::size_t R,
                                  const RunOptions& options) {
  validate_config(cfg);
  if (R < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one replication");
  if (estimators.empty()) throw Error(ErrorCode::kInvalidArgument, "no estimators selected");

  unsigned workers = options.workers == 0 ? std::thread::hardware_concurrency() : options.workers;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(R)));

  MonteCarloMetrics out;
  out.config = cfg;
  out.replications = R;
  out.tau_true = tau_true(cfg);
  out.workers = workers;
  out.estimators.resize(estimators.size());
  std::vector<std::vector<double>> seconds(estimators.size(), std::vector<double>(R, 0.0));
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    out.estimators[e].label = estimators[e].label;
    out.estimators[e].method = estimators[e].method;
    out.estimators[e].records.resize(R);
  }

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t r = next++; r < R; r = next++) {
      const GeneratedData g = generate_scenario(cfg, r);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        const auto t0 = Clock::now();
        out.estimators[e].records[r] = run_one(g.data, g.tau_true, estimators[e]);
        seconds[e][r] = std::chrono::duration<double>(Clock::now() - t0).count();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  out.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    aggregate(out.estimators[e], out.tau_true);
    for (double s : seconds[e]) out.estimators[e].seconds += s;
  }
  return out;
}

std::string metrics_csv(const MonteCarloMetrics& m, const std::vector<std::string>& preamble) {
  std::string out;
  for (const auto& line : preamble) out += "# " + line + "\n";
  out +=
      "estimator,method,replications,successes,failures,tau_true,mean_estimate,bias,"
      "mean_abs_bias,empirical_variance,mc_se,coverage_rate,mean_se\n";
  for (const auto& e : m.estimators) {
    out += e.label + "," + std::string(method_name(e.method)) + "," +
           std::to_string(e.replications) + "," + std::to_string(e.successes) + "," +
           std::to_string(e.failures) + "," + format_double(m.tau_true) + "," +
           format_double(e.mean_estimate) + "," + format_double(e.bias) + "," +
           format_double(e.mean_abs_bias) + "," + format_double(e.empirical_variance) + "," +
           format_double(e.mc_se) + "," + format_double(e.coverage_rate) + "," +
           format_double(e.mean_se) + "\n";
  }
  return out;
}

std::string export_lambda_distribution(const MonteCarloMetrics& m,
                                       const std::vector<std::string>& preamble) {
  const EstimatorMetrics* combined = nullptr;
  for (const auto& e : m.estimators) {
    if (e.method == Method::kCombined) {
      combined = &e;
      break;
    }
  }
  if (combined == nullptr) {
    throw Error(ErrorCode::kNoLambdaData, "no combined estimator in this run");
  }
  std::string out;
  for (const auto& line : preamble) out += "# " + line + "\n";
  out += "replication,lambda\n";
  std::size_t lines = 0;
  for (std::size_t r = 0; r < combined->records.size(); ++r) {
    const auto& rec = combined->records[r];
    if (!rec.ok || !rec.lambda) continue;
    out += std::to_string(r) + "," + format_double(*rec.lambda) + "\n";
    ++lines;
  }
  if (lines == 0) throw Error(ErrorCode::kNoLambdaData, "every combined replication failed");
  return out;
}

}  // namespace robustec::sim
