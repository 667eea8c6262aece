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

#include "robustec/estimators.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include "robustec/error.h"
#include "robustec/stacks.h"

namespace robustec {
namespace {

stacks::StackOptions stack_options(const EstimatorOptions& o) {
  stacks::StackOptions s;
  s.features = o.features;
  s.unweighted_objective = o.unweighted_objective;
  s.estimate_propensity = o.estimate_propensity;
  s.borrow_treated_arm = o.borrow_treated_arm;
  s.pooling_ratio = o.pooling_ratio;
  s.pooling_trial_outcome_model = o.pooling_trial_outcome_model;
  return s;
}

void require_arms(const TrialDataset& ds) {
  for (int a : {0, 1}) {
    if (ds.count(1, a) == 0) {
      throw Error(ErrorCode::kMissingArm,
                  std::string("trial arm A=") + std::to_string(a) + " has no rows");
    }
  }
}

// Each regression arm needs more rows than features.
void require_arm_sizes(const TrialDataset& ds, FeatureMap map) {
  require_arms(ds);
  const std::size_t p = feature_count(ds.dim(), map);
  for (int a : {0, 1}) {
    if (ds.count(1, a) < p + 1) {
      throw Error(ErrorCode::kInsufficientData,
                  "trial arm A=" + std::to_string(a) + " has " + std::to_string(ds.count(1, a)) +
                      " rows; at least " + std::to_string(p + 1) + " are required");
    }
  }
}

void fill_interval(EstimateReport& r, double confidence) {
  const double z = normal_critical_value(confidence);
  r.ci_lo = r.tau - z * r.se;
  r.ci_hi = r.tau + z * r.se;
}

EstimateReport report_from(Method method, const TrialDataset& ds, const mest::SandwichResult& fit,
                           std::string_view tau, std::string_view psi1, std::string_view psi0,
                           const EstimatorOptions& o) {
  EstimateReport r;
  r.method = method;
  r.tau = fit.estimate(tau);
  r.se = fit.standard_error(tau);
  r.psi1 = fit.estimate(psi1);
  r.psi0 = fit.estimate(psi0);
  r.diagnostics["n"] = static_cast<double>(ds.size());
  r.diagnostics["n_trial"] = static_cast<double>(ds.n_trial());
  r.diagnostics["n_external"] = static_cast<double>(ds.n_external());
  r.diagnostics["residual_norm"] = fit.residual_norm;
  fill_interval(r, o.confidence);
  return r;
}

double residual_sum_of_squares(const DesignMatrix& design, const Eigen::VectorXd& y) {
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(y.size());
  const LinearModel m = fit_linear_wls(design, y, w);
  return (y - design.rows * m.coefficients).squaredNorm();
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kUnadjusted: return "unadjusted";
    case Method::kIpw: return "ipw";
    case Method::kOutcomeRegression: return "or";
    case Method::kAipwTrial: return "aipw_trial";
    case Method::kOptimized: return "optimized";
    case Method::kPooling: return "pooling";
    case Method::kTestThenPool: return "test_then_pool";
    case Method::kCombined: return "combined";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  if (name == "aipw") return Method::kAipwTrial;
  throw Error(ErrorCode::kInvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = {
      Method::kUnadjusted, Method::kIpw,     Method::kOutcomeRegression, Method::kAipwTrial,
      Method::kOptimized,  Method::kPooling, Method::kTestThenPool,      Method::kCombined};
  return methods;
}

double normal_critical_value(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence level must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
}

EstimateReport unadjusted_tau(const TrialDataset& ds, const EstimatorOptions& o) {
  require_arms(ds);
  const auto fit = mest::fit_stack(stacks::mean_difference_stack(), ds, o.solve);
  return report_from(Method::kUnadjusted, ds, fit, "tau", "mu1", "mu0", o);
}

double aipw_psi(const TrialDataset& ds, int a, const PlugIn& h, std::vector<std::string>* flags) {
  if (a != 0 && a != 1) throw Error(ErrorCode::kInvalidArgument, "treatment level must be 0 or 1");
  if (ds.n_trial() == 0) throw Error(ErrorCode::kEmptySubset, "no trial rows");
  if (ds.count(1, a) == 0 && flags != nullptr) flags->push_back("missing_arm");
  const double ea = ds.propensity(a);
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.source(i) != 1) continue;
    const double hi = h(ds.covariate_row(i));
    sum += ds.treatment(i) == a ? (ds.outcome(i) - hi) / ea + hi : hi;
  }
  return sum / static_cast<double>(ds.n_trial());
}

double aipw_psi(const TrialDataset& ds, int a, const LinearModel& h,
                std::vector<std::string>* flags) {
  if (static_cast<std::size_t>(h.coefficients.size()) != feature_count(ds.dim(), h.map)) {
    throw Error(ErrorCode::kDimensionMismatch, "plug-in model does not match the covariates");
  }
  const std::size_t d = ds.dim();
  return aipw_psi(
      ds, a, [&](const double* x) { return linear_predictor(h.coefficients, h.map, x, d); }, flags);
}

double ipw_psi(const TrialDataset& ds, int a, std::vector<std::string>* flags) {
  return aipw_psi(ds, a, [](const double*) { return 0.0; }, flags);
}

double or_psi(const TrialDataset& ds, int a, const LinearModel& g) {
  (void)a;
  if (ds.n_trial() == 0) throw Error(ErrorCode::kEmptySubset, "no trial rows");
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.source(i) == 1) {
      sum += linear_predictor(g.coefficients, g.map, ds.covariate_row(i), ds.dim());
    }
  }
  return sum / static_cast<double>(ds.n_trial());
}

LinearModel fit_arm_outcome_model(const TrialDataset& ds, int a, FeatureMap map) {
  const DatasetView view = subset(ds, [a](int s, int t) { return s == 1 && t == a; });
  if (view.empty()) {
    throw Error(ErrorCode::kMissingArm, "trial arm A=" + std::to_string(a) + " has no rows");
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(view.size()));
  for (std::size_t k = 0; k < view.size(); ++k) y[static_cast<Eigen::Index>(k)] = ds.outcome(view.base_index(k));
  return fit_linear_wls(make_design(view, map), y, Eigen::VectorXd::Ones(y.size()));
}

EstimateReport ipw_tau(const TrialDataset& ds, const EstimatorOptions& o) {
  require_arms(ds);
  const auto fit = mest::fit_stack(stacks::ipw_stack(stack_options(o)), ds, o.solve);
  return report_from(Method::kIpw, ds, fit, "tau", "psi1", "psi0", o);
}

EstimateReport or_tau(const TrialDataset& ds, const EstimatorOptions& o) {
  require_arm_sizes(ds, o.features);
  const auto fit =
      mest::fit_stack(stacks::outcome_regression_stack(ds.dim(), stack_options(o)), ds, o.solve);
  return report_from(Method::kOutcomeRegression, ds, fit, "tau", "psi1", "psi0", o);
}

EstimateReport trial_only_tau(const TrialDataset& ds, const EstimatorOptions& o) {
  require_arm_sizes(ds, o.features);
  const auto fit =
      mest::fit_stack(stacks::trial_only_stack(ds.dim(), stack_options(o)), ds, o.solve);
  return report_from(Method::kAipwTrial, ds, fit, "tau_g", "psi1", "psi0_g", o);
}

LogisticModel fit_participation_model(const TrialDataset& ds, FeatureMap map) {
  const DatasetView view = subset(ds, [](int, int a) { return a == 0; });
  Eigen::VectorXd labels(static_cast<Eigen::Index>(view.size()));
  for (std::size_t k = 0; k < view.size(); ++k) {
    labels[static_cast<Eigen::Index>(k)] = ds.source(view.base_index(k));
  }
  if (view.empty()) throw Error(ErrorCode::kNoVariation, "no control rows");
  return fit_logistic(make_design(view, map), labels, Eigen::VectorXd::Ones(labels.size()));
}

LinearModel fit_hstar(const TrialDataset& ds, const LogisticModel& eta0) {
  const DatasetView view = subset(ds, [](int, int a) { return a == 0; }, true);
  const auto n = static_cast<Eigen::Index>(view.size());
  Eigen::VectorXd y(n), w(n);
  for (std::size_t k = 0; k < view.size(); ++k) {
    const std::size_t i = view.base_index(k);
    const double eta = clip_probability(sigmoid(
        linear_predictor(eta0.coefficients, eta0.map, ds.covariate_row(i), ds.dim())));
    y[static_cast<Eigen::Index>(k)] = ds.outcome(i);
    w[static_cast<Eigen::Index>(k)] = stacks::hstar_weight(eta, ds.p1());
  }
  return fit_linear_wls(make_design(view, eta0.map), y, w);
}

EstimateReport optimized_tau(const TrialDataset& ds, const EstimatorOptions& o) {
  require_arm_sizes(ds, o.features);
  const auto fit =
      mest::fit_stack(stacks::optimized_stack(ds.dim(), stack_options(o)), ds, o.solve);
  return report_from(Method::kOptimized, ds, fit, "tau_h", "psi1", "psi0", o);
}

LambdaStar lambda_star(double sg2, double sh2, double sgh) {
  if (!(sg2 >= 0.0) || !(sh2 >= 0.0) || !std::isfinite(sgh)) {
    throw Error(ErrorCode::kInvalidArgument, "variances must be finite and non-negative");
  }
  const double denom = sg2 + sh2 - 2.0 * sgh;
  LambdaStar out;
  if (denom < 1e-12 * std::max({sg2, sh2, 1.0})) {
    out.lambda = 0.0;
    out.sigma2 = sg2;
    out.degenerate = true;
    return out;
  }
  out.lambda = (sg2 - sgh) / denom;
  out.sigma2 = (sg2 * sh2 - sgh * sgh) / denom;
  return out;
}

double blended_variance(double lambda, double sg2, double sh2, double sgh) {
  return lambda * lambda * sh2 + (1.0 - lambda) * (1.0 - lambda) * sg2 +
         2.0 * lambda * (1.0 - lambda) * sgh;
}

EstimateReport combined_tau(const TrialDataset& ds, const EstimatorOptions& o) {
  require_arm_sizes(ds, o.features);
  const auto fit = mest::fit_stack(stacks::combined_stack(ds.dim(), stack_options(o)), ds, o.solve);
  const double sg2 = fit.variance("tau_g");
  const double sh2 = fit.variance("tau_h");
  const double sgh = fit.covariance_between("tau_g", "tau_h");
  const LambdaStar ls = lambda_star(sg2, sh2, sgh);
  const double tau_g = fit.estimate("tau_g");
  const double tau_h = fit.estimate("tau_h");
  const std::string psi1_g = o.borrow_treated_arm ? "psi1_g" : "psi1";

  EstimateReport r;
  r.method = Method::kCombined;
  if (ls.degenerate) {
    r.tau = tau_g;
    r.psi1 = fit.estimate(psi1_g);
    r.psi0 = fit.estimate("psi0_g");
    r.flags.push_back("degenerate_lambda");
  } else {
    const double l = ls.lambda;
    r.tau = l * tau_h + (1.0 - l) * tau_g;
    r.psi1 = l * fit.estimate("psi1") + (1.0 - l) * fit.estimate(psi1_g);
    r.psi0 = l * fit.estimate("psi0") + (1.0 - l) * fit.estimate("psi0_g");
  }
  r.se = std::sqrt(std::max(ls.sigma2, 0.0));
  r.lambda = ls.lambda;
  r.sigma_g2 = sg2;
  r.sigma_h2 = sh2;
  r.sigma_gh = sgh;
  r.diagnostics["n"] = static_cast<double>(ds.size());
  r.diagnostics["n_trial"] = static_cast<double>(ds.n_trial());
  r.diagnostics["n_external"] = static_cast<double>(ds.n_external());
  r.diagnostics["residual_norm"] = fit.residual_norm;
  r.diagnostics["tau_g"] = tau_g;
  r.diagnostics["tau_h"] = tau_h;
  fill_interval(r, o.confidence);
  return r;
}

EstimateReport pooling_tau(const TrialDataset& ds, const EstimatorOptions& o) {
  require_arm_sizes(ds, o.features);
  const auto fit = mest::fit_stack(stacks::pooling_stack(ds.dim(), stack_options(o)), ds, o.solve);
  EstimateReport r = report_from(Method::kPooling, ds, fit, "tau_pool", "psi1", "zeta0", o);
  r.diagnostics["pooling_ratio"] = o.pooling_ratio;
  return r;
}

TestResult exchangeability_test(const TrialDataset& ds, double alpha, FeatureMap map) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "test level must lie in (0, 1)");
  }
  if (ds.count(1, 0) == 0 || ds.count(0, 0) == 0) {
    throw Error(ErrorCode::kInsufficientData, "controls must come from both sources");
  }
  const DatasetView view = subset(ds, [](int, int a) { return a == 0; });
  const std::size_t p = feature_count(ds.dim(), map);
  const std::size_t nc = view.size();
  if (nc <= 2 * p) {
    throw Error(ErrorCode::kInsufficientData,
                "need more than " + std::to_string(2 * p) + " controls for the test, have " +
                    std::to_string(nc));
  }
  const DesignMatrix reduced = make_design(view, map);
  DesignMatrix full;
  full.map = map;
  full.rows.resize(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(2 * p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(nc));
  for (std::size_t k = 0; k < nc; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    const std::size_t i = view.base_index(k);
    const double s = ds.source(i);
    full.rows.row(row).head(static_cast<Eigen::Index>(p)) = reduced.rows.row(row);
    full.rows.row(row).tail(static_cast<Eigen::Index>(p)) = s * reduced.rows.row(row);
    y[row] = ds.outcome(i);
  }
  const double rss_r = residual_sum_of_squares(reduced, y);
  const double rss_f = residual_sum_of_squares(full, y);

  TestResult t;
  t.df1 = static_cast<double>(p);
  t.df2 = static_cast<double>(nc - 2 * p);
  const double gain = std::max(rss_r - rss_f, 0.0);
  const double scale = std::max(rss_r, 1.0) * 1e-14;
  if (rss_f <= scale) {
    t.statistic = gain <= scale ? 0.0 : std::numeric_limits<double>::infinity();
    t.pvalue = gain <= scale ? 1.0 : 0.0;
  } else {
    t.statistic = (gain / t.df1) / (rss_f / t.df2);
    t.pvalue = boost::math::cdf(
        boost::math::complement(boost::math::fisher_f(t.df1, t.df2), t.statistic));
  }
  t.rejected = t.pvalue < alpha;
  return t;
}

EstimateReport test_then_pool_tau(const TrialDataset& ds, const EstimatorOptions& o) {
  const TestResult t = exchangeability_test(ds, o.alpha, o.features);
  EstimateReport r = t.rejected ? trial_only_tau(ds, o) : pooling_tau(ds, o);
  r.method = Method::kTestThenPool;
  r.test_pvalue = t.pvalue;
  r.branch = t.rejected ? "trial_only" : "pooling";
  r.diagnostics["test_statistic"] = t.statistic;
  r.diagnostics["test_df1"] = t.df1;
  r.diagnostics["test_df2"] = t.df2;
  return r;
}

EstimateReport estimate(const TrialDataset& ds, Method method, const EstimatorOptions& o) {
  switch (method) {
    case Method::kUnadjusted: return unadjusted_tau(ds, o);
    case Method::kIpw: return ipw_tau(ds, o);
    case Method::kOutcomeRegression: return or_tau(ds, o);
    case Method::kAipwTrial: return trial_only_tau(ds, o);
    case Method::kOptimized: return optimized_tau(ds, o);
    case Method::kPooling: return pooling_tau(ds, o);
    case Method::kTestThenPool: return test_then_pool_tau(ds, o);
    case Method::kCombined: return combined_tau(ds, o);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown estimator");
}

}  // namespace robustec
