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

// Average-treatment-effect estimators for a randomized trial augmented with
// external controls. Every stacked estimator is solved jointly through
// robustec::mest, so its standard error is the sandwich SE of the tau block.

#ifndef ROBUSTEC_ESTIMATORS_H_
#define ROBUSTEC_ESTIMATORS_H_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robustec/data.h"
#include "robustec/mest.h"
#include "robustec/models.h"

namespace robustec {

enum class Method {
  kUnadjusted,
  kIpw,
  kOutcomeRegression,
  kAipwTrial,
  kOptimized,
  kPooling,
  kTestThenPool,
  kCombined,
};

// Tags: unadjusted, ipw, or, aipw_trial, optimized, pooling, test_then_pool,
// combined. parse_method also accepts "aipw" for aipw_trial.
std::string_view method_name(Method method);
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();

struct EstimatorOptions {
  FeatureMap features = FeatureMap::kLinear;
  double confidence = 0.95;
  bool unweighted_objective = false;
  bool estimate_propensity = false;
  // Fits an optimized plug-in for the treated arm over pooled treated rows.
  // Only meaningful when external rows may be treated.
  bool borrow_treated_arm = false;
  // Constant variance ratio r(X) of the pooling estimator.
  double pooling_ratio = 1.0;
  // Pooling with the trial-control outcome model instead of the pooled fit.
  bool pooling_trial_outcome_model = false;
  // Level of the exchangeability test in test-then-pool.
  double alpha = 0.05;
  mest::SolveOptions solve;
};

struct EstimateReport {
  Method method = Method::kUnadjusted;
  double tau = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double psi1 = 0.0;
  double psi0 = 0.0;
  std::optional<double> lambda;  // combined only
  std::optional<double> sigma_g2;
  std::optional<double> sigma_h2;
  std::optional<double> sigma_gh;
  std::optional<double> test_pvalue;  // test_then_pool only
  std::optional<std::string> branch;  // test_then_pool: "trial_only" | "pooling"
  std::map<std::string, double> diagnostics;
  std::vector<std::string> flags;
};

struct TestResult {
  double statistic = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double pvalue = 1.0;
  bool rejected = false;
};

// Two-sided standard-normal quantile for the given confidence level.
double normal_critical_value(double confidence);

// Difference of trial arm means. Throws kMissingArm.
EstimateReport unadjusted_tau(const TrialDataset& ds, const EstimatorOptions& options = {});

using PlugIn = std::function<double(const double* x)>;

// (1/n1) sum_{S=1} [ 1(A=a)/e_a (Y - h(X)) + h(X) ] with the known e_a. When
// no trial row has A=a the value is still returned and "missing_arm" is
// appended to *flags (if given).
double aipw_psi(const TrialDataset& ds, int a, const LinearModel& h,
                std::vector<std::string>* flags = nullptr);
double aipw_psi(const TrialDataset& ds, int a, const PlugIn& h,
                std::vector<std::string>* flags = nullptr);
double ipw_psi(const TrialDataset& ds, int a, std::vector<std::string>* flags = nullptr);
// (1/n1) sum_{S=1} g(X).
double or_psi(const TrialDataset& ds, int a, const LinearModel& g);

// Least squares of Y on features among {S=1, A=a}. Throws kMissingArm or
// kSingularDesign.
LinearModel fit_arm_outcome_model(const TrialDataset& ds, int a,
                                  FeatureMap map = FeatureMap::kLinear);

EstimateReport ipw_tau(const TrialDataset& ds, const EstimatorOptions& options = {});
EstimateReport or_tau(const TrialDataset& ds, const EstimatorOptions& options = {});
// AIPW with trial-arm outcome models. Throws kInsufficientData when an arm
// has fewer rows than features + 1.
EstimateReport trial_only_tau(const TrialDataset& ds, const EstimatorOptions& options = {});

// Logistic fit of S on X among A=0 rows. Throws kNoVariation when the
// controls come from a single source.
LogisticModel fit_participation_model(const TrialDataset& ds,
                                      FeatureMap map = FeatureMap::kLinear);
// WLS over all A=0 rows with weights eta0(X) p1 / (1-p1)^2.
LinearModel fit_hstar(const TrialDataset& ds, const LogisticModel& eta0);

EstimateReport optimized_tau(const TrialDataset& ds, const EstimatorOptions& options = {});

struct LambdaStar {
  double lambda = 0.0;
  double sigma2 = 0.0;
  bool degenerate = false;
};
// Variance-minimizing weight on the optimized estimator. A vanishing
// denominator (< 1e-12 max(sg2, sh2, 1)) falls back to lambda = 0.
LambdaStar lambda_star(double sigma_g2, double sigma_h2, double sigma_gh);
// Variance of lambda tau_h + (1 - lambda) tau_g.
double blended_variance(double lambda, double sigma_g2, double sigma_h2, double sigma_gh);

EstimateReport combined_tau(const TrialDataset& ds, const EstimatorOptions& options = {});

EstimateReport pooling_tau(const TrialDataset& ds, const EstimatorOptions& options = {});

// F-test on controls: Y ~ f(X) against Y ~ f(X) + S f(X). Throws
// kInsufficientData when a source has no controls or n_c <= 2 p.
TestResult exchangeability_test(const TrialDataset& ds, double alpha = 0.05,
                                FeatureMap map = FeatureMap::kLinear);

EstimateReport test_then_pool_tau(const TrialDataset& ds, const EstimatorOptions& options = {});

EstimateReport estimate(const TrialDataset& ds, Method method,
                        const EstimatorOptions& options = {});

}  // namespace robustec

#endif  // ROBUSTEC_ESTIMATORS_H_
