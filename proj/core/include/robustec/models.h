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

// Parametric working models: weighted linear regression for outcome and
// plug-in functions, logistic regression for participation and propensity.

#ifndef ROBUSTEC_MODELS_H_
#define ROBUSTEC_MODELS_H_

#include <cstddef>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "robustec/data.h"

namespace robustec {

// How covariates map onto design columns. Both maps lead with an intercept.
enum class FeatureMap {
  kLinear,     // (1, x_1, ..., x_d)
  kQuadratic,  // (1, x_1, ..., x_d, x_1^2, ..., x_d^2)
};

std::string_view feature_map_name(FeatureMap map);
FeatureMap parse_feature_map(std::string_view name);

std::size_t feature_count(std::size_t dim, FeatureMap map);

// Writes the feature vector of one covariate row into `out`
// (length feature_count(dim, map)).
void fill_features(const double* x, std::size_t dim, FeatureMap map,
                   double* out);

// Coefficients dotted with the features of x, without materializing them.
double linear_predictor(const double* coefficients, FeatureMap map,
                        const double* x, std::size_t dim);
inline double linear_predictor(const Eigen::VectorXd& coefficients, FeatureMap map,
                               const double* x, std::size_t dim) {
  return linear_predictor(coefficients.data(), map, x, dim);
}

// out = c * features(x), without materializing the features.
void write_scaled_features(const double* x, std::size_t dim, FeatureMap map, double c,
                           double* out);

struct DesignMatrix {
  Eigen::MatrixXd rows;
  FeatureMap map = FeatureMap::kLinear;
};

DesignMatrix make_design(const RowMatrix& covariates,
                         FeatureMap map = FeatureMap::kLinear);
DesignMatrix make_design(const DatasetView& view,
                         FeatureMap map = FeatureMap::kLinear);

struct LinearModel {
  Eigen::VectorXd coefficients;
  FeatureMap map = FeatureMap::kLinear;
};

inline constexpr double kProbabilityClip = 1e-6;

struct LogisticModel {
  Eigen::VectorXd coefficients;
  FeatureMap map = FeatureMap::kLinear;
};

// Gram matrices whose condition number reaches this bound are singular.
inline constexpr double kMaxConditionNumber = 1e12;

// Weighted least squares: solves X'W(y - X gamma) = 0.
// Throws kDimensionMismatch, kInvalidArgument (negative or all-zero weights)
// or kSingularDesign.
LinearModel fit_linear_wls(const DesignMatrix& design, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w);

struct LogisticFitOptions {
  int max_iter = 100;
  double tol = 1e-10;
};

// Weighted logistic regression by damped Newton with step halving. The
// returned coefficients zero the weighted score sum_i w_i (l_i - p_i) x_i.
// Throws kNoVariation when the positive-weight labels are constant and
// kSeparation when the iteration diverges or a class saturates.
LogisticModel fit_logistic(const DesignMatrix& design,
                           const Eigen::VectorXd& labels,
                           const Eigen::VectorXd& w,
                           const LogisticFitOptions& options = {});

// Weighted negative log-likelihood, used for the descent check.
double logistic_nll(const DesignMatrix& design, const Eigen::VectorXd& labels,
                    const Eigen::VectorXd& w, const Eigen::VectorXd& beta);

double predict_linear(const LinearModel& model, std::span<const double> x);
// Clipped to [kProbabilityClip, 1 - kProbabilityClip].
double predict_prob(const LogisticModel& model, std::span<const double> x);

double sigmoid(double t);
double clip_probability(double p);

}  // namespace robustec

#endif  // ROBUSTEC_MODELS_H_
