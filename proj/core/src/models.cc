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

#include "robustec/models.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "robustec/error.h"

namespace robustec {

namespace {

double softplus(double t) {
  return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

void check_weights(const Eigen::VectorXd& w) {
  if (!w.allFinite() || (w.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "weights must be finite and nonnegative");
  }
  if (!(w.sum() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "weights sum to zero");
  }
}

// Condition number of a symmetric positive semi-definite matrix; infinity
// when it is not positive definite.
double spd_condition(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

std::string_view feature_map_name(FeatureMap map) {
  return map == FeatureMap::kLinear ? "linear" : "quadratic";
}

FeatureMap parse_feature_map(std::string_view name) {
  if (name == "linear") return FeatureMap::kLinear;
  if (name == "quadratic") return FeatureMap::kQuadratic;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown feature map '" + std::string(name) + "'");
}

std::size_t feature_count(std::size_t dim, FeatureMap map) {
  return map == FeatureMap::kLinear ? dim + 1 : 2 * dim + 1;
}

void fill_features(const double* x, std::size_t dim, FeatureMap map, double* out) {
  out[0] = 1.0;
  for (std::size_t j = 0; j < dim; ++j) out[1 + j] = x[j];
  if (map == FeatureMap::kQuadratic) {
    for (std::size_t j = 0; j < dim; ++j) out[1 + dim + j] = x[j] * x[j];
  }
}

void write_scaled_features(const double* x, std::size_t dim, FeatureMap map, double c,
                           double* out) {
  out[0] = c;
  for (std::size_t j = 0; j < dim; ++j) out[1 + j] = c * x[j];
  if (map == FeatureMap::kQuadratic) {
    for (std::size_t j = 0; j < dim; ++j) out[1 + dim + j] = c * x[j] * x[j];
  }
}

double linear_predictor(const double* coefficients, FeatureMap map,
                        const double* x, std::size_t dim) {
  double t = coefficients[0];
  for (std::size_t j = 0; j < dim; ++j) t += coefficients[1 + j] * x[j];
  if (map == FeatureMap::kQuadratic) {
    for (std::size_t j = 0; j < dim; ++j) t += coefficients[1 + dim + j] * x[j] * x[j];
  }
  return t;
}

DesignMatrix make_design(const RowMatrix& covariates, FeatureMap map) {
  const auto n = static_cast<std::size_t>(covariates.rows());
  const auto d = static_cast<std::size_t>(covariates.cols());
  const std::size_t p = feature_count(d, map);
  DesignMatrix design{Eigen::MatrixXd(n, p), map};
  Eigen::VectorXd row(p);
  for (std::size_t i = 0; i < n; ++i) {
    fill_features(covariates.data() + i * d, d, map, row.data());
    design.rows.row(i) = row.transpose();
  }
  return design;
}

DesignMatrix make_design(const DatasetView& view, FeatureMap map) {
  const std::size_t d = view.base().dim();
  const std::size_t p = feature_count(d, map);
  DesignMatrix design{Eigen::MatrixXd(view.size(), p), map};
  Eigen::VectorXd row(p);
  for (std::size_t k = 0; k < view.size(); ++k) {
    fill_features(view.base().covariate_row(view.base_index(k)), d, map, row.data());
    design.rows.row(k) = row.transpose();
  }
  return design;
}

LinearModel fit_linear_wls(const DesignMatrix& design, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w) {
  const Eigen::MatrixXd& x = design.rows;
  if (x.rows() != y.size() || x.rows() != w.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "design, outcome and weights differ in length");
  }
  check_weights(w);
  if (x.rows() < x.cols()) {
    throw Error(ErrorCode::kSingularDesign, "fewer rows than design columns");
  }
  const Eigen::MatrixXd xw = x.transpose() * w.asDiagonal();
  const Eigen::MatrixXd gram = xw * x;
  const Eigen::VectorXd rhs = xw * y;
  const double cond = spd_condition(gram);
  if (!(cond < kMaxConditionNumber)) {
    throw Error(ErrorCode::kSingularDesign,
                "weighted Gram matrix is singular (condition " + std::to_string(cond) + ")");
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  Eigen::VectorXd gamma = ldlt.solve(rhs);
  // One step of iterative refinement against the stationarity condition.
  Eigen::VectorXd score = rhs - gram * gamma;
  gamma += ldlt.solve(score);
  score = xw * (y - x * gamma);
  const double bound = 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
  if (!gamma.allFinite() || score.lpNorm<Eigen::Infinity>() > bound) {
    throw Error(ErrorCode::kSingularDesign, "normal equations could not be solved accurately");
  }
  return LinearModel{std::move(gamma), design.map};
}

double logistic_nll(const DesignMatrix& design, const Eigen::VectorXd& labels,
                    const Eigen::VectorXd& w, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = design.rows * beta;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (w[i] == 0.0) continue;
    nll += w[i] * (softplus(eta[i]) - labels[i] * eta[i]);
  }
  return nll;
}

LogisticModel fit_logistic(const DesignMatrix& design, const Eigen::VectorXd& labels,
                           const Eigen::VectorXd& w, const LogisticFitOptions& options) {
  const Eigen::MatrixXd& x = design.rows;
  const Eigen::Index n = x.rows();
  if (labels.size() != n || w.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "design, labels and weights differ in length");
  }
  check_weights(w);
  double pos = 0.0, neg = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "logistic labels must be 0 or 1");
    }
    if (w[i] > 0.0) (labels[i] == 1.0 ? pos : neg) += w[i];
  }
  if (pos == 0.0 || neg == 0.0) {
    throw Error(ErrorCode::kNoVariation, "labels are constant among weighted rows");
  }

  const double total = w.sum();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  double nll = logistic_nll(design, labels, w, beta);
  bool converged = false;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::VectorXd p = (x * beta).unaryExpr([](double t) { return sigmoid(t); });
    const Eigen::VectorXd score = x.transpose() * (w.array() * (labels - p).array()).matrix();
    // Separation: every row of one class is numerically saturated.
    bool ones_saturated = true, zeros_saturated = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (w[i] == 0.0) continue;
      if (labels[i] == 1.0 && p[i] < 1.0 - 1e-8) ones_saturated = false;
      if (labels[i] == 0.0 && p[i] > 1e-8) zeros_saturated = false;
    }
    if (ones_saturated || zeros_saturated) {
      throw Error(ErrorCode::kSeparation, "fitted probabilities saturate for one class");
    }
    if (score.lpNorm<Eigen::Infinity>() <= options.tol * std::max(1.0, total)) {
      converged = true;
      break;
    }
    const Eigen::VectorXd curvature = w.array() * p.array() * (1.0 - p.array());
    const Eigen::MatrixXd hessian = x.transpose() * curvature.asDiagonal() * x;
    const Eigen::VectorXd step = hessian.ldlt().solve(score);
    if (!step.allFinite() || step.norm() > 1e3) {
      throw Error(ErrorCode::kSeparation, "Newton step diverged (quasi-complete separation)");
    }
    double t = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double candidate_nll = logistic_nll(design, labels, w, candidate);
    while (candidate_nll > nll + 1e-12 * std::abs(nll) && t > 1e-10) {
      t *= 0.5;
      candidate = beta + t * step;
      candidate_nll = logistic_nll(design, labels, w, candidate);
    }
    beta = std::move(candidate);
    nll = candidate_nll;
  }
  if (!converged) {
    const Eigen::VectorXd p = (x * beta).unaryExpr([](double t) { return sigmoid(t); });
    const Eigen::VectorXd score = x.transpose() * (w.array() * (labels - p).array()).matrix();
    if (score.lpNorm<Eigen::Infinity>() > 1e-8 * static_cast<double>(n)) {
      throw Error(ErrorCode::kSeparation, "logistic fit did not converge");
    }
  }
  return LogisticModel{std::move(beta), design.map};
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double clip_probability(double p) {
  return std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
}

double predict_linear(const LinearModel& model, std::span<const double> x) {
  if (feature_count(x.size(), model.map) != static_cast<std::size_t>(model.coefficients.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "covariate dimension does not match model");
  }
  return linear_predictor(model.coefficients, model.map, x.data(), x.size());
}

double predict_prob(const LogisticModel& model, std::span<const double> x) {
  if (feature_count(x.size(), model.map) != static_cast<std::size_t>(model.coefficients.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "covariate dimension does not match model");
  }
  return clip_probability(sigmoid(linear_predictor(model.coefficients, model.map, x.data(), x.size())));
}

}  // namespace robustec
