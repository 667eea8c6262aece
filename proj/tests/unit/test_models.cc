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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "robustec/error.h"
#include "robustec/models.h"

namespace robustec {
namespace {

DesignMatrix design_from(const std::vector<double>& x, FeatureMap map = FeatureMap::kLinear) {
  RowMatrix m(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = x[i];
  return make_design(m, map);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

TEST(Features, LinearAndQuadratic) {
  const double x[2] = {2.0, -3.0};
  EXPECT_EQ(feature_count(2, FeatureMap::kLinear), 3u);
  EXPECT_EQ(feature_count(2, FeatureMap::kQuadratic), 5u);
  double out[5];
  fill_features(x, 2, FeatureMap::kQuadratic, out);
  EXPECT_EQ(std::vector<double>(out, out + 5), (std::vector<double>{1, 2, -3, 4, 9}));
  const double coef[5] = {1, 1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(linear_predictor(coef, FeatureMap::kQuadratic, x, 2), 13.0);
  EXPECT_DOUBLE_EQ(linear_predictor(coef, FeatureMap::kLinear, x, 2), 0.0);
  write_scaled_features(x, 2, FeatureMap::kLinear, 2.0, out);
  EXPECT_EQ(std::vector<double>(out, out + 3), (std::vector<double>{2, 4, -6}));
  EXPECT_EQ(parse_feature_map(feature_map_name(FeatureMap::kQuadratic)), FeatureMap::kQuadratic);
  EXPECT_THROW(parse_feature_map("cubic"), Error);
}

TEST(LinearWls, WeightedWorkedExample) {
  // Rows (x, y) = (0,1), (1,1), (1,3) with weights (1,1,2).
  const auto model = fit_linear_wls(design_from({0, 1, 1}), Eigen::Vector3d(1, 1, 3),
                                    Eigen::Vector3d(1, 1, 2));
  EXPECT_NEAR(model.coefficients[0], 1.0, 1e-12);
  EXPECT_NEAR(model.coefficients[1], 4.0 / 3.0, 1e-12);
  const double x = 1.0;
  EXPECT_NEAR(predict_linear(model, {&x, 1}), 7.0 / 3.0, 1e-12);
}

TEST(LinearWls, ZeroWeightRowsAreIgnored) {
  const auto a = fit_linear_wls(design_from({0, 1, 2, 5}), Eigen::Vector4d(1, 2, 4, 100),
                                Eigen::Vector4d(1, 1, 1, 0));
  const auto b = fit_linear_wls(design_from({0, 1, 2}), Eigen::Vector3d(1, 2, 4),
                                Eigen::Vector3d(1, 1, 1));
  EXPECT_NEAR((a.coefficients - b.coefficients).norm(), 0.0, 1e-12);
}

TEST(LinearWls, Errors) {
  EXPECT_EQ(code_of([] {
              fit_linear_wls(design_from({1, 1, 1}), Eigen::Vector3d(1, 2, 3),
                             Eigen::Vector3d(1, 1, 1));
            }),
            ErrorCode::kSingularDesign);
  EXPECT_EQ(code_of([] {
              fit_linear_wls(design_from({0, 1, 2}), Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 1, 1));
            }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([] {
              fit_linear_wls(design_from({0, 1, 2}), Eigen::Vector3d(1, 2, 3),
                             Eigen::Vector3d(1, -1, 1));
            }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] {
              fit_linear_wls(design_from({0, 1, 2}), Eigen::Vector3d(1, 2, 3), Eigen::Vector3d::Zero());
            }),
            ErrorCode::kInvalidArgument);
}

TEST(Logistic, InterceptOnlyMatchesLogOdds) {
  // Three positives out of four: intercept ln 3.
  RowMatrix empty(4, 0);
  const auto design = make_design(empty);
  const auto fit = fit_logistic(design, Eigen::Vector4d(1, 1, 1, 0), Eigen::Vector4d::Ones());
  EXPECT_NEAR(fit.coefficients[0], std::log(3.0), 1e-9);
}

TEST(Logistic, ParticipationOddsOfCounts) {
  // 7 trial controls against 20 external controls.
  const int n1c = 7, n0 = 20;
  RowMatrix empty(n1c + n0, 0);
  Eigen::VectorXd labels = Eigen::VectorXd::Zero(n1c + n0);
  labels.head(n1c).setOnes();
  const auto fit = fit_logistic(make_design(empty), labels, Eigen::VectorXd::Ones(n1c + n0));
  EXPECT_NEAR(fit.coefficients[0], std::log(static_cast<double>(n1c) / n0), 1e-9);
}

TEST(Logistic, ScoreIsZeroAtSolution) {
  const std::vector<double> x = {-2, -1, -0.5, 0, 0.3, 0.8, 1.2, 2, 2.5, -1.5};
  Eigen::VectorXd labels(10);
  labels << 0, 0, 1, 0, 1, 0, 1, 1, 1, 0;
  Eigen::VectorXd w(10);
  w << 1, 2, 1, 1, 0.5, 1, 1, 3, 1, 1;
  const auto design = design_from(x);
  const auto fit = fit_logistic(design, labels, w);
  Eigen::Vector2d score = Eigen::Vector2d::Zero();
  for (int i = 0; i < 10; ++i) {
    const double p = sigmoid(design.rows.row(i).dot(fit.coefficients));
    score += w[i] * (labels[i] - p) * design.rows.row(i).transpose();
  }
  EXPECT_LT(score.lpNorm<Eigen::Infinity>(), 1e-9);
  const double nll = logistic_nll(design, labels, w, fit.coefficients);
  Eigen::VectorXd moved = fit.coefficients;
  moved[1] += 1e-3;
  EXPECT_LT(nll, logistic_nll(design, labels, w, moved));
}

TEST(Logistic, Errors) {
  RowMatrix empty(3, 0);
  EXPECT_EQ(code_of([&] {
              fit_logistic(make_design(empty), Eigen::Vector3d(1, 1, 1), Eigen::Vector3d::Ones());
            }),
            ErrorCode::kNoVariation);
  EXPECT_EQ(code_of([] {
              fit_logistic(design_from({-2, -1, 1, 2}), Eigen::Vector4d(0, 0, 1, 1),
                           Eigen::Vector4d::Ones());
            }),
            ErrorCode::kSeparation);
}

TEST(Logistic, PredictionIsClipped) {
  LogisticModel m{Eigen::Vector2d(0.0, 100.0), FeatureMap::kLinear};
  const double x = 1.0;
  EXPECT_DOUBLE_EQ(predict_prob(m, {&x, 1}), 1.0 - kProbabilityClip);
  EXPECT_DOUBLE_EQ(clip_probability(0.0), kProbabilityClip);
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
}

}  // namespace
}  // namespace robustec
