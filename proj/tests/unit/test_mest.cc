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
#include "robustec/mest.h"
#include "robustec/stacks.h"

namespace robustec {
namespace {

using mest::BlockParams;
using mest::EstimatingStack;
using mest::ParameterBlock;

TrialDataset outcomes_dataset(const std::vector<double>& y) {
  std::vector<Observation> rows;
  for (std::size_t i = 0; i < y.size(); ++i) {
    rows.push_back({{static_cast<double>(i)}, 1, static_cast<int>(i % 2), y[i]});
  }
  return TrialDataset::from_observations(rows, 0.5);
}

ParameterBlock mean_block(std::string name) {
  ParameterBlock b;
  b.name = std::move(name);
  b.eval = [](const TrialDataset& ds, std::size_t i, const BlockParams& p, double* out) {
    out[0] = ds.outcome(i) - p.self_scalar();
  };
  b.solve = [](const TrialDataset& ds, const BlockParams&, const mest::SolveOptions&) {
    return Eigen::VectorXd::Constant(1, ds.outcomes().mean());
  };
  return b;
}

// theta_2 = theta_1^2, solved from the upstream mean.
ParameterBlock square_block(std::string name, std::string dep) {
  ParameterBlock b;
  b.name = std::move(name);
  b.depends_on = {std::move(dep)};
  b.eval = [](const TrialDataset&, std::size_t, const BlockParams& p, double* out) {
    out[0] = p.dep_scalar(0) * p.dep_scalar(0) - p.self_scalar();
  };
  b.solve = [](const TrialDataset&, const BlockParams& p, const mest::SolveOptions&) {
    return Eigen::VectorXd::Constant(1, p.dep_scalar(0) * p.dep_scalar(0));
  };
  return b;
}

TEST(Sandwich, MeanVarianceIsPlugInFormula) {
  // y = (1, 2, 3): sum (y - 2)^2 / n^2 = 2/9.
  const auto ds = outcomes_dataset({1, 2, 3});
  EstimatingStack stack;
  stack.add_block(mean_block("mu"));
  const auto fit = mest::fit_stack(stack, ds);
  EXPECT_NEAR(fit.estimate("mu"), 2.0, 1e-14);
  EXPECT_NEAR(fit.variance("mu"), 2.0 / 9.0, 1e-10);
  EXPECT_NEAR(fit.bread(0, 0), 1.0, 1e-8);
  EXPECT_NEAR(fit.meat(0, 0), 2.0 / 3.0, 1e-14);
}

TEST(Sandwich, DeltaMethodThroughDependentBlock) {
  const auto ds = outcomes_dataset({0.5, 1.0, 4.0, 2.5, 3.0});
  EstimatingStack stack;
  stack.add_block(mean_block("mu")).add_block(square_block("mu2", "mu"));
  const auto fit = mest::fit_stack(stack, ds);
  const double mu = fit.estimate("mu");
  EXPECT_NEAR(fit.estimate("mu2"), mu * mu, 1e-12);
  EXPECT_NEAR(fit.variance("mu2"), 4.0 * mu * mu * fit.variance("mu"), 1e-8);
  EXPECT_NEAR(fit.covariance_between("mu", "mu2"), 2.0 * mu * fit.variance("mu"), 1e-8);
  const auto labels = stack.labels();
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels[1].offset, 1u);
}

TEST(Sandwich, BlockOrderFollowsDependencies) {
  // Declared out of order; solved topologically.
  const auto ds = outcomes_dataset({1, 2, 6});
  EstimatingStack stack;
  stack.add_block(square_block("mu2", "mu")).add_block(mean_block("mu"));
  const auto sol = mest::solve_stack(stack, ds);
  EXPECT_NEAR(sol.scalar("mu2"), 9.0, 1e-12);
  EXPECT_LT(sol.residual_norm, 1e-12);
}

TEST(Sandwich, LogisticBreadMatchesAnalyticHessian) {
  std::vector<Observation> rows;
  const double xs[] = {-1.2, -0.4, 0.1, 0.7, 1.5, 2.0, -2.0, 0.3};
  const int ss[] = {0, 0, 1, 0, 1, 1, 0, 1};
  for (int i = 0; i < 8; ++i) rows.push_back({{xs[i]}, ss[i], 0, 0.0});
  const auto ds = TrialDataset::from_observations(rows, 0.5);
  EstimatingStack stack;
  stack.add_block(stacks::logistic_block(
      "eta", 1, FeatureMap::kLinear, [](int, int) { return 1.0; },
      [](int s, int) { return static_cast<double>(s); }));
  const auto fit = mest::fit_stack(stack, ds);
  Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector2d f(1.0, xs[i]);
    const double p = sigmoid(f.dot(fit.theta_hat));
    hessian += p * (1 - p) * f * f.transpose() / 8.0;
  }
  EXPECT_LT((fit.bread - hessian).lpNorm<Eigen::Infinity>(), 1e-7);
}

TEST(Stack, CyclicDependencyIsRejected) {
  EstimatingStack stack;
  stack.add_block(square_block("a", "b")).add_block(square_block("b", "a"));
  try {
    stack.resolve();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCyclicDependency);
  }
}

TEST(Stack, UnknownAndDuplicateNames) {
  EstimatingStack unknown;
  unknown.add_block(square_block("a", "missing"));
  EXPECT_THROW(unknown.resolve(), Error);
  EstimatingStack dup;
  dup.add_block(mean_block("mu"));
  EXPECT_THROW(dup.add_block(mean_block("mu")), Error);
}

TEST(Stack, ResidualCheckCatchesWrongSolver) {
  const auto ds = outcomes_dataset({1, 2, 3});
  auto bad = mean_block("mu");
  bad.solve = [](const TrialDataset&, const BlockParams&, const mest::SolveOptions&) {
    return Eigen::VectorXd::Constant(1, 5.0);
  };
  EstimatingStack stack;
  stack.add_block(bad);
  try {
    mest::solve_stack(stack, ds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kResidualCheckFailed);
  }
}

TEST(Stack, BlockFailureCarriesCause) {
  const auto ds = outcomes_dataset({1, 2, 3});
  auto bad = mean_block("mu");
  bad.solve = [](const TrialDataset&, const BlockParams&, const mest::SolveOptions&)
      -> Eigen::VectorXd { throw Error(ErrorCode::kSingularDesign, "singular"); };
  EstimatingStack stack;
  stack.add_block(bad);
  try {
    mest::solve_stack(stack, ds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBlockSolveFailed);
    EXPECT_EQ(e.cause(), ErrorCode::kSingularDesign);
  }
}

TEST(Stack, SingularBread) {
  const auto ds = outcomes_dataset({1, 2, 3});
  ParameterBlock flat;
  flat.name = "flat";
  flat.eval = [](const TrialDataset& ds, std::size_t i, const BlockParams&, double* out) {
    out[0] = ds.outcome(i) - 2.0;
  };
  flat.solve = [](const TrialDataset&, const BlockParams&, const mest::SolveOptions&) {
    return Eigen::VectorXd::Constant(1, 0.0);
  };
  EstimatingStack stack;
  stack.add_block(flat);
  EXPECT_THROW(mest::fit_stack(stack, ds), Error);
}

TEST(PairwiseSum, MatchesNaiveAndStride) {
  std::vector<double> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  EXPECT_DOUBLE_EQ(mest::pairwise_sum(v.data(), v.size()), 500500.0);
  EXPECT_DOUBLE_EQ(mest::pairwise_sum(v.data(), 500, 2), 249500.0);
}

}  // namespace
}  // namespace robustec
