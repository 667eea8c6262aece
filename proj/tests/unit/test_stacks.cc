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

#include <vector>

#include "robustec/estimators.h"
#include "robustec/stacks.h"

namespace robustec {
namespace {

TrialDataset six_rows() {
  return TrialDataset::from_observations({{{0.2}, 1, 1, 3.0},
                                          {{-0.7}, 1, 0, 1.0},
                                          {{1.1}, 1, 0, 2.5},
                                          {{0.4}, 0, 0, 1.5},
                                          {{-1.3}, 0, 0, 0.2},
                                          {{0.9}, 0, 0, 2.2}},
                                         0.5);
}

TEST(ControlMeanStack, MatchesSequentialFits) {
  const auto ds = six_rows();
  const auto fit = mest::fit_stack(stacks::control_mean_stack(1), ds);
  EXPECT_NEAR(fit.estimate("q"), 0.5, 1e-12);

  const auto eta0 = fit_participation_model(ds);
  EXPECT_NEAR(fit.estimate("beta", 0), eta0.coefficients[0], 1e-8);
  EXPECT_NEAR(fit.estimate("beta", 1), eta0.coefficients[1], 1e-8);

  const auto h = fit_hstar(ds, eta0);
  EXPECT_NEAR(fit.estimate("gamma", 0), h.coefficients[0], 1e-7);
  EXPECT_NEAR(fit.estimate("gamma", 1), h.coefficients[1], 1e-7);

  EXPECT_NEAR(fit.estimate("psi0"), aipw_psi(ds, 0, h), 1e-7);
  EXPECT_LT(fit.residual_norm, 1e-8);
}

TEST(ControlMeanStack, UnweightedObjectiveDropsParticipationBlock) {
  const auto ds = six_rows();
  stacks::StackOptions o;
  o.unweighted_objective = true;
  const auto stack = stacks::control_mean_stack(1, o);
  EXPECT_FALSE(stack.has_block("beta"));
  const auto fit = mest::fit_stack(stack, ds);
  // Plain least squares over all five controls.
  Eigen::VectorXd x(5), y(5);
  x << -0.7, 1.1, 0.4, -1.3, 0.9;
  y << 1.0, 2.5, 1.5, 0.2, 2.2;
  const double xm = x.mean(), ym = y.mean();
  const double slope = ((x.array() - xm) * (y.array() - ym)).sum() / (x.array() - xm).square().sum();
  EXPECT_NEAR(fit.estimate("gamma", 1), slope, 1e-10);
  EXPECT_NEAR(fit.estimate("gamma", 0), ym - slope * xm, 1e-10);
}

TEST(Stacks, BlockInventory) {
  const auto comb = stacks::combined_stack(2);
  for (const char* name : {"q", "beta", "gamma", "psi0", "zeta", "psi1", "tau_h", "iota", "psi0_g",
                           "tau_g"}) {
    EXPECT_TRUE(comb.has_block(name)) << name;
  }
  stacks::StackOptions o;
  o.estimate_propensity = true;
  EXPECT_TRUE(stacks::trial_only_stack(2, o).has_block("alpha"));
  EXPECT_FALSE(stacks::trial_only_stack(2).has_block("alpha"));
  const auto pool = stacks::pooling_stack(2);
  for (const char* name : {"q", "eta", "g0_pool", "zeta0", "zeta", "psi1", "tau_pool"}) {
    EXPECT_TRUE(pool.has_block(name)) << name;
  }
  o = {};
  o.borrow_treated_arm = true;
  const auto borrow = stacks::combined_stack(2, o);
  EXPECT_TRUE(borrow.has_block("gamma1"));
  EXPECT_TRUE(borrow.has_block("psi1_g"));
}

TEST(Stacks, HstarWeight) {
  EXPECT_DOUBLE_EQ(stacks::hstar_weight(0.5, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(stacks::hstar_weight(0.2, 0.75), 0.2 * 0.75 / (0.25 * 0.25));
}

TEST(Stacks, MeanDifferenceStackIsUnadjusted) {
  const auto ds = six_rows();
  const auto fit = mest::fit_stack(stacks::mean_difference_stack(), ds);
  EXPECT_NEAR(fit.estimate("tau"), unadjusted_tau(ds).tau, 1e-12);
}

}  // namespace
}  // namespace robustec
