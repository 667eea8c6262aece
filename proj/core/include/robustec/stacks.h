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

// Estimating-function blocks and the joint stacks behind every estimator.
//
// Block names used throughout (and readable from a SandwichResult):
//   q        S - q
//   alpha    logistic score of A on X among S=1 (estimated propensity)
//   beta     logistic score of S on X among A=0 (participation model eta_0)
//   gamma    weighted score of the plug-in function h* over pooled controls
//   psi0     randomization-aware control mean using h*
//   zeta     least-squares score of g_1 on trial treated rows
//   psi1     AIPW treated mean using g_1
//   tau_h    psi1 - psi0
//   iota     least-squares score of g_0 on trial control rows
//   psi0_g   AIPW control mean using g_0
//   tau_g    psi1 - psi0_g
// Pooling adds eta (S on X over all rows), g0_pool, zeta0 and tau_pool.

#ifndef ROBUSTEC_STACKS_H_
#define ROBUSTEC_STACKS_H_

#include <functional>
#include <string>
#include <vector>

#include "robustec/mest.h"
#include "robustec/models.h"

namespace robustec::stacks {

// Row filter / label pair for logistic blocks, as functions of (s, a).
using IndicatorFn = std::function<double(int s, int a)>;
// Per-row regression weight; may read upstream blocks through params.
using WeightFn =
    std::function<double(const TrialDataset& ds, std::size_t row, const mest::BlockParams& params)>;

mest::ParameterBlock trial_fraction_block();

mest::ParameterBlock logistic_block(std::string name, std::size_t dim, FeatureMap map,
                                    IndicatorFn row_weight, IndicatorFn label);

mest::ParameterBlock weighted_ls_block(std::string name, std::size_t dim, FeatureMap map,
                                       std::vector<std::string> depends_on, WeightFn weight);

// Propensity source for the randomization-aware means.
struct PropensitySpec {
  bool estimated = false;
  std::string block = "alpha";
};

// (S/q) [ 1(A=a)/e_a (Y - h(X)) + h(X) - psi ]. With an empty outcome block
// h is identically zero (IPW). With outcome_only the augmentation is dropped,
// giving the outcome-regression mean (S/q)[g(X) - psi].
mest::ParameterBlock randomization_aware_mean_block(std::string name, int arm, FeatureMap map,
                                                    std::string outcome_block,
                                                    PropensitySpec propensity = {},
                                                    bool outcome_only = false);

// minuend - subtrahend - tau
mest::ParameterBlock difference_block(std::string name, std::string minuend,
                                      std::string subtrahend);

// S * 1(A=a) (Y - mu)
mest::ParameterBlock arm_mean_block(std::string name, int arm);

struct StackOptions {
  FeatureMap features = FeatureMap::kLinear;
  bool unweighted_objective = false;
  bool estimate_propensity = false;
  bool borrow_treated_arm = false;
  double pooling_ratio = 1.0;
  bool pooling_trial_outcome_model = false;
};

// Builders take the covariate dimension d of the dataset they will be
// solved on. estimate_propensity adds an alpha block and switches every
// randomization-aware mean in the stack to the fitted propensity.
mest::EstimatingStack mean_difference_stack();
mest::EstimatingStack ipw_stack(const StackOptions& options = {});
mest::EstimatingStack outcome_regression_stack(std::size_t dim, const StackOptions& options = {});
// {q, zeta, psi1, iota, psi0_g, tau_g}
mest::EstimatingStack trial_only_stack(std::size_t dim, const StackOptions& options = {});
// {q, beta, gamma, psi0}: the control-mean stack with the optimized h*.
// unweighted_objective drops beta and fits gamma by plain least squares.
mest::EstimatingStack control_mean_stack(std::size_t dim, const StackOptions& options = {});
// {q, beta, gamma, psi0, zeta, psi1, tau_h}; with borrow_treated_arm psi1
// uses an optimized h1* fitted on pooled treated rows (beta1, gamma1).
mest::EstimatingStack optimized_stack(std::size_t dim, const StackOptions& options = {});
// optimized_stack + {iota, psi0_g, tau_g}; tau_g always uses the trial-only
// psi1 (named psi1_g when the treated arm borrows).
mest::EstimatingStack combined_stack(std::size_t dim, const StackOptions& options = {});
// {q, eta, g0_pool (or iota), zeta0, zeta, psi1, tau_pool}
mest::EstimatingStack pooling_stack(std::size_t dim, const StackOptions& options = {});

// Regression weight of the h* objective: (1-A) eta_0(X) e_1(X) / e_0(X)^2.
double hstar_weight(double eta0, double e1);

}  // namespace robustec::stacks

#endif  // ROBUSTEC_STACKS_H_
