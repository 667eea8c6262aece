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

// Stacked M-estimation.
//
// A stack is an ordered list of named parameter blocks. Each block owns a
// per-observation estimating function m_b(O_i; theta) that may read its own
// parameters and those of the blocks it declares as dependencies, plus a
// block solver that returns the root of sum_i m_b = 0 given solved upstream
// blocks. Stacks are block-triangular: solve_stack() visits blocks in
// dependency order and then verifies the assembled residual
// (1/n) || sum_i m(O_i; theta_hat) ||_inf.
//
// Estimating functions are defined for every row of the dataset and are zero
// outside their conditioning set, so the bread and meat are averages over the
// full composite sample:
//   A = -(1/n) sum_i dm/dtheta,   B = (1/n) sum_i m m',   V = A^-1 B A^-T / n.

#ifndef ROBUSTEC_MEST_H_
#define ROBUSTEC_MEST_H_

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "robustec/data.h"

namespace robustec::mest {

struct Segment {
  std::size_t offset = 0;
  std::size_t dim = 0;
};

// Read access to the parameters an estimating function may use: its own
// block and its declared dependencies, in declaration order.
class BlockParams {
 public:
  BlockParams(const double* theta, const Segment* segments, std::size_t count)
      : theta_(theta), segments_(segments), count_(count) {}

  Eigen::Map<const Eigen::VectorXd> self() const { return segment(0); }
  Eigen::Map<const Eigen::VectorXd> dep(std::size_t k) const { return segment(k + 1); }
  double self_scalar() const { return theta_[segments_[0].offset]; }
  double dep_scalar(std::size_t k) const { return theta_[segments_[k + 1].offset]; }
  std::size_t dep_count() const { return count_ - 1; }

 private:
  Eigen::Map<const Eigen::VectorXd> segment(std::size_t k) const {
    return {theta_ + segments_[k].offset, static_cast<Eigen::Index>(segments_[k].dim)};
  }
  const double* theta_;
  const Segment* segments_;
  std::size_t count_;
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 100;
};

// Writes the block's estimating-function values for one row into out[0..dim).
using EvalFn = std::function<void(const TrialDataset& ds, std::size_t row,
                                  const BlockParams& params, double* out)>;
// Returns the block's solution; self() is unset while solving.
using SolveFn = std::function<Eigen::VectorXd(
    const TrialDataset& ds, const BlockParams& params, const SolveOptions& options)>;

struct ParameterBlock {
  std::string name;
  std::size_t dim = 1;
  std::vector<std::string> depends_on;
  EvalFn eval;
  SolveFn solve;
};

struct BlockLabel {
  std::string name;
  std::size_t offset;
  std::size_t dim;
};

class EstimatingStack {
 public:
  EstimatingStack& add_block(ParameterBlock block);

  const std::vector<ParameterBlock>& blocks() const { return blocks_; }
  std::size_t total_dim() const;
  bool has_block(std::string_view name) const;
  // Block labels in parameter-vector order (insertion order).
  std::vector<BlockLabel> labels() const;

  struct Resolved {
    std::vector<BlockLabel> labels;
    // segments[b] = {self, deps...}
    std::vector<std::vector<Segment>> segments;
    std::vector<std::vector<std::size_t>> deps;
    // Blocks whose estimating functions read block b (including b itself).
    std::vector<std::vector<std::size_t>> readers;
    std::vector<std::size_t> topological_order;
    std::size_t total_dim = 0;
  };
  // Resolves dependency names and orders the blocks. Throws
  // kInvalidArgument for unknown or duplicate names and kCyclicDependency
  // when the declared dependencies contain a cycle.
  Resolved resolve() const;

 private:
  std::vector<ParameterBlock> blocks_;
};

struct StackSolution {
  Eigen::VectorXd theta;
  std::vector<BlockLabel> labels;
  double residual_norm = 0.0;

  Eigen::VectorXd block(std::string_view name) const;
  double scalar(std::string_view name) const { return block(name)[0]; }
};

// Solves the blocks in dependency order. Block failures are rethrown as
// kBlockSolveFailed carrying the original code as cause(); an assembled
// residual above options.tol raises kResidualCheckFailed.
StackSolution solve_stack(const EstimatingStack& stack, const TrialDataset& ds,
                          const SolveOptions& options = {});

// n x p matrix of m(O_i; theta), one row per observation.
RowMatrix stack_values(const EstimatingStack& stack, const TrialDataset& ds,
                       const Eigen::VectorXd& theta);

// (1/n) sum_i m(O_i; theta) with pairwise summation over rows.
Eigen::VectorXd stack_mean(const EstimatingStack& stack, const TrialDataset& ds,
                           const Eigen::VectorXd& theta);

// Central differences of the averaged stack with step
// h_j = 1e-6 * max(1, |theta_j|). Only blocks that read theta_j are
// re-evaluated; other entries of column j are exactly zero.
Eigen::MatrixXd numerical_jacobian(const EstimatingStack& stack,
                                   const TrialDataset& ds,
                                   const Eigen::VectorXd& theta);

struct SandwichResult {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd bread;
  Eigen::MatrixXd meat;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;
  std::vector<BlockLabel> labels;

  std::size_t index(std::string_view name, std::size_t k = 0) const;
  double estimate(std::string_view name, std::size_t k = 0) const {
    return theta_hat[static_cast<Eigen::Index>(index(name, k))];
  }
  double variance(std::string_view name, std::size_t k = 0) const;
  double covariance_between(std::string_view a, std::string_view b) const;
  double standard_error(std::string_view name, std::size_t k = 0) const;
};

// Throws kSingularBread when cond(A) >= 1e12.
SandwichResult sandwich_covariance(const EstimatingStack& stack,
                                   const TrialDataset& ds,
                                   const StackSolution& solution);

// solve_stack followed by sandwich_covariance.
SandwichResult fit_stack(const EstimatingStack& stack, const TrialDataset& ds,
                         const SolveOptions& options = {});

// Pairwise (cascade) summation of n values spaced `stride` apart.
double pairwise_sum(const double* values, std::size_t n, std::size_t stride = 1);

}  // namespace robustec::mest

#endif  // ROBUSTEC_MEST_H_
