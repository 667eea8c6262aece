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

#include "robustec/mest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "robustec/error.h"

namespace robustec::mest {

namespace {

const BlockLabel& find_label(const std::vector<BlockLabel>& labels, std::string_view name) {
  for (const auto& label : labels) {
    if (label.name == name) return label;
  }
  throw Error(ErrorCode::kInvalidArgument, "no parameter block named '" + std::string(name) + "'");
}

// Column sums of the `dim` outputs of block b over all rows.
Eigen::VectorXd block_sums(const ParameterBlock& block, const std::vector<Segment>& segments,
                           const TrialDataset& ds, const Eigen::VectorXd& theta,
                           std::vector<double>& scratch) {
  const std::size_t n = ds.size();
  const std::size_t dim = block.dim;
  scratch.assign(n * dim, 0.0);
  const BlockParams params(theta.data(), segments.data(), segments.size());
  for (std::size_t i = 0; i < n; ++i) block.eval(ds, i, params, scratch.data() + i * dim);
  Eigen::VectorXd sums(dim);
  for (std::size_t k = 0; k < dim; ++k) sums[k] = pairwise_sum(scratch.data() + k, n, dim);
  return sums;
}

}  // namespace

double pairwise_sum(const double* values, std::size_t n, std::size_t stride) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i * stride];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half, stride) +
         pairwise_sum(values + half * stride, n - half, stride);
}

EstimatingStack& EstimatingStack::add_block(ParameterBlock block) {
  if (block.dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "block '" + block.name + "' has zero dimension");
  }
  if (!block.eval || !block.solve) {
    throw Error(ErrorCode::kInvalidArgument,
                "block '" + block.name + "' needs an estimating function and a solver");
  }
  if (has_block(block.name)) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate block name '" + block.name + "'");
  }
  blocks_.push_back(std::move(block));
  return *this;
}

std::size_t EstimatingStack::total_dim() const {
  std::size_t p = 0;
  for (const auto& b : blocks_) p += b.dim;
  return p;
}

bool EstimatingStack::has_block(std::string_view name) const {
  return std::any_of(blocks_.begin(), blocks_.end(),
                     [&](const ParameterBlock& b) { return b.name == name; });
}

std::vector<BlockLabel> EstimatingStack::labels() const {
  std::vector<BlockLabel> out;
  std::size_t offset = 0;
  for (const auto& b : blocks_) {
    out.push_back({b.name, offset, b.dim});
    offset += b.dim;
  }
  return out;
}

EstimatingStack::Resolved EstimatingStack::resolve() const {
  Resolved r;
  r.labels = labels();
  r.total_dim = total_dim();
  const std::size_t nb = blocks_.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t b = 0; b < nb; ++b) index.emplace(blocks_[b].name, b);

  r.deps.resize(nb);
  r.segments.resize(nb);
  r.readers.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    r.segments[b].push_back({r.labels[b].offset, r.labels[b].dim});
    r.readers[b].push_back(b);
    for (const auto& name : blocks_[b].depends_on) {
      auto it = index.find(name);
      if (it == index.end()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "block '" + blocks_[b].name + "' depends on unknown block '" + name + "'");
      }
      if (it->second == b) {
        throw Error(ErrorCode::kCyclicDependency,
                    "block '" + blocks_[b].name + "' depends on itself");
      }
      r.deps[b].push_back(it->second);
      r.segments[b].push_back({r.labels[it->second].offset, r.labels[it->second].dim});
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t d : r.deps[b]) {
      auto& readers = r.readers[d];
      if (std::find(readers.begin(), readers.end(), b) == readers.end()) readers.push_back(b);
    }
  }

  // Kahn's algorithm, preferring insertion order among ready blocks.
  std::vector<std::size_t> pending(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<std::size_t> unique = r.deps[b];
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    pending[b] = unique.size();
  }
  std::vector<bool> done(nb, false);
  while (r.topological_order.size() < nb) {
    std::size_t next = nb;
    for (std::size_t b = 0; b < nb; ++b) {
      if (!done[b] && pending[b] == 0) {
        next = b;
        break;
      }
    }
    if (next == nb) {
      throw Error(ErrorCode::kCyclicDependency, "block dependencies contain a cycle");
    }
    done[next] = true;
    r.topological_order.push_back(next);
    for (std::size_t b = 0; b < nb; ++b) {
      if (done[b]) continue;
      if (std::find(r.deps[b].begin(), r.deps[b].end(), next) != r.deps[b].end()) --pending[b];
    }
  }
  return r;
}

Eigen::VectorXd StackSolution::block(std::string_view name) const {
  const auto& label = find_label(labels, name);
  return theta.segment(static_cast<Eigen::Index>(label.offset),
                       static_cast<Eigen::Index>(label.dim));
}

RowMatrix stack_values(const EstimatingStack& stack, const TrialDataset& ds,
                       const Eigen::VectorXd& theta) {
  const auto r = stack.resolve();
  if (static_cast<std::size_t>(theta.size()) != r.total_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "theta length does not match the stack");
  }
  RowMatrix values = RowMatrix::Zero(ds.size(), r.total_dim);
  for (std::size_t b = 0; b < stack.blocks().size(); ++b) {
    const auto& block = stack.blocks()[b];
    const BlockParams params(theta.data(), r.segments[b].data(), r.segments[b].size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      block.eval(ds, i, params, values.data() + i * r.total_dim + r.labels[b].offset);
    }
  }
  return values;
}

Eigen::VectorXd stack_mean(const EstimatingStack& stack, const TrialDataset& ds,
                           const Eigen::VectorXd& theta) {
  const RowMatrix values = stack_values(stack, ds, theta);
  const std::size_t p = static_cast<std::size_t>(values.cols());
  Eigen::VectorXd mean(p);
  for (std::size_t k = 0; k < p; ++k) {
    mean[k] = pairwise_sum(values.data() + k, ds.size(), p) / static_cast<double>(ds.size());
  }
  return mean;
}

StackSolution solve_stack(const EstimatingStack& stack, const TrialDataset& ds,
                          const SolveOptions& options) {
  if (ds.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty dataset");
  const auto r = stack.resolve();
  StackSolution solution;
  solution.labels = r.labels;
  solution.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r.total_dim));
  for (std::size_t b : r.topological_order) {
    const auto& block = stack.blocks()[b];
    const BlockParams params(solution.theta.data(), r.segments[b].data(), r.segments[b].size());
    Eigen::VectorXd value;
    try {
      value = block.solve(ds, params, options);
    } catch (const Error& e) {
      throw Error(ErrorCode::kBlockSolveFailed, e.code(),
                  "block '" + block.name + "': " + std::string(error_code_name(e.code())) +
                      ": " + e.what());
    }
    if (static_cast<std::size_t>(value.size()) != block.dim || !value.allFinite()) {
      throw Error(ErrorCode::kBlockSolveFailed, ErrorCode::kDimensionMismatch,
                  "block '" + block.name + "' solver returned an invalid vector");
    }
    solution.theta.segment(static_cast<Eigen::Index>(r.labels[b].offset),
                           static_cast<Eigen::Index>(block.dim)) = value;
  }
  const Eigen::VectorXd residual = stack_mean(stack, ds, solution.theta);
  solution.residual_norm = residual.lpNorm<Eigen::Infinity>();
  if (!(solution.residual_norm <= options.tol)) {
    throw Error(ErrorCode::kResidualCheckFailed,
                "stacked residual " + std::to_string(solution.residual_norm) +
                    " exceeds tolerance; block solvers disagree with their estimating functions");
  }
  return solution;
}

Eigen::MatrixXd numerical_jacobian(const EstimatingStack& stack, const TrialDataset& ds,
                                   const Eigen::VectorXd& theta) {
  const auto r = stack.resolve();
  if (static_cast<std::size_t>(theta.size()) != r.total_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "theta length does not match the stack");
  }
  if (!theta.allFinite()) throw Error(ErrorCode::kInvalidArgument, "theta is not finite");
  const double n = static_cast<double>(ds.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(theta.size(), theta.size());
  std::vector<double> scratch;
  Eigen::VectorXd plus = theta, minus = theta;
  for (std::size_t b = 0; b < stack.blocks().size(); ++b) {
    for (std::size_t k = 0; k < r.labels[b].dim; ++k) {
      const auto j = static_cast<Eigen::Index>(r.labels[b].offset + k);
      const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
      plus[j] = theta[j] + h;
      minus[j] = theta[j] - h;
      const double span = plus[j] - minus[j];
      for (std::size_t reader : r.readers[b]) {
        const auto& block = stack.blocks()[reader];
        const Eigen::VectorXd up = block_sums(block, r.segments[reader], ds, plus, scratch);
        const Eigen::VectorXd down = block_sums(block, r.segments[reader], ds, minus, scratch);
        const Eigen::VectorXd column = (up - down) / (span * n);
        if (!column.allFinite()) {
          throw Error(ErrorCode::kNonFiniteDerivative,
                      "non-finite derivative of block '" + block.name + "'");
        }
        jac.block(static_cast<Eigen::Index>(r.labels[reader].offset), j,
                  static_cast<Eigen::Index>(block.dim), 1) = column;
      }
      plus[j] = theta[j];
      minus[j] = theta[j];
    }
  }
  return jac;
}

SandwichResult sandwich_covariance(const EstimatingStack& stack, const TrialDataset& ds,
                                   const StackSolution& solution) {
  SandwichResult result;
  result.theta_hat = solution.theta;
  result.labels = solution.labels;
  result.residual_norm = solution.residual_norm;
  const double n = static_cast<double>(ds.size());

  result.bread = -numerical_jacobian(stack, ds, solution.theta);
  const RowMatrix values = stack_values(stack, ds, solution.theta);
  result.meat = (values.transpose() * values) / n;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(result.bread);
  const auto& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  const double cond = smallest > 0 ? sv[0] / smallest : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12)) {
    throw Error(ErrorCode::kSingularBread,
                "bread matrix is singular (condition " + std::to_string(cond) + ")");
  }
  const Eigen::MatrixXd inverse = result.bread.fullPivLu().inverse();
  Eigen::MatrixXd cov = inverse * result.meat * inverse.transpose() / n;
  result.covariance = 0.5 * (cov + cov.transpose());
  return result;
}

SandwichResult fit_stack(const EstimatingStack& stack, const TrialDataset& ds,
                         const SolveOptions& options) {
  return sandwich_covariance(stack, ds, solve_stack(stack, ds, options));
}

std::size_t SandwichResult::index(std::string_view name, std::size_t k) const {
  const auto& label = find_label(labels, name);
  if (k >= label.dim) {
    throw Error(ErrorCode::kInvalidArgument, "component out of range for block '" +
                                                 std::string(name) + "'");
  }
  return label.offset + k;
}

double SandwichResult::variance(std::string_view name, std::size_t k) const {
  const auto i = static_cast<Eigen::Index>(index(name, k));
  return covariance(i, i);
}

double SandwichResult::covariance_between(std::string_view a, std::string_view b) const {
  return covariance(static_cast<Eigen::Index>(index(a)), static_cast<Eigen::Index>(index(b)));
}

double SandwichResult::standard_error(std::string_view name, std::size_t k) const {
  return std::sqrt(std::max(0.0, variance(name, k)));
}

}  // namespace robustec::mest
