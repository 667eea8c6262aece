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

#include "robustec/stacks.h"

#include <cmath>
#include <utility>

#include "robustec/error.h"

namespace robustec::stacks {
namespace {

using mest::BlockParams;
using mest::ParameterBlock;
using mest::SolveOptions;

double prob_from(const double* coef, FeatureMap map, const TrialDataset& ds, std::size_t row) {
  return clip_probability(sigmoid(linear_predictor(coef, map, ds.covariate_row(row), ds.dim())));
}

// Fitted or known e_1(X) for a row.
double treated_propensity(const TrialDataset& ds, std::size_t row, const BlockParams& params,
                          FeatureMap map, long alpha_dep) {
  if (alpha_dep < 0) return ds.p1();
  return prob_from(params.dep(static_cast<std::size_t>(alpha_dep)).data(), map, ds, row);
}

std::vector<std::size_t> positive_rows(const TrialDataset& ds,
                                       const std::function<double(std::size_t)>& weight,
                                       std::vector<double>& w) {
  std::vector<std::size_t> rows;
  w.clear();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double wi = weight(i);
    if (wi > 0.0) {
      rows.push_back(i);
      w.push_back(wi);
    }
  }
  return rows;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

double hstar_weight(double eta0, double e1) {
  const double e0 = 1.0 - e1;
  return eta0 * e1 / (e0 * e0);
}

ParameterBlock trial_fraction_block() {
  ParameterBlock b;
  b.name = "q";
  b.dim = 1;
  b.eval = [](const TrialDataset& ds, std::size_t row, const BlockParams& p, double* out) {
    out[0] = ds.source(row) - p.self_scalar();
  };
  b.solve = [](const TrialDataset& ds, const BlockParams&, const SolveOptions&) {
    Eigen::VectorXd q(1);
    q[0] = ds.trial_fraction();
    return q;
  };
  return b;
}

ParameterBlock logistic_block(std::string name, std::size_t dim, FeatureMap map,
                              IndicatorFn row_weight, IndicatorFn label) {
  ParameterBlock b;
  b.name = std::move(name);
  b.dim = feature_count(dim, map);
  b.eval = [map, row_weight, label](const TrialDataset& ds, std::size_t row, const BlockParams& p,
                                    double* out) {
    const int s = ds.source(row), a = ds.treatment(row);
    const double w = row_weight(s, a);
    const double* x = ds.covariate_row(row);
    if (w == 0.0) {
      write_scaled_features(x, ds.dim(), map, 0.0, out);
      return;
    }
    const double prob = sigmoid(linear_predictor(p.self().data(), map, x, ds.dim()));
    write_scaled_features(x, ds.dim(), map, w * (label(s, a) - prob), out);
  };
  b.solve = [map, row_weight, label](const TrialDataset& ds, const BlockParams&,
                                     const SolveOptions& options) {
    std::vector<double> w;
    auto rows = positive_rows(
        ds, [&](std::size_t i) { return row_weight(ds.source(i), ds.treatment(i)); }, w);
    if (rows.empty()) throw Error(ErrorCode::kEmptySubset, "logistic block has no rows");
    Eigen::VectorXd labels(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      labels[static_cast<Eigen::Index>(k)] = label(ds.source(rows[k]), ds.treatment(rows[k]));
    }
    const DatasetView view(ds, std::move(rows));
    LogisticFitOptions fit;
    fit.max_iter = std::max(options.max_iter, 25);
    return fit_logistic(make_design(view, map), labels, to_vector(w), fit).coefficients;
  };
  return b;
}

ParameterBlock weighted_ls_block(std::string name, std::size_t dim, FeatureMap map,
                                 std::vector<std::string> depends_on, WeightFn weight) {
  ParameterBlock b;
  b.name = std::move(name);
  b.dim = feature_count(dim, map);
  b.depends_on = std::move(depends_on);
  b.eval = [map, weight](const TrialDataset& ds, std::size_t row, const BlockParams& p,
                         double* out) {
    const double* x = ds.covariate_row(row);
    const double w = weight(ds, row, p);
    if (w == 0.0) {
      write_scaled_features(x, ds.dim(), map, 0.0, out);
      return;
    }
    const double r = ds.outcome(row) - linear_predictor(p.self().data(), map, x, ds.dim());
    write_scaled_features(x, ds.dim(), map, w * r, out);
  };
  b.solve = [map, weight](const TrialDataset& ds, const BlockParams& p, const SolveOptions&) {
    std::vector<double> w;
    auto rows = positive_rows(ds, [&](std::size_t i) { return weight(ds, i, p); }, w);
    if (rows.empty()) throw Error(ErrorCode::kEmptySubset, "regression block has no rows");
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      y[static_cast<Eigen::Index>(k)] = ds.outcome(rows[k]);
    }
    const DatasetView view(ds, std::move(rows));
    return fit_linear_wls(make_design(view, map), y, to_vector(w)).coefficients;
  };
  return b;
}

ParameterBlock randomization_aware_mean_block(std::string name, int arm, FeatureMap map,
                                              std::string outcome_block, PropensitySpec propensity,
                                              bool outcome_only) {
  ParameterBlock b;
  b.name = std::move(name);
  b.dim = 1;
  b.depends_on = {"q"};
  const bool has_h = !outcome_block.empty();
  if (has_h) b.depends_on.push_back(outcome_block);
  long alpha_dep = -1;
  if (propensity.estimated && !outcome_only) {
    alpha_dep = static_cast<long>(b.depends_on.size());
    b.depends_on.push_back(propensity.block);
  }
  if (outcome_only && !has_h) {
    throw Error(ErrorCode::kInvalidArgument, "outcome-only mean needs an outcome block");
  }
  // Bracketed term before subtracting psi; zero outside the trial.
  auto term = [arm, map, has_h, alpha_dep, outcome_only](const TrialDataset& ds, std::size_t row,
                                                          const BlockParams& p) {
    const double h =
        has_h ? linear_predictor(p.dep(1).data(), map, ds.covariate_row(row), ds.dim()) : 0.0;
    if (outcome_only) return h;
    if (ds.treatment(row) != arm) return h;
    const double e1 = treated_propensity(ds, row, p, map, alpha_dep);
    const double ea = arm == 1 ? e1 : 1.0 - e1;
    return (ds.outcome(row) - h) / ea + h;
  };
  b.eval = [term](const TrialDataset& ds, std::size_t row, const BlockParams& p, double* out) {
    if (ds.source(row) != 1) {
      out[0] = 0.0;
      return;
    }
    out[0] = (term(ds, row, p) - p.self_scalar()) / p.dep_scalar(0);
  };
  b.solve = [term](const TrialDataset& ds, const BlockParams& p, const SolveOptions&) {
    double sum = 0.0;
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.source(i) != 1) continue;
      sum += term(ds, i, p);
      ++n1;
    }
    if (n1 == 0) throw Error(ErrorCode::kEmptySubset, "no trial rows");
    Eigen::VectorXd psi(1);
    psi[0] = sum / static_cast<double>(n1);
    return psi;
  };
  return b;
}

ParameterBlock difference_block(std::string name, std::string minuend, std::string subtrahend) {
  ParameterBlock b;
  b.name = std::move(name);
  b.dim = 1;
  b.depends_on = {std::move(minuend), std::move(subtrahend)};
  b.eval = [](const TrialDataset&, std::size_t, const BlockParams& p, double* out) {
    out[0] = p.dep_scalar(0) - p.dep_scalar(1) - p.self_scalar();
  };
  b.solve = [](const TrialDataset&, const BlockParams& p, const SolveOptions&) {
    Eigen::VectorXd t(1);
    t[0] = p.dep_scalar(0) - p.dep_scalar(1);
    return t;
  };
  return b;
}

ParameterBlock arm_mean_block(std::string name, int arm) {
  ParameterBlock b;
  b.name = std::move(name);
  b.dim = 1;
  b.eval = [arm](const TrialDataset& ds, std::size_t row, const BlockParams& p, double* out) {
    out[0] = (ds.source(row) == 1 && ds.treatment(row) == arm) ? ds.outcome(row) - p.self_scalar()
                                                                : 0.0;
  };
  b.solve = [arm](const TrialDataset& ds, const BlockParams&, const SolveOptions&) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.source(i) == 1 && ds.treatment(i) == arm) {
        sum += ds.outcome(i);
        ++n;
      }
    }
    if (n == 0) throw Error(ErrorCode::kMissingArm, "trial arm has no rows");
    Eigen::VectorXd mu(1);
    mu[0] = sum / static_cast<double>(n);
    return mu;
  };
  return b;
}

namespace {

PropensitySpec propensity_of(const StackOptions& o) { return {o.estimate_propensity, "alpha"}; }

void add_common(mest::EstimatingStack& st, std::size_t dim, const StackOptions& o) {
  st.add_block(trial_fraction_block());
  if (o.estimate_propensity) {
    st.add_block(logistic_block(
        "alpha", dim, o.features, [](int s, int) { return s == 1 ? 1.0 : 0.0; },
        [](int, int a) { return static_cast<double>(a); }));
  }
}

// Trial-arm least squares g_a: S 1(A=a) (Y - g_a(X)) x.
ParameterBlock arm_regression_block(std::string name, std::size_t dim, FeatureMap map, int arm) {
  return weighted_ls_block(std::move(name), dim, map, {},
                           [arm](const TrialDataset& ds, std::size_t row, const BlockParams&) {
                             return (ds.source(row) == 1 && ds.treatment(row) == arm) ? 1.0 : 0.0;
                           });
}

// Optimized plug-in for arm `arm` over pooled rows with A=arm:
// 1(A=arm) eta(X) e_other / e_arm^2, eta fitted by `eta_block`.
void add_optimized_plugin(mest::EstimatingStack& st, std::size_t dim, const StackOptions& o,
                          int arm, const std::string& eta_block, const std::string& name) {
  const FeatureMap map = o.features;
  if (o.unweighted_objective) {
    st.add_block(weighted_ls_block(
        name, dim, map, {}, [arm](const TrialDataset& ds, std::size_t row, const BlockParams&) {
          return ds.treatment(row) == arm ? 1.0 : 0.0;
        }));
    return;
  }
  st.add_block(logistic_block(
      eta_block, dim, map, [arm](int, int a) { return a == arm ? 1.0 : 0.0; },
      [](int s, int) { return static_cast<double>(s); }));
  std::vector<std::string> deps = {eta_block};
  const long alpha_dep = o.estimate_propensity ? 1 : -1;
  if (o.estimate_propensity) deps.push_back("alpha");
  st.add_block(weighted_ls_block(
      name, dim, map, deps,
      [arm, map, alpha_dep](const TrialDataset& ds, std::size_t row, const BlockParams& p) {
        if (ds.treatment(row) != arm) return 0.0;
        const double eta = prob_from(p.dep(0).data(), map, ds, row);
        const double e1 = treated_propensity(ds, row, p, map, alpha_dep);
        return arm == 0 ? hstar_weight(eta, e1) : hstar_weight(eta, 1.0 - e1);
      }));
}

}  // namespace

mest::EstimatingStack mean_difference_stack() {
  mest::EstimatingStack st;
  st.add_block(arm_mean_block("mu1", 1));
  st.add_block(arm_mean_block("mu0", 0));
  st.add_block(difference_block("tau", "mu1", "mu0"));
  return st;
}

mest::EstimatingStack ipw_stack(const StackOptions& o) {
  mest::EstimatingStack st;
  add_common(st, 0, StackOptions{o.features, false, false});
  st.add_block(randomization_aware_mean_block("psi1", 1, o.features, ""));
  st.add_block(randomization_aware_mean_block("psi0", 0, o.features, ""));
  st.add_block(difference_block("tau", "psi1", "psi0"));
  return st;
}

mest::EstimatingStack outcome_regression_stack(std::size_t dim, const StackOptions& o) {
  mest::EstimatingStack st;
  st.add_block(trial_fraction_block());
  st.add_block(arm_regression_block("zeta", dim, o.features, 1));
  st.add_block(arm_regression_block("iota", dim, o.features, 0));
  st.add_block(randomization_aware_mean_block("psi1", 1, o.features, "zeta", {}, true));
  st.add_block(randomization_aware_mean_block("psi0", 0, o.features, "iota", {}, true));
  st.add_block(difference_block("tau", "psi1", "psi0"));
  return st;
}

mest::EstimatingStack trial_only_stack(std::size_t dim, const StackOptions& o) {
  mest::EstimatingStack st;
  add_common(st, dim, o);
  st.add_block(arm_regression_block("zeta", dim, o.features, 1));
  st.add_block(randomization_aware_mean_block("psi1", 1, o.features, "zeta", propensity_of(o)));
  st.add_block(arm_regression_block("iota", dim, o.features, 0));
  st.add_block(randomization_aware_mean_block("psi0_g", 0, o.features, "iota", propensity_of(o)));
  st.add_block(difference_block("tau_g", "psi1", "psi0_g"));
  return st;
}

mest::EstimatingStack control_mean_stack(std::size_t dim, const StackOptions& o) {
  mest::EstimatingStack st;
  add_common(st, dim, o);
  add_optimized_plugin(st, dim, o, 0, "beta", "gamma");
  st.add_block(randomization_aware_mean_block("psi0", 0, o.features, "gamma", propensity_of(o)));
  return st;
}

namespace {

void add_optimized_tail(mest::EstimatingStack& st, std::size_t dim, const StackOptions& o) {
  if (o.borrow_treated_arm) {
    add_optimized_plugin(st, dim, o, 1, "beta1", "gamma1");
    st.add_block(randomization_aware_mean_block("psi1", 1, o.features, "gamma1", propensity_of(o)));
  } else {
    st.add_block(arm_regression_block("zeta", dim, o.features, 1));
    st.add_block(randomization_aware_mean_block("psi1", 1, o.features, "zeta", propensity_of(o)));
  }
  st.add_block(difference_block("tau_h", "psi1", "psi0"));
}

}  // namespace

mest::EstimatingStack optimized_stack(std::size_t dim, const StackOptions& o) {
  mest::EstimatingStack st = control_mean_stack(dim, o);
  add_optimized_tail(st, dim, o);
  return st;
}

mest::EstimatingStack combined_stack(std::size_t dim, const StackOptions& o) {
  mest::EstimatingStack st = optimized_stack(dim, o);
  std::string psi1 = "psi1";
  if (o.borrow_treated_arm) {
    st.add_block(arm_regression_block("zeta", dim, o.features, 1));
    st.add_block(randomization_aware_mean_block("psi1_g", 1, o.features, "zeta", propensity_of(o)));
    psi1 = "psi1_g";
  }
  st.add_block(arm_regression_block("iota", dim, o.features, 0));
  st.add_block(randomization_aware_mean_block("psi0_g", 0, o.features, "iota", propensity_of(o)));
  st.add_block(difference_block("tau_g", psi1, "psi0_g"));
  return st;
}

mest::EstimatingStack pooling_stack(std::size_t dim, const StackOptions& o) {
  if (!(o.pooling_ratio >= 0.0) || !std::isfinite(o.pooling_ratio)) {
    throw Error(ErrorCode::kInvalidArgument, "pooling ratio must be finite and non-negative");
  }
  const FeatureMap map = o.features;
  mest::EstimatingStack st;
  add_common(st, dim, o);
  st.add_block(logistic_block(
      "eta", dim, map, [](int, int) { return 1.0; },
      [](int s, int) { return static_cast<double>(s); }));
  std::string g0;
  if (o.pooling_trial_outcome_model) {
    g0 = "iota";
    st.add_block(arm_regression_block("iota", dim, map, 0));
  } else {
    g0 = "g0_pool";
    st.add_block(weighted_ls_block(
        "g0_pool", dim, map, {}, [](const TrialDataset& ds, std::size_t row, const BlockParams&) {
          return ds.treatment(row) == 0 ? 1.0 : 0.0;
        }));
  }

  // W = eta [S(1-A) + r(1-S)(1-A)] / [eta e0 + (1-eta) r]; r = 0 gives S(1-A)/e0.
  const double r = o.pooling_ratio;
  std::vector<std::string> deps = {"q", "eta", g0};
  const long alpha_dep = o.estimate_propensity ? 3 : -1;
  if (o.estimate_propensity) deps.push_back("alpha");
  auto term = [r, map, alpha_dep](const TrialDataset& ds, std::size_t row, const BlockParams& p) {
    const double* x = ds.covariate_row(row);
    const int s = ds.source(row), a = ds.treatment(row);
    const double g = linear_predictor(p.dep(2).data(), map, x, ds.dim());
    double w = 0.0;
    if (a == 0 && (s == 1 || r > 0.0)) {
      const double eta = prob_from(p.dep(1).data(), map, ds, row);
      const double e0 = 1.0 - treated_propensity(ds, row, p, map, alpha_dep);
      w = eta * (s == 1 ? 1.0 : r) / (eta * e0 + (1.0 - eta) * r);
    }
    return w * (ds.outcome(row) - g) + (s == 1 ? g : 0.0);
  };
  ParameterBlock zeta0;
  zeta0.name = "zeta0";
  zeta0.dim = 1;
  zeta0.depends_on = deps;
  zeta0.eval = [term](const TrialDataset& ds, std::size_t row, const BlockParams& p, double* out) {
    out[0] = (term(ds, row, p) - ds.source(row) * p.self_scalar()) / p.dep_scalar(0);
  };
  zeta0.solve = [term](const TrialDataset& ds, const BlockParams& p, const SolveOptions&) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) sum += term(ds, i, p);
    if (ds.n_trial() == 0) throw Error(ErrorCode::kEmptySubset, "no trial rows");
    Eigen::VectorXd z(1);
    z[0] = sum / static_cast<double>(ds.n_trial());
    return z;
  };
  st.add_block(std::move(zeta0));
  st.add_block(arm_regression_block("zeta", dim, map, 1));
  st.add_block(randomization_aware_mean_block("psi1", 1, map, "zeta", propensity_of(o)));
  st.add_block(difference_block("tau_pool", "psi1", "zeta0"));
  return st;
}

}  // namespace robustec::stacks
