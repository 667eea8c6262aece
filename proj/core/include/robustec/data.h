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

// Composite trial + external-control data: the trial rows (S=1) with a known
// constant randomization probability p1, followed or interleaved by external
// rows (S=0) that normally received control only.

#ifndef ROBUSTEC_DATA_H_
#define ROBUSTEC_DATA_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace robustec {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Observation {
  std::vector<double> x;
  int s = 0;
  int a = 0;
  double y = 0.0;
};

// Immutable after construction. The constructor enforces the per-row
// invariants (finite values, binary indicators, consistent dimension, p1 in
// (0,1)); dataset-level structure is checked by validate(). Empty covariate
// names default to X1..Xd.
class TrialDataset {
 public:
  TrialDataset(RowMatrix covariates, std::vector<std::uint8_t> source,
               std::vector<std::uint8_t> treatment, Eigen::VectorXd outcome,
               std::vector<std::string> covariate_names, double p1,
               bool treatment_variation_allowed = false);

  // Covariate names default to X1..Xd.
  static TrialDataset from_observations(const std::vector<Observation>& rows,
                                        double p1,
                                        bool treatment_variation_allowed = false,
                                        std::vector<std::string> names = {});

  std::size_t size() const { return outcome_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(covariates_.cols()); }
  std::size_t n_trial() const { return n_trial_; }
  std::size_t n_external() const { return size() - n_trial_; }
  // q-hat = n1 / n; derived on demand.
  double trial_fraction() const {
    return static_cast<double>(n_trial_) / static_cast<double>(size());
  }

  int source(std::size_t i) const { return source_[i]; }
  int treatment(std::size_t i) const { return treatment_[i]; }
  double outcome(std::size_t i) const { return outcome_[i]; }
  // Pointer to the d covariates of row i (contiguous).
  const double* covariate_row(std::size_t i) const {
    return covariates_.data() + i * dim();
  }
  Observation observation(std::size_t i) const;

  const RowMatrix& covariates() const { return covariates_; }
  const Eigen::VectorXd& outcomes() const { return outcome_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  double p1() const { return p1_; }
  // Known randomization probability e_a in the trial.
  double propensity(int a) const { return a == 1 ? p1_ : 1.0 - p1_; }
  bool treatment_variation_allowed() const { return variation_allowed_; }

  std::size_t count(int s, int a) const;

 private:
  RowMatrix covariates_;
  std::vector<std::uint8_t> source_;
  std::vector<std::uint8_t> treatment_;
  Eigen::VectorXd outcome_;
  std::vector<std::string> names_;
  double p1_;
  bool variation_allowed_;
  std::size_t n_trial_ = 0;
};

// Column roles for CSV ingestion. An empty covariate list selects every
// column that is not S, A or Y, in file order.
struct CsvSchema {
  std::string source = "S";
  std::string treatment = "A";
  std::string outcome = "Y";
  std::vector<std::string> covariates;
};

TrialDataset parse_dataset(std::string_view csv_text, const CsvSchema& schema,
                           double p1, bool treatment_variation_allowed = false);

// Writes S,A,Y followed by the covariate columns with 17 significant digits,
// so parse_dataset(serialize_dataset(ds), ...) reproduces ds bit-exactly.
std::string serialize_dataset(const TrialDataset& ds);

enum class IssueCode {
  kExternalTreated,
  kMissingArm,
  kMissingExternal,
  kTooFewTrial,
};

std::string_view issue_code_name(IssueCode code);

struct ValidationIssue {
  long row;  // 0-based data row, -1 for dataset-level issues
  IssueCode code;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;
};

ValidationReport validate(const TrialDataset& ds);

// Non-owning, order-preserving selection of rows. The viewed dataset must
// outlive the view.
class DatasetView {
 public:
  DatasetView(const TrialDataset& base, std::vector<std::size_t> rows)
      : base_(&base), rows_(std::move(rows)) {}

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::size_t base_index(std::size_t k) const { return rows_[k]; }
  const std::vector<std::size_t>& rows() const { return rows_; }
  const TrialDataset& base() const { return *base_; }
  Observation observation(std::size_t k) const {
    return base_->observation(rows_[k]);
  }
  double p1() const { return base_->p1(); }
  const std::vector<std::string>& covariate_names() const {
    return base_->covariate_names();
  }
  TrialDataset materialize() const;

 private:
  const TrialDataset* base_;
  std::vector<std::size_t> rows_;
};

using RowPredicate = std::function<bool(int s, int a)>;

// Throws kEmptySubset when require_nonempty and no row matches.
DatasetView subset(const TrialDataset& ds, const RowPredicate& predicate,
                   bool require_nonempty = false);

}  // namespace robustec

#endif  // ROBUSTEC_DATA_H_
