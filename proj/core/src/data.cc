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

#include "robustec/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_map>

#include "robustec/error.h"

namespace robustec {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = nl == std::string_view::npos
                                ? text.substr(start)
                                : text.substr(start, nl - start);
    if (trim(line).size() > 0) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

bool parse_real(std::string_view cell, double& value) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  return ec == std::errc() && ptr == end;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TrialDataset::TrialDataset(RowMatrix covariates,
                           std::vector<std::uint8_t> source,
                           std::vector<std::uint8_t> treatment,
                           Eigen::VectorXd outcome,
                           std::vector<std::string> covariate_names, double p1,
                           bool treatment_variation_allowed)
    : covariates_(std::move(covariates)),
      source_(std::move(source)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      names_(std::move(covariate_names)),
      p1_(p1),
      variation_allowed_(treatment_variation_allowed) {
  const auto n = static_cast<std::size_t>(outcome_.size());
  if (source_.size() != n || treatment_.size() != n ||
      static_cast<std::size_t>(covariates_.rows()) != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "covariates, S, A and Y must have the same number of rows");
  }
  if (names_.empty()) {
    for (std::size_t j = 0; j < dim(); ++j) names_.push_back("X" + std::to_string(j + 1));
  }
  if (names_.size() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "covariate name count does not match covariate dimension");
  }
  if (!(p1_ > 0.0 && p1_ < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "randomization probability p1 must lie in (0,1)");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (source_[i] > 1 || treatment_[i] > 1) {
      throw Error(ErrorCode::kInvalidIndicator, "S and A must be 0 or 1",
                  static_cast<long>(i) + 1);
    }
    if (!std::isfinite(outcome_[i]) || !covariates_.row(i).allFinite()) {
      throw Error(ErrorCode::kNonNumericCell, "non-finite value",
                  static_cast<long>(i) + 1);
    }
    n_trial_ += source_[i];
  }
}

TrialDataset TrialDataset::from_observations(
    const std::vector<Observation>& rows, double p1,
    bool treatment_variation_allowed, std::vector<std::string> names) {
  const std::size_t d = rows.empty() ? names.size() : rows.front().x.size();
  if (names.empty()) {
    for (std::size_t j = 0; j < d; ++j) names.push_back("X" + std::to_string(j + 1));
  }
  RowMatrix x(rows.size(), d);
  std::vector<std::uint8_t> s(rows.size()), a(rows.size());
  Eigen::VectorXd y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].x.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "observation " + std::to_string(i) + " has wrong dimension");
    }
    if ((rows[i].s != 0 && rows[i].s != 1) || (rows[i].a != 0 && rows[i].a != 1)) {
      throw Error(ErrorCode::kInvalidIndicator, "S and A must be 0 or 1",
                  static_cast<long>(i) + 1);
    }
    for (std::size_t j = 0; j < d; ++j) x(i, j) = rows[i].x[j];
    s[i] = static_cast<std::uint8_t>(rows[i].s);
    a[i] = static_cast<std::uint8_t>(rows[i].a);
    y[i] = rows[i].y;
  }
  return TrialDataset(std::move(x), std::move(s), std::move(a), std::move(y),
                      std::move(names), p1, treatment_variation_allowed);
}

Observation TrialDataset::observation(std::size_t i) const {
  Observation o;
  o.x.assign(covariate_row(i), covariate_row(i) + dim());
  o.s = source_[i];
  o.a = treatment_[i];
  o.y = outcome_[i];
  return o;
}

std::size_t TrialDataset::count(int s, int a) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    c += (source_[i] == s && treatment_[i] == a);
  }
  return c;
}

TrialDataset parse_dataset(std::string_view csv_text, const CsvSchema& schema,
                           double p1, bool treatment_variation_allowed) {
  const auto lines = split_lines(csv_text);
  if (lines.empty()) throw Error(ErrorCode::kEmptyFile, "input has no header row");

  const auto header = split_fields(lines.front());
  std::unordered_map<std::string_view, std::size_t> column_of;
  for (std::size_t j = 0; j < header.size(); ++j) column_of.emplace(header[j], j);

  auto locate = [&](const std::string& name) {
    auto it = column_of.find(name);
    if (it == column_of.end()) {
      throw Error(ErrorCode::kMissingColumn, "missing column '" + name + "'", -1,
                  name);
    }
    return it->second;
  };
  const std::size_t s_col = locate(schema.source);
  const std::size_t a_col = locate(schema.treatment);
  const std::size_t y_col = locate(schema.outcome);

  std::vector<std::string> names = schema.covariates;
  if (names.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j != s_col && j != a_col && j != y_col) names.emplace_back(header[j]);
    }
  }
  std::vector<std::size_t> x_cols;
  for (const auto& name : names) x_cols.push_back(locate(name));

  const std::size_t n = lines.size() - 1;
  if (n == 0) throw Error(ErrorCode::kEmptyFile, "input has no data rows");

  RowMatrix x(n, x_cols.size());
  std::vector<std::uint8_t> s(n), a(n);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long row = static_cast<long>(i) + 1;
    const auto fields = split_fields(lines[i + 1]);
    auto cell = [&](std::size_t col) -> std::string_view {
      if (col >= fields.size()) {
        throw Error(ErrorCode::kNonNumericCell, "row has too few fields", row,
                    std::string(header[col]));
      }
      return fields[col];
    };
    auto number = [&](std::size_t col) {
      double v = 0.0;
      if (!parse_real(cell(col), v) || !std::isfinite(v)) {
        throw Error(ErrorCode::kNonNumericCell,
                    "non-numeric value '" + std::string(cell(col)) + "' in row " +
                        std::to_string(row) + ", column '" +
                        std::string(header[col]) + "'",
                    row, std::string(header[col]));
      }
      return v;
    };
    auto indicator = [&](std::size_t col) -> std::uint8_t {
      double v = 0.0;
      if (!parse_real(cell(col), v) || (v != 0.0 && v != 1.0)) {
        throw Error(ErrorCode::kInvalidIndicator,
                    "column '" + std::string(header[col]) + "' must be 0 or 1 in row " +
                        std::to_string(row),
                    row, std::string(header[col]));
      }
      return v == 1.0 ? 1 : 0;
    };
    s[i] = indicator(s_col);
    a[i] = indicator(a_col);
    y[i] = number(y_col);
    for (std::size_t j = 0; j < x_cols.size(); ++j) x(i, j) = number(x_cols[j]);
  }
  return TrialDataset(std::move(x), std::move(s), std::move(a), std::move(y),
                      std::move(names), p1, treatment_variation_allowed);
}

std::string serialize_dataset(const TrialDataset& ds) {
  std::string out = "S,A,Y";
  for (const auto& name : ds.covariate_names()) out += "," + name;
  out += "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += std::to_string(ds.source(i)) + "," + std::to_string(ds.treatment(i)) +
           "," + format_real(ds.outcome(i));
    const double* x = ds.covariate_row(i);
    for (std::size_t j = 0; j < ds.dim(); ++j) out += "," + format_real(x[j]);
    out += "\n";
  }
  return out;
}

std::string_view issue_code_name(IssueCode code) {
  switch (code) {
    case IssueCode::kExternalTreated: return "ExternalTreated";
    case IssueCode::kMissingArm: return "MissingArm";
    case IssueCode::kMissingExternal: return "MissingExternal";
    case IssueCode::kTooFewTrial: return "TooFewTrial";
  }
  return "Unknown";
}

ValidationReport validate(const TrialDataset& ds) {
  ValidationReport report;
  if (!ds.treatment_variation_allowed()) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.source(i) == 0 && ds.treatment(i) == 1) {
        report.issues.push_back({static_cast<long>(i), IssueCode::kExternalTreated,
                                 "external row is treated but treatment variation "
                                 "is not allowed"});
      }
    }
  }
  if (ds.count(1, 1) == 0) {
    report.issues.push_back({-1, IssueCode::kMissingArm, "no trial treated rows"});
  }
  if (ds.count(1, 0) == 0) {
    report.issues.push_back({-1, IssueCode::kMissingArm, "no trial control rows"});
  }
  if (ds.n_external() == 0) {
    report.issues.push_back({-1, IssueCode::kMissingExternal, "no external rows"});
  }
  if (ds.n_trial() < 2) {
    report.issues.push_back({-1, IssueCode::kTooFewTrial,
                             "fewer than two trial rows"});
  }
  report.ok = report.issues.empty();
  return report;
}

TrialDataset DatasetView::materialize() const {
  const std::size_t d = base_->dim();
  RowMatrix x(rows_.size(), d);
  std::vector<std::uint8_t> s(rows_.size()), a(rows_.size());
  Eigen::VectorXd y(rows_.size());
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const std::size_t i = rows_[k];
    x.row(k) = base_->covariates().row(i);
    s[k] = static_cast<std::uint8_t>(base_->source(i));
    a[k] = static_cast<std::uint8_t>(base_->treatment(i));
    y[k] = base_->outcome(i);
  }
  return TrialDataset(std::move(x), std::move(s), std::move(a), std::move(y),
                      base_->covariate_names(), base_->p1(),
                      base_->treatment_variation_allowed());
}

DatasetView subset(const TrialDataset& ds, const RowPredicate& predicate,
                   bool require_nonempty) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (predicate(ds.source(i), ds.treatment(i))) rows.push_back(i);
  }
  if (require_nonempty && rows.empty()) {
    throw Error(ErrorCode::kEmptySubset, "no row satisfies the predicate");
  }
  return DatasetView(ds, std::move(rows));
}

}  // namespace robustec
