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

#include <cstring>

#include "robustec/data.h"
#include "robustec/error.h"

namespace robustec {
namespace {

TrialDataset small_dataset() {
  return TrialDataset::from_observations({{{0.5, 1.0}, 1, 1, 2.0},
                                          {{-0.5, 2.0}, 1, 0, 1.0},
                                          {{1.5, -1.0}, 0, 0, 3.0},
                                          {{0.25, 0.0}, 1, 1, 4.0}},
                                         0.5);
}

ErrorCode parse_error(const std::string& text, CsvSchema schema = {}) {
  try {
    parse_dataset(text, schema, 0.5);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return ErrorCode::kInvalidArgument;
}

TEST(TrialDataset, CountsAndAccessors) {
  const auto ds = small_dataset();
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_EQ(ds.n_trial(), 3u);
  EXPECT_EQ(ds.n_external(), 1u);
  EXPECT_DOUBLE_EQ(ds.trial_fraction(), 0.75);
  EXPECT_EQ(ds.count(1, 1), 2u);
  EXPECT_EQ(ds.count(1, 0), 1u);
  EXPECT_EQ(ds.count(0, 0), 1u);
  EXPECT_EQ(ds.covariate_row(2)[0], 1.5);
  EXPECT_EQ(ds.covariate_names(), (std::vector<std::string>{"X1", "X2"}));
  EXPECT_DOUBLE_EQ(ds.propensity(1), 0.5);
  const Observation o = ds.observation(1);
  EXPECT_EQ(o.s, 1);
  EXPECT_EQ(o.a, 0);
  EXPECT_EQ(o.y, 1.0);
}

TEST(TrialDataset, RejectsInvalidConstruction) {
  EXPECT_THROW(TrialDataset::from_observations({{{0.0}, 1, 1, 1.0}}, 1.0), Error);
  EXPECT_THROW(TrialDataset::from_observations({{{0.0}, 1, 1, 1.0}}, 0.0), Error);
  EXPECT_THROW(TrialDataset::from_observations({{{0.0}, 2, 1, 1.0}}, 0.5), Error);
  EXPECT_THROW(TrialDataset::from_observations({{{0.0}, 1, 1, 1.0}, {{0.0, 1.0}, 1, 0, 1.0}}, 0.5),
               Error);
  EXPECT_THROW(TrialDataset::from_observations({{{std::nan("")}, 1, 1, 1.0}}, 0.5), Error);
}

TEST(ParseDataset, ReadsColumnsByName) {
  const auto ds = parse_dataset("Y,age,S,A\n1.5,30,1,1\n2.5,40,1,0\n3,50,0,0\n", {}, 0.4);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.dim(), 1u);
  EXPECT_EQ(ds.covariate_names().front(), "age");
  EXPECT_DOUBLE_EQ(ds.outcome(1), 2.5);
  EXPECT_DOUBLE_EQ(ds.covariate_row(2)[0], 50.0);
  EXPECT_EQ(ds.source(2), 0);
  EXPECT_DOUBLE_EQ(ds.p1(), 0.4);
}

TEST(ParseDataset, CustomSchemaAndCovariateSubset) {
  CsvSchema schema;
  schema.source = "trial";
  schema.treatment = "arm";
  schema.outcome = "out";
  schema.covariates = {"b"};
  const auto ds = parse_dataset("a,b,trial,arm,out\n9,1,1,1,5\n8,2,1,0,6\n", schema, 0.5);
  EXPECT_EQ(ds.dim(), 1u);
  EXPECT_DOUBLE_EQ(ds.covariate_row(1)[0], 2.0);
}

TEST(ParseDataset, Errors) {
  EXPECT_EQ(parse_error(""), ErrorCode::kEmptyFile);
  EXPECT_EQ(parse_error("S,A,Y\n"), ErrorCode::kEmptyFile);
  EXPECT_EQ(parse_error("S,A,X\n1,1,1\n"), ErrorCode::kMissingColumn);
  EXPECT_EQ(parse_error("S,A,Y\n1,1,abc\n"), ErrorCode::kNonNumericCell);
  EXPECT_EQ(parse_error("S,A,Y\n1,1,inf\n"), ErrorCode::kNonNumericCell);
  EXPECT_EQ(parse_error("S,A,Y\n1,2,1\n"), ErrorCode::kInvalidIndicator);
  EXPECT_EQ(parse_error("S,A,Y\n1,1\n"), ErrorCode::kNonNumericCell);
}

TEST(ParseDataset, ErrorLocatesCell) {
  try {
    parse_dataset("S,A,Y,X1\n1,1,2,3\n1,0,2,oops\n", {}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.row(), 2);
    EXPECT_EQ(e.column(), "X1");
  }
}

TEST(ParseDataset, SerializeRoundTripIsBitExact) {
  const auto ds = TrialDataset::from_observations(
      {{{0.1, 1.0 / 3.0}, 1, 1, 2.0 / 7.0}, {{-1e-300, 12345.678}, 1, 0, -0.0}, {{3.0, 4.0}, 0, 0, 1e17}},
      0.5);
  const auto back = parse_dataset(serialize_dataset(ds), {}, 0.5);
  ASSERT_EQ(back.size(), ds.size());
  ASSERT_EQ(back.dim(), ds.dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(std::memcmp(&ds.outcomes()[static_cast<Eigen::Index>(i)],
                          &back.outcomes()[static_cast<Eigen::Index>(i)], sizeof(double)),
              0);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      EXPECT_EQ(ds.covariate_row(i)[j], back.covariate_row(i)[j]);
    }
    EXPECT_EQ(ds.source(i), back.source(i));
    EXPECT_EQ(ds.treatment(i), back.treatment(i));
  }
}

TEST(Validate, FlagsExternalTreatedRows) {
  const auto ds = TrialDataset::from_observations(
      {{{0.0}, 1, 1, 1.0}, {{0.0}, 1, 0, 1.0}, {{0.0}, 0, 1, 1.0}, {{0.0}, 0, 1, 2.0}}, 0.5);
  const auto report = validate(ds);
  EXPECT_FALSE(report.ok);
  ASSERT_EQ(report.issues.size(), 2u);
  EXPECT_EQ(report.issues[0].row, 2);
  EXPECT_EQ(report.issues[0].code, IssueCode::kExternalTreated);

  const auto allowed = TrialDataset::from_observations(
      {{{0.0}, 1, 1, 1.0}, {{0.0}, 1, 0, 1.0}, {{0.0}, 0, 1, 1.0}}, 0.5, true);
  EXPECT_TRUE(validate(allowed).ok);
}

TEST(Validate, DatasetLevelIssues) {
  const auto no_control = TrialDataset::from_observations({{{0.0}, 1, 1, 1.0}, {{0.0}, 1, 1, 1.0}}, 0.5);
  const auto report = validate(no_control);
  EXPECT_FALSE(report.ok);
  bool missing_arm = false, missing_external = false;
  for (const auto& i : report.issues) {
    missing_arm |= i.code == IssueCode::kMissingArm;
    missing_external |= i.code == IssueCode::kMissingExternal;
  }
  EXPECT_TRUE(missing_arm);
  EXPECT_TRUE(missing_external);
  EXPECT_TRUE(validate(small_dataset()).ok);
}

TEST(Subset, PreservesOrderAndMaterializes) {
  const auto ds = small_dataset();
  const auto view = subset(ds, [](int s, int) { return s == 1; });
  ASSERT_EQ(view.size(), 3u);
  EXPECT_EQ(view.base_index(2), 3u);
  const auto m = view.materialize();
  EXPECT_EQ(m.size(), 3u);
  EXPECT_DOUBLE_EQ(m.outcome(2), 4.0);
  EXPECT_THROW(subset(ds, [](int s, int a) { return s == 0 && a == 1; }, true), Error);
  EXPECT_TRUE(subset(ds, [](int s, int a) { return s == 0 && a == 1; }).empty());
}

}  // namespace
}  // namespace robustec
