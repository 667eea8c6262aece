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

#include "cli.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "robustec/data.h"
#include "robustec/error.h"
#include "robustec/estimators.h"
#include "robustec/rng.h"
#include "robustec/sim.h"

namespace robustec::cli {
namespace {

using nlohmann::json;

constexpr const char* kVersion = ROBUSTEC_VERSION_STRING;
constexpr int kSchema = 1;

// Raised for configuration problems that map to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class KeyType { kString, kDouble, kUnsigned, kBool, kList };

struct KeySpec {
  const char* key;
  const char* flag;
  KeyType type;
  const char* help;
};

// Every configurable setting, shared by the config file and the flags.
const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"input", "--input", KeyType::kString, "Input CSV path"},
      {"p1", "--p1", KeyType::kDouble, "Known randomization probability P(A=1|S=1)"},
      {"source_column", "--source-col", KeyType::kString, "Source indicator column (S)"},
      {"treatment_column", "--treatment-col", KeyType::kString, "Treatment column (A)"},
      {"outcome_column", "--outcome-col", KeyType::kString, "Outcome column (Y)"},
      {"covariates", "--covariates", KeyType::kList, "Covariate columns (default: all others)"},
      {"allow_external_treated", "--allow-external-treated", KeyType::kBool,
       "Accept treated rows among external data"},
      {"methods", "--methods", KeyType::kList, "Estimators to run"},
      {"features", "--features", KeyType::kString, "Working-model features: linear | quadratic"},
      {"confidence", "--confidence", KeyType::kDouble, "Confidence level of the intervals"},
      {"ratio", "--ratio", KeyType::kDouble, "Variance ratio r of the pooling estimator"},
      {"alpha", "--alpha", KeyType::kDouble, "Level of the exchangeability test"},
      {"ablations", "--ablation", KeyType::kList,
       "Extra optimized/combined variants: unweighted-objective, estimated-propensity"},
      {"borrow_treated_arm", "--borrow-treated-arm", KeyType::kBool,
       "Optimize the treated-arm plug-in over pooled treated rows"},
      {"pooling_trial_outcome_model", "--pooling-trial-model", KeyType::kBool,
       "Pooling uses the trial-control outcome model"},
      {"out", "--out", KeyType::kString, "Output path (default: standard output)"},
      {"format", "--format", KeyType::kString, "Output format: json | csv"},
      {"scenario", "--scenario", KeyType::kString, "Scenario: A | B | D1 | D2"},
      {"n1", "--n1", KeyType::kUnsigned, "Trial size"},
      {"n0", "--n0", KeyType::kUnsigned, "External control size"},
      {"beta", "--beta", KeyType::kDouble, "Violation / shift parameter"},
      {"source_gap", "--source-gap", KeyType::kDouble, "Constant added to external outcomes"},
      {"noise_sd", "--noise-sd", KeyType::kDouble, "Outcome noise standard deviation"},
      {"dim", "--dim", KeyType::kUnsigned, "Covariate dimension"},
      {"reps", "--reps", KeyType::kUnsigned, "Monte Carlo replications"},
      {"workers", "--workers", KeyType::kUnsigned, "Worker threads (0: all cores)"},
      {"lambda_out", "--lambda-out", KeyType::kString, "Write combined lambda-hat values here"},
      {"seed", "--seed", KeyType::kUnsigned, "Random seed"},
      {"n0_values", "--n0-values", KeyType::kList, "Bench: external sizes to sweep"},
      {"d_values", "--d-values", KeyType::kList, "Bench: covariate dimensions to sweep"},
      {"repeats", "--repeats", KeyType::kUnsigned, "Bench: timed repeats per point"},
  };
  return table;
}

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : key_table()) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// Converts a flag string into the JSON value of the key's type.
json flag_value(const KeySpec& k, const std::vector<std::string>& raw) {
  const std::string& s = raw.back();
  try {
    switch (k.type) {
      case KeyType::kString: return s;
      case KeyType::kDouble: {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) break;
        return v;
      }
      case KeyType::kUnsigned: {
        if (s.empty() || s[0] == '-') break;
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) break;
        return v;
      }
      case KeyType::kBool: return true;
      case KeyType::kList: {
        json list = json::array();
        for (const auto& r : raw) {
          for (const auto& item : split_list(r)) list.push_back(item);
        }
        return list;
      }
    }
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("invalid value '") + s + "' for " + k.flag);
}

void check_type(const KeySpec& k, const json& v) {
  bool ok = false;
  switch (k.type) {
    case KeyType::kString: ok = v.is_string(); break;
    case KeyType::kDouble: ok = v.is_number(); break;
    case KeyType::kUnsigned: ok = v.is_number_unsigned(); break;
    case KeyType::kBool: ok = v.is_boolean(); break;
    case KeyType::kList:
      ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) {
             return e.is_string() || e.is_number();
           });
      break;
  }
  if (!ok) throw UsageError(std::string("config key '") + k.key + "' has the wrong type");
}

json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    const KeySpec* k = find_key(key);
    if (k == nullptr) throw UsageError("unknown config key '" + key + "'");
    check_type(*k, value);
  }
  return cfg;
}

// Resolved settings: defaults < config file < EC_WORKERS < flags.
class Settings {
 public:
  explicit Settings(json values) : v_(std::move(values)) {}
  const json& raw() const { return v_; }
  bool has(const char* key) const { return v_.contains(key) && !v_[key].is_null(); }
  std::string str(const char* key) const { return v_.at(key).get<std::string>(); }
  double num(const char* key) const { return v_.at(key).get<double>(); }
  std::uint64_t uns(const char* key) const { return v_.at(key).get<std::uint64_t>(); }
  bool flag(const char* key) const { return has(key) && v_.at(key).get<bool>(); }
  std::vector<std::string> list(const char* key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    for (const auto& e : v_.at(key)) out.push_back(e.is_string() ? e.get<std::string>() : e.dump());
    return out;
  }

 private:
  json v_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kEmptyFile, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const Settings& s, const std::string& text, std::ostream& out) {
  if (!s.has("out")) {
    out << text;
    return;
  }
  const std::string path = s.str("out");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  f << text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  f << text;
}

std::string output_format(const Settings& s, const char* fallback) {
  if (s.has("format")) {
    const std::string f = s.str("format");
    if (f != "json" && f != "csv") throw UsageError("--format must be json or csv");
    return f;
  }
  if (s.has("out")) {
    const std::string p = s.str("out");
    if (p.size() >= 4 && p.compare(p.size() - 4, 4, ".csv") == 0) return "csv";
    if (p.size() >= 5 && p.compare(p.size() - 5, 5, ".json") == 0) return "json";
  }
  return fallback;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

EstimatorOptions estimator_options(const Settings& s) {
  EstimatorOptions o;
  o.features = parse_feature_map(s.str("features"));
  o.confidence = s.num("confidence");
  o.pooling_ratio = s.num("ratio");
  o.alpha = s.num("alpha");
  o.borrow_treated_arm = s.flag("borrow_treated_arm");
  o.pooling_trial_outcome_model = s.flag("pooling_trial_outcome_model");
  normal_critical_value(o.confidence);
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
  if (!(o.pooling_ratio >= 0.0)) throw UsageError("--ratio must be non-negative");
  return o;
}

std::vector<Method> selected_methods(const Settings& s) {
  std::vector<Method> out;
  for (const auto& name : s.list("methods")) {
    const Method m = parse_method(name);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw UsageError("no estimators selected");
  return out;
}


json report_json(const EstimateReport& r, double confidence) {
  json j;
  j["method"] = std::string(method_name(r.method));
  j["tau"] = r.tau;
  j["se"] = r.se;
  j["ci"] = {r.ci_lo, r.ci_hi};
  j["confidence"] = confidence;
  j["psi1"] = r.psi1;
  j["psi0"] = r.psi0;
  // Optional fields appear only for the methods that define them.
  if (r.lambda) j["lambda"] = *r.lambda;
  if (r.sigma_g2) j["sigma_g2"] = *r.sigma_g2;
  if (r.sigma_h2) j["sigma_h2"] = *r.sigma_h2;
  if (r.sigma_gh) j["sigma_gh"] = *r.sigma_gh;
  if (r.test_pvalue) j["test_pvalue"] = *r.test_pvalue;
  if (r.branch) j["branch"] = *r.branch;
  j["degenerate"] = std::find(r.flags.begin(), r.flags.end(), "degenerate_lambda") != r.flags.end();
  j["diagnostics"] = r.diagnostics;
  j["flags"] = r.flags;
  return j;
}

json header_json(const char* command, const Settings& s, const json& input) {
  json j;
  j["schema"] = kSchema;
  j["tool"] = "robustec";
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = s.raw();
  j["rng"] = kRngId;
  j["input"] = input;
  return j;
}

// Settings that affect only where and how fast a run happens.
json reproducible_config(const Settings& s) {
  json c = s.raw();
  for (const char* k : {"out", "lambda_out", "workers", "format"}) c.erase(k);
  return c;
}

std::vector<std::string> csv_preamble(const char* command, const Settings& s,
                                      const std::string& digest) {
  return {std::string("robustec ") + kVersion,
          "schema " + std::to_string(kSchema),
          std::string("command ") + command,
          std::string("rng ") + kRngId,
          "input_digest " + digest,
          "config " + reproducible_config(s).dump()};
}

std::string csv_cell(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

int cmd_estimate(const Settings& s, std::ostream& out) {
  if (!s.has("input")) throw UsageError("estimate requires --input");
  if (!s.has("p1")) throw UsageError("estimate requires --p1");
  const std::string format = output_format(s, "json");
  const std::string path = s.str("input");

  json input = {{"path", path}, {"digest", nullptr}};
  json validation = {{"ok", true}, {"issues", json::array()}};
  json estimates = json::array();
  json errors = json::array();
  std::vector<std::string> csv_rows;
  int code = kExitOk;
  std::string digest = "none";

  const EstimatorOptions options = estimator_options(s);
  const std::vector<Method> methods = selected_methods(s);

  std::optional<TrialDataset> ds;
  try {
    const std::string text = read_file(path);
    digest = input_digest(text);
    input["digest"] = digest;
    CsvSchema schema;
    schema.source = s.str("source_column");
    schema.treatment = s.str("treatment_column");
    schema.outcome = s.str("outcome_column");
    schema.covariates = s.list("covariates");
    ds.emplace(parse_dataset(text, schema, s.num("p1"), s.flag("allow_external_treated")));
  } catch (const Error& e) {
    validation["ok"] = false;
    validation["issues"].push_back({{"row", e.row()},
                                    {"column", e.column()},
                                    {"code", std::string(error_code_name(e.code()))},
                                    {"message", e.what()}});
    code = kExitInput;
  }
  if (ds) {
    input["rows"] = ds->size();
    input["n_trial"] = ds->n_trial();
    input["n_external"] = ds->n_external();
    const ValidationReport v = validate(*ds);
    validation["ok"] = v.ok;
    for (const auto& issue : v.issues) {
      validation["issues"].push_back({{"row", issue.row},
                                      {"code", std::string(issue_code_name(issue.code))},
                                      {"message", issue.message}});
    }
    if (!v.ok) code = kExitInput;
  }
  if (code == kExitOk) {
    for (Method m : methods) {
      try {
        const EstimateReport r = estimate(*ds, m, options);
        estimates.push_back(report_json(r, options.confidence));
        std::string flags;
        for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
        if (r.branch) flags += (flags.empty() ? "branch=" : ";branch=") + *r.branch;
        csv_rows.push_back(std::string(method_name(m)) + "," + fmt(r.tau) + "," + fmt(r.se) + "," +
                           fmt(r.ci_lo) + "," + fmt(r.ci_hi) + "," + fmt(r.psi1) + "," +
                           fmt(r.psi0) + "," + csv_cell(r.lambda) + "," +
                           csv_cell(r.test_pvalue) + "," + flags);
      } catch (const Error& e) {
        errors.push_back({{"method", std::string(method_name(m))},
                          {"code", std::string(error_code_name(e.code()))},
                          {"cause", std::string(error_code_name(e.cause()))},
                          {"message", e.what()}});
        code = kExitEstimation;
      }
    }
  }

  std::string text;
  if (format == "json") {
    json j = header_json("estimate", s, input);
    j["validation"] = validation;
    j["estimates"] = estimates;
    j["errors"] = errors;
    text = j.dump(2) + "\n";
  } else {
    for (const auto& line : csv_preamble("estimate", s, digest)) text += "# " + line + "\n";
    if (!validation["ok"].get<bool>()) text += "# validation " + validation["issues"].dump() + "\n";
    for (const auto& e : errors) text += "# error " + e.dump() + "\n";
    text += "method,tau,se,ci_lo,ci_hi,psi1,psi0,lambda,test_pvalue,flags\n";
    for (const auto& row : csv_rows) text += row + "\n";
  }
  write_output(s, text, out);
  return code;
}

sim::ScenarioConfig scenario_config(const Settings& s) {
  sim::ScenarioConfig c = sim::default_config(sim::parse_scenario(s.str("scenario")));
  c.n1 = s.uns("n1");
  c.n0 = s.uns("n0");
  c.seed = s.uns("seed");
  c.p1 = s.has("p1") ? s.num("p1") : 0.5;
  if (s.has("beta")) c.beta = s.num("beta");
  if (s.has("source_gap")) c.source_gap = s.num("source_gap");
  if (s.has("noise_sd")) c.noise_sd = s.num("noise_sd");
  if (s.has("dim")) c.dim = s.uns("dim");
  sim::validate_config(c);
  return c;
}

std::vector<sim::EstimatorSpec> estimator_specs(const Settings& s) {
  const EstimatorOptions base = estimator_options(s);
  std::vector<sim::EstimatorSpec> specs;
  const std::vector<Method> methods = selected_methods(s);
  for (Method m : methods) specs.push_back({std::string(method_name(m)), m, base});
  for (const auto& ab : s.list("ablations")) {
    EstimatorOptions o = base;
    if (ab == "unweighted-objective") {
      o.unweighted_objective = true;
    } else if (ab == "estimated-propensity") {
      o.estimate_propensity = true;
    } else {
      throw UsageError("unknown ablation '" + ab + "'");
    }
    for (Method m : {Method::kOptimized, Method::kCombined}) {
      if (std::find(methods.begin(), methods.end(), m) == methods.end()) continue;
      specs.push_back({std::string(method_name(m)) + "+" + ab, m, o});
    }
  }
  return specs;
}

json scenario_json(const sim::ScenarioConfig& cfg, double tau) {
  return {{"name", std::string(sim::scenario_name(cfg.scenario))},
          {"artifact_defined", sim::is_artifact_defined(cfg.scenario)},
          {"n1", cfg.n1},
          {"n0", cfg.n0},
          {"beta", cfg.beta},
          {"p1", cfg.p1},
          {"dim", cfg.dim},
          {"noise_sd", cfg.noise_sd},
          {"source_gap", cfg.source_gap},
          {"seed", cfg.seed},
          {"tau_true", tau}};
}

int cmd_simulate(const Settings& s, std::ostream& out) {
  const sim::ScenarioConfig cfg = scenario_config(s);
  const auto specs = estimator_specs(s);
  const std::string format = output_format(s, "csv");
  const std::size_t reps = s.uns("reps");
  if (reps < 1) throw UsageError("--reps must be at least 1");
  sim::RunOptions run;
  run.workers = static_cast<unsigned>(s.uns("workers"));

  const sim::MonteCarloMetrics m = sim::run_monte_carlo(cfg, specs, reps, run);

  std::vector<std::string> preamble = csv_preamble("simulate", s, "none");
  const std::string scen = std::string(sim::scenario_name(cfg.scenario));
  preamble.push_back("scenario " + scen +
                     (sim::is_artifact_defined(cfg.scenario) ? " (artifact-defined scenario)" : ""));
  preamble.push_back("scenario_config " + scenario_json(cfg, m.tau_true).dump());

  std::string text;
  if (format == "csv") {
    text = sim::metrics_csv(m, preamble);
  } else {
    json j = header_json("simulate", s, {{"path", nullptr}, {"digest", nullptr}});
    j["scenario"] = scenario_json(cfg, m.tau_true);
    j["replications"] = m.replications;
    j["workers"] = m.workers;
    j["wall_seconds"] = m.wall_seconds;
    json rows = json::array();
    for (const auto& e : m.estimators) {
      rows.push_back({{"label", e.label},
                      {"method", std::string(method_name(e.method))},
                      {"replications", e.replications},
                      {"successes", e.successes},
                      {"failures", e.failures},
                      {"failure_codes", e.failure_codes},
                      {"mean_estimate", e.mean_estimate},
                      {"bias", e.bias},
                      {"mean_abs_bias", e.mean_abs_bias},
                      {"empirical_variance", e.empirical_variance},
                      {"mc_se", e.mc_se},
                      {"coverage_rate", e.coverage_rate},
                      {"mean_se", e.mean_se},
                      {"seconds", e.seconds}});
    }
    j["estimators"] = rows;
    text = j.dump(2) + "\n";
  }
  write_output(s, text, out);
  if (s.has("lambda_out")) {
    write_file(s.str("lambda_out"), sim::export_lambda_distribution(m, preamble));
  }
  for (const auto& e : m.estimators) {
    if (e.successes == 0) return kExitEstimation;
  }
  return kExitOk;
}

std::vector<std::size_t> unsigned_list(const Settings& s, const char* key) {
  std::vector<std::size_t> out;
  for (const auto& item : s.list(key)) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || v == 0) {
      throw UsageError(std::string("invalid entry '") + item + "' in " + key);
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

int cmd_bench(const Settings& s, std::ostream& out) {
  const std::size_t repeats = s.uns("repeats");
  if (repeats < 1) throw UsageError("--repeats must be at least 1");
  const std::size_t n1 = s.uns("n1");
  const EstimatorOptions options = estimator_options(s);
  constexpr std::size_t kFixedDim = 2;
  constexpr std::size_t kFixedN0 = 1000;

  struct Point {
    const char* sweep;
    std::size_t n0, d;
  };
  std::vector<Point> points;
  for (std::size_t n0 : unsigned_list(s, "n0_values")) points.push_back({"n0", n0, kFixedDim});
  for (std::size_t d : unsigned_list(s, "d_values")) points.push_back({"d", kFixedN0, d});

  std::string text;
  for (const auto& line : csv_preamble("bench", s, "none")) text += "# " + line + "\n";
  text += "# estimator combined; scenario A (artifact-defined scenario)\n";
  text += "sweep,n1,n0,d,repeats,median_seconds,min_seconds,max_seconds\n";
  using Clock = std::chrono::steady_clock;
  for (const auto& p : points) {
    sim::ScenarioConfig cfg = sim::default_config(sim::Scenario::kA);
    cfg.n1 = n1;
    cfg.n0 = p.n0;
    cfg.dim = p.d;
    cfg.seed = s.uns("seed");
    std::vector<double> secs;
    for (std::size_t k = 0; k < repeats; ++k) {
      const auto g = sim::generate_scenario(cfg, k);
      const auto t0 = Clock::now();
      (void)combined_tau(g.data, options);
      secs.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    }
    std::sort(secs.begin(), secs.end());
    const std::size_t m = secs.size();
    const double median = m % 2 == 1 ? secs[m / 2] : 0.5 * (secs[m / 2 - 1] + secs[m / 2]);
    text += std::string(p.sweep) + "," + std::to_string(n1) + "," + std::to_string(p.n0) + "," +
            std::to_string(p.d) + "," + std::to_string(repeats) + "," + fmt(median) + "," +
            fmt(secs.front()) + "," + fmt(secs.back()) + "\n";
  }
  write_output(s, text, out);
  return kExitOk;
}

json defaults_for(const std::string& command) {
  json d = {{"features", "linear"}, {"confidence", 0.95}, {"ratio", 1.0},
            {"alpha", 0.05},        {"seed", 1u},         {"workers", 0u}};
  if (command == "estimate") {
    d["source_column"] = "S";
    d["treatment_column"] = "A";
    d["outcome_column"] = "Y";
    json methods = json::array();
    for (Method m : all_methods()) methods.push_back(std::string(method_name(m)));
    d["methods"] = methods;
  } else if (command == "simulate") {
    d["methods"] = {"unadjusted", "aipw_trial", "optimized", "combined", "pooling",
                    "test_then_pool"};
    d["scenario"] = "A";
    d["n1"] = 50u;
    d["n0"] = 200u;
    d["reps"] = 1000u;
  } else {
    d["n1"] = 100u;
    d["n0_values"] = {"500", "1000", "2000"};
    d["d_values"] = {"2", "4", "8"};
    d["repeats"] = 10u;
  }
  return d;
}

}  // namespace

std::string input_digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Treatment-effect estimation for trials with external controls", "robustec"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::vector<std::string>> raw;
  std::map<std::string, bool> bools;
  struct Bound {
    const KeySpec* key;
    CLI::App* sub;
    CLI::Option* option;
  };
  std::vector<Bound> bound;

  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate effects on a CSV dataset");
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a Monte Carlo study");
  auto* bench_cmd = app.add_subcommand("bench", "Time the combined estimator");
  for (auto* sub : {estimate_cmd, simulate_cmd, bench_cmd}) {
    sub->add_option("--config", config_path, "JSON config file; flags override its values");
  }
  auto bind = [&](CLI::App* sub, const char* key) {
    const KeySpec* k = find_key(key);
    CLI::Option* o = nullptr;
    if (k->type == KeyType::kBool) {
      o = sub->add_flag(k->flag, bools[std::string(sub->get_name()) + key], k->help);
    } else {
      o = sub->add_option(k->flag, raw[std::string(sub->get_name()) + key], k->help);
      if (k->type != KeyType::kList) o->expected(1);
    }
    bound.push_back({k, sub, o});
  };
  for (const char* key : {"input", "p1", "source_column", "treatment_column", "outcome_column",
                          "covariates", "allow_external_treated", "methods", "features",
                          "confidence", "ratio", "alpha", "borrow_treated_arm",
                          "pooling_trial_outcome_model", "out", "format"}) {
    bind(estimate_cmd, key);
  }
  for (const char* key : {"scenario", "n1", "n0", "beta", "source_gap", "noise_sd", "dim", "p1",
                          "reps", "workers", "seed", "methods", "ablations", "features",
                          "confidence", "ratio", "alpha", "borrow_treated_arm",
                          "pooling_trial_outcome_model", "out", "format", "lambda_out"}) {
    bind(simulate_cmd, key);
  }
  for (const char* key : {"n1", "n0_values", "d_values", "repeats", "seed", "features", "out"}) {
    bind(bench_cmd, key);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    for (auto* sub : app.get_subcommands()) {
      out << sub->help();
      return kExitOk;
    }
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "robustec: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    json values = defaults_for(command);
    if (!config_path.empty()) {
      const json file = load_config_file(config_path);
      for (const auto& [key, value] : file.items()) values[key] = value;
    }
    if (const char* env = std::getenv("EC_WORKERS"); env != nullptr && *env != '\0') {
      const KeySpec* k = find_key("workers");
      try {
        values["workers"] = flag_value(*k, {env});
      } catch (const UsageError&) {
        throw UsageError(std::string("EC_WORKERS must be a non-negative integer, got '") + env + "'");
      }
    }
    for (const auto& [k, owner, o] : bound) {
      if (owner != sub || o->count() == 0) continue;
      const std::string id = command + k->key;
      values[k->key] = k->type == KeyType::kBool ? json(true) : flag_value(*k, raw[id]);
    }
    const Settings settings(values);
    if (command == "estimate") return cmd_estimate(settings, out);
    if (command == "simulate") return cmd_simulate(settings, out);
    return cmd_bench(settings, out);
  } catch (const UsageError& e) {
    err << "robustec: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "robustec: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidArgument ? kExitUsage : kExitEstimation;
  }
}

}  // namespace robustec::cli
