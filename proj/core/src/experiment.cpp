#include "kbu/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kbu/diagnostics.hpp"

namespace kbu {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ----------------------------------------------------------------------------
// Number formatting. 17 significant digits round-trip 64-bit doubles exactly;
// std::to_chars keeps the output locale-independent.

std::string format_full(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ----------------------------------------------------------------------------
// Text helpers.

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    std::string t = trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

double parse_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e)
    throw ConfigError("config key '" + key + "': cannot parse '" + s + "' as a number");
  return v;
}

long parse_long(const std::string& s, const std::string& key) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': cannot parse '" + s + "' as an integer");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': cannot parse '" + s + "' as an unsigned integer");
  return v;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::string norm = s;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream is(norm);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_double(tok, key));
  if (out.empty()) throw ConfigError("config key '" + key + "': expected numbers");
  return out;
}

// Matrix literal: rows separated by ';', entries by spaces or commas.
Matrix parse_matrix(const std::string& s, const std::string& key) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : split_list(s, ';')) rows.push_back(parse_double_list(row, key));
  if (rows.empty()) throw ConfigError("config key '" + key + "': empty matrix literal");
  const size_t cols = rows.front().size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      throw ConfigError("config key '" + key + "': ragged matrix literal");
    for (size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

Vector parse_vector(const std::string& s, const std::string& key) {
  const auto vals = parse_double_list(s, key);
  Vector v(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

// ----------------------------------------------------------------------------
// Config entry dispatch, shared by the file parser and --set overrides.

void set_indexed_matrix(std::vector<Matrix>& list, const std::string& index_str,
                        const Matrix& value, const std::string& key) {
  const long idx = parse_long(index_str, key);
  if (idx < 0 || idx > 4096) throw ConfigError("config key '" + key + "': index out of range");
  if (list.size() <= static_cast<size_t>(idx)) list.resize(static_cast<size_t>(idx) + 1);
  list[static_cast<size_t>(idx)] = value;
}

void apply_system_entry(InlineScenario& sys, const std::string& sub, const std::string& value,
                        const std::string& key) {
  const auto dot = sub.find('.');
  const std::string head = dot == std::string::npos ? sub : sub.substr(0, dot);
  const std::string index = dot == std::string::npos ? std::string{} : sub.substr(dot + 1);

  if (head == "a" || head == "gamma" || head == "r" || head == "q") {
    auto& list = head == "a" ? sys.a_list
                : head == "gamma" ? sys.gamma_list
                : head == "r" ? sys.r_list
                              : sys.q_list;
    set_indexed_matrix(list, index.empty() ? "0" : index, parse_matrix(value, key), key);
  } else if (head == "b") {
    sys.b = parse_matrix(value, key);
  } else if (head == "c") {
    sys.c = parse_matrix(value, key);
  } else if (head == "x0") {
    sys.x0 = parse_vector(value, key);
  } else if (head == "horizon") {
    sys.horizon = parse_double(value, key);
  } else if (head == "true_member") {
    sys.true_member = static_cast<int>(parse_long(value, key));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void apply_entry(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "scenario") {
    config.scenario = trim(value);
  } else if (key == "sigma_bar") {
    config.sigma_bar = parse_double_list(value, key);
  } else if (key == "seed") {
    config.seed = parse_u64(value, key);
  } else if (key == "grid_intervals") {
    config.grid_intervals = static_cast<int>(parse_long(value, key));
  } else if (key == "spread_alpha") {
    config.spread_alpha = parse_double(value, key);
  } else if (key == "out") {
    config.outputs = trim(value);
  } else if (key == "jobs") {
    config.jobs = static_cast<int>(parse_long(value, key));
  } else if (key == "precisions_scope") {
    config.precisions_scope = trim(value);
  } else if (key == "estimators") {
    config.estimators.clear();
    for (const auto& name : split_list(value, ',')) {
      if (name == "all") {
        config.estimators = all_estimator_kinds();
        break;
      }
      const auto kind = estimator_kind_from_string(name);
      if (!kind) throw ConfigError("config key 'estimators': unknown estimator '" + name + "'");
      config.estimators.push_back(*kind);
    }
  } else if (key == "emit") {
    config.emit = value == "all"
                      ? std::vector<std::string>{"trajectories", "diagnostics", "precisions",
                                                 "config_echo"}
                      : split_list(value, ',');
  } else if (key == "integrator.rel_tol") {
    config.integrator.rel_tol = parse_double(value, key);
  } else if (key == "integrator.abs_tol") {
    config.integrator.abs_tol = parse_double(value, key);
  } else if (key == "integrator.max_steps") {
    config.integrator.max_steps = parse_long(value, key);
  } else if (key == "integrator.initial_step") {
    config.integrator.initial_step = parse_double(value, key);
  } else if (key.rfind("system.", 0) == 0) {
    if (!config.inline_scenario) config.inline_scenario.emplace();
    apply_system_entry(*config.inline_scenario, key.substr(7), value, key);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

const std::vector<std::string>& valid_emit_names() {
  static const std::vector<std::string> names = {"trajectories", "diagnostics", "precisions",
                                                 "config_echo"};
  return names;
}

void validate_config(const ExperimentConfig& config) {
  if (config.estimators.empty())
    throw ConfigError("config field 'estimators' must not be empty");
  if (config.scenario.empty())
    throw ConfigError("config field 'scenario' must name a scenario");
  if (config.grid_intervals < 1)
    throw ConfigError("config field 'grid_intervals' must be positive");
  for (const auto& e : config.emit) {
    if (std::find(valid_emit_names().begin(), valid_emit_names().end(), e) ==
        valid_emit_names().end())
      throw ConfigError("config field 'emit': unknown output kind '" + e + "'");
  }
  if (config.outputs.empty())
    throw ConfigError("config field 'out' must name an output directory");
  if (config.precisions_scope != "probes" && config.precisions_scope != "all")
    throw ConfigError("config field 'precisions_scope' must be 'probes' or 'all'");
}

// Canonical order, duplicates removed.
std::vector<EstimatorKind> normalized_estimators(const std::vector<EstimatorKind>& selected) {
  std::vector<EstimatorKind> out;
  for (EstimatorKind kind : all_estimator_kinds()) {
    if (std::find(selected.begin(), selected.end(), kind) != selected.end()) out.push_back(kind);
  }
  return out;
}

bool emits(const ExperimentConfig& config, const std::string& what) {
  return std::find(config.emit.begin(), config.emit.end(), what) != config.emit.end();
}

// ----------------------------------------------------------------------------
// JSON round trip.

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.size();
  if (rows == 0) throw ConfigError("config echo: empty matrix");
  const auto cols = j.at(0).size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < rows; ++i)
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j.at(i).at(c).get<double>();
  return m;
}

json config_to_json_object(const ExperimentConfig& config) {
  json j;
  j["scenario"] = config.scenario;
  j["sigma_bar"] = config.sigma_bar;
  j["seed"] = config.seed;
  j["grid_intervals"] = config.grid_intervals;
  j["spread_alpha"] = config.spread_alpha;
  j["integrator"] = {{"rel_tol", config.integrator.rel_tol},
                     {"abs_tol", config.integrator.abs_tol},
                     {"max_steps", config.integrator.max_steps}};
  j["integrator"]["initial_step"] =
      config.integrator.initial_step ? json(*config.integrator.initial_step) : json(nullptr);
  json est = json::array();
  for (EstimatorKind kind : normalized_estimators(config.estimators))
    est.push_back(std::string(to_string(kind)));
  j["estimators"] = std::move(est);
  j["emit"] = config.emit;
  j["out"] = config.outputs;
  j["jobs"] = config.jobs;
  j["precisions_scope"] = config.precisions_scope;
  if (config.inline_scenario) {
    const auto& sys = *config.inline_scenario;
    json lists;
    auto dump_list = [](const std::vector<Matrix>& list) {
      json out = json::array();
      for (const auto& m : list) out.push_back(matrix_to_json(m));
      return out;
    };
    lists["a"] = dump_list(sys.a_list);
    lists["gamma"] = dump_list(sys.gamma_list);
    lists["r"] = dump_list(sys.r_list);
    lists["q"] = dump_list(sys.q_list);
    lists["b"] = matrix_to_json(sys.b);
    lists["c"] = matrix_to_json(sys.c);
    json x0 = json::array();
    for (Eigen::Index i = 0; i < sys.x0.size(); ++i) x0.push_back(sys.x0[i]);
    lists["x0"] = std::move(x0);
    lists["horizon"] = sys.horizon;
    lists["true_member"] = sys.true_member;
    j["inline_system"] = std::move(lists);
  }
  return j;
}

ExperimentConfig config_from_json_object(const json& j) {
  ExperimentConfig config;
  config.scenario = j.at("scenario").get<std::string>();
  config.sigma_bar = j.at("sigma_bar").get<std::vector<double>>();
  config.seed = j.at("seed").get<std::uint64_t>();
  config.grid_intervals = j.at("grid_intervals").get<int>();
  config.spread_alpha = j.at("spread_alpha").get<double>();
  const auto& integ = j.at("integrator");
  config.integrator.rel_tol = integ.at("rel_tol").get<double>();
  config.integrator.abs_tol = integ.at("abs_tol").get<double>();
  config.integrator.max_steps = integ.at("max_steps").get<long>();
  if (!integ.at("initial_step").is_null())
    config.integrator.initial_step = integ.at("initial_step").get<double>();
  config.estimators.clear();
  for (const auto& name : j.at("estimators")) {
    const auto kind = estimator_kind_from_string(name.get<std::string>());
    if (!kind) throw ConfigError("config echo: unknown estimator name");
    config.estimators.push_back(*kind);
  }
  config.emit = j.at("emit").get<std::vector<std::string>>();
  config.outputs = j.at("out").get<std::string>();
  config.jobs = j.at("jobs").get<int>();
  config.precisions_scope = j.value("precisions_scope", std::string("probes"));
  if (j.contains("inline_system")) {
    InlineScenario sys;
    const auto& lists = j.at("inline_system");
    auto load_list = [](const json& arr) {
      std::vector<Matrix> out;
      for (const auto& m : arr) out.push_back(matrix_from_json(m));
      return out;
    };
    sys.a_list = load_list(lists.at("a"));
    sys.gamma_list = load_list(lists.at("gamma"));
    sys.r_list = load_list(lists.at("r"));
    sys.q_list = load_list(lists.at("q"));
    sys.b = matrix_from_json(lists.at("b"));
    sys.c = matrix_from_json(lists.at("c"));
    const auto x0 = lists.at("x0").get<std::vector<double>>();
    sys.x0 = Vector(static_cast<Eigen::Index>(x0.size()));
    for (size_t i = 0; i < x0.size(); ++i) sys.x0[static_cast<Eigen::Index>(i)] = x0[i];
    sys.horizon = lists.at("horizon").get<double>();
    sys.true_member = lists.at("true_member").get<int>();
    config.inline_scenario = std::move(sys);
  }
  return config;
}

// ----------------------------------------------------------------------------
// CSV emission.

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }

  void header(const std::vector<std::string>& names) {
    for (size_t i = 0; i < names.size(); ++i) {
      if (i) out_ << ',';
      out_ << names[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_full(values[i]);
    }
    out_ << '\n';
  }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failure on '" + path_.string() + "'");
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

std::string member_label(const ParameterSpace& space, int k) {
  const Vector& label = space.labels[static_cast<size_t>(k)];
  std::string out;
  for (Eigen::Index i = 0; i < label.size(); ++i) {
    if (i) out += '_';
    out += format_shortest(label[i]);
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ConfigError("stored CSV is missing the required column '" + name + "'");
    return static_cast<int>(it - header.begin());
  }
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
  for (auto& name : split_list(line, ',')) table.header.push_back(std::move(name));
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    for (const auto& cell : split_list(line, ','))
      row.push_back(parse_double(cell, "csv cell"));
    if (row.size() != table.header.size())
      throw ConfigError("stored CSV row width does not match its header");
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ----------------------------------------------------------------------------
// Pipeline pieces shared by estimate and diagnose.

struct EstimationResult {
  std::vector<EstimatorOutput> estimates;
  KalmanRun reference;
  std::optional<EnsembleResult> ensemble;
};

bool needs_ensemble(const std::vector<EstimatorKind>& kinds) {
  for (EstimatorKind k : kinds) {
    if (k != EstimatorKind::expected_matrices) return true;
  }
  return false;
}

EstimationResult run_estimators(const ScenarioBundle& bundle, const Trajectory& measurement,
                                const ExperimentConfig& config,
                                const std::vector<EstimatorKind>& kinds) {
  std::optional<EnsembleResult> ensemble;
  std::optional<KalmanRun> reference;

  if (needs_ensemble(kinds)) {
    auto family = riccati_family(bundle.space, bundle.shared, bundle.grid, config.integrator,
                                 config.jobs);
    ensemble = run_ensemble(bundle.space, bundle.shared, measurement, bundle.grid,
                            config.integrator, family, config.jobs);
    reference = ensemble->runs[static_cast<size_t>(bundle.true_index)];
  } else {
    const auto& truth_sys = bundle.space.members[static_cast<size_t>(bundle.true_index)];
    RiccatiSolution riccati =
        make_solution(truth_sys, bundle.shared, bundle.grid, config.integrator);
    reference = run_filter(truth_sys, bundle.shared, measurement, riccati, bundle.grid,
                           config.integrator);
  }

  std::vector<EstimatorOutput> estimates;
  for (EstimatorKind kind : kinds) {
    switch (kind) {
      case EstimatorKind::expected_matrices:
        estimates.push_back(expected_matrices_estimator(bundle.space, bundle.shared, measurement,
                                                        bundle.grid, config.integrator));
        break;
      case EstimatorKind::expected_filter:
        estimates.push_back(expected_filter_estimator(*ensemble));
        break;
      case EstimatorKind::energy_min:
        estimates.push_back(energy_min_estimator(*ensemble));
        break;
      case EstimatorKind::expected_gain:
        estimates.push_back(expected_gain_estimator(bundle.space, *ensemble, bundle.shared,
                                                    measurement, bundle.grid, config.integrator));
        break;
    }
  }
  return EstimationResult{std::move(estimates), std::move(*reference), std::move(ensemble)};
}

void write_trajectories_csv(const fs::path& path, const ScenarioBundle& bundle,
                            const Trajectory& truth, const Trajectory& measurement,
                            const EstimationResult& est) {
  CsvWriter csv(path);
  std::vector<std::string> header = {"t"};
  const Eigen::Index n = truth.dim();
  const Eigen::Index r = measurement.dim();
  for (Eigen::Index i = 1; i <= n; ++i) header.push_back("truth_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= r; ++i) header.push_back("y_" + std::to_string(i));
  for (const auto& e : est.estimates) {
    for (Eigen::Index i = 1; i <= n; ++i)
      header.push_back("est_" + std::string(to_string(e.kind)) + "_" + std::to_string(i));
  }
  for (Eigen::Index i = 1; i <= n; ++i) header.push_back("ref_" + std::to_string(i));
  csv.header(header);

  std::vector<double> row;
  for (int j = 0; j < bundle.grid.num_nodes(); ++j) {
    row.clear();
    row.push_back(bundle.grid.node(j));
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(truth[j][i]);
    for (Eigen::Index i = 0; i < r; ++i) row.push_back(measurement[j][i]);
    for (const auto& e : est.estimates)
      for (Eigen::Index i = 0; i < n; ++i) row.push_back(e.estimate[j][i]);
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(est.reference.estimate[j][i]);
    csv.row(row);
  }
  csv.finish();
}

// Riccati pairs for selected members, reusing the ensemble's when present.
std::vector<RiccatiSolution> riccatis_for_members(const ScenarioBundle& bundle,
                                                  const ExperimentConfig& config,
                                                  const std::optional<EnsembleResult>& ensemble,
                                                  const std::vector<int>& members) {
  std::vector<RiccatiSolution> out;
  out.reserve(members.size());
  for (int k : members) {
    if (k < 0 || k >= bundle.space.size())
      throw ConfigError("probe member index out of range");
    if (ensemble) {
      out.push_back(ensemble->runs[static_cast<size_t>(k)].riccati);
    } else {
      out.push_back(make_solution(bundle.space.members[static_cast<size_t>(k)], bundle.shared,
                                  bundle.grid, config.integrator));
    }
  }
  return out;
}

std::vector<int> precision_members(const ScenarioBundle& bundle,
                                   const ExperimentConfig& config) {
  if (config.precisions_scope == "all") {
    std::vector<int> all(static_cast<size_t>(bundle.space.size()));
    for (int k = 0; k < bundle.space.size(); ++k) all[static_cast<size_t>(k)] = k;
    return all;
  }
  return bundle.probe_members;
}

void write_diagnostics_csv(const fs::path& path, const ScenarioBundle& bundle,
                           const EstimationResult& est,
                           const std::vector<RiccatiSolution>& probes) {
  CsvWriter csv(path);

  const EstimatorOutput* energy_est = nullptr;
  for (const auto& e : est.estimates) {
    if (e.kind == EstimatorKind::energy_min) energy_est = &e;
  }

  std::vector<std::string> header = {"t"};
  for (const auto& e : est.estimates)
    header.push_back("err_" + std::string(to_string(e.kind)));
  if (energy_est && est.ensemble) header.push_back("E_at_est");
  for (int k : bundle.probe_members)
    header.push_back("genprec_" + member_label(bundle.space, k));
  for (int k : bundle.probe_members)
    header.push_back("diagdom_" + member_label(bundle.space, k));
  csv.header(header);

  std::vector<DiagnosticSeries> errors;
  errors.reserve(est.estimates.size());
  for (const auto& e : est.estimates)
    errors.push_back(weighted_error_series(e.estimate, est.reference));

  std::optional<ExpectedEnergyEvaluator> energy;
  if (energy_est && est.ensemble) energy.emplace(*est.ensemble);

  std::vector<double> row;
  for (int j = 0; j < bundle.grid.num_nodes(); ++j) {
    row.clear();
    row.push_back(bundle.grid.node(j));
    for (const auto& series : errors) row.push_back(series.values[static_cast<size_t>(j)]);
    if (energy) row.push_back(energy->value(j, energy_est->estimate[j]));
    for (const auto& probe : probes)
      row.push_back(generalized_precision(SpdMatrix(probe.precision[j], 1e-9)));
    for (const auto& probe : probes) row.push_back(diag_dominance(probe.precision[j]));
    csv.row(row);
  }
  csv.finish();
}

void write_precisions_csv(const fs::path& path, const ScenarioBundle& bundle,
                          const std::vector<int>& members,
                          const std::vector<RiccatiSolution>& probes) {
  CsvWriter csv(path);
  const Eigen::Index n = bundle.shared.x0.size();

  std::vector<std::string> header = {"t"};
  for (size_t p = 0; p < probes.size(); ++p) {
    const std::string label = member_label(bundle.space, members[p]);
    for (Eigen::Index i = 1; i <= n; ++i)
      for (Eigen::Index j = 1; j <= n; ++j)
        header.push_back("P_" + label + "_" + std::to_string(i) + std::to_string(j));
  }
  csv.header(header);

  std::vector<double> row;
  for (int node = 0; node < bundle.grid.num_nodes(); ++node) {
    row.clear();
    row.push_back(bundle.grid.node(node));
    for (const auto& probe : probes) {
      const Matrix& p = probe.precision[node];
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) row.push_back(p(i, j));
    }
    csv.row(row);
  }
  csv.finish();
}

void write_realization_csv(const fs::path& path, const TimeGrid& grid,
                           const DisturbanceRealization& realization) {
  CsvWriter csv(path);
  const Eigen::Index n = realization.truth.dim();
  const Eigen::Index m = realization.v.dim();
  const Eigen::Index r = realization.mu.dim();

  std::vector<std::string> header = {"t"};
  for (Eigen::Index i = 1; i <= n; ++i) header.push_back("eta_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= m; ++i) header.push_back("v_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= r; ++i) header.push_back("mu_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= n; ++i) header.push_back("x_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= r; ++i) header.push_back("y_" + std::to_string(i));
  csv.header(header);

  std::vector<double> row;
  for (int j = 0; j < grid.num_nodes(); ++j) {
    row.clear();
    row.push_back(grid.node(j));
    // eta is time-independent; its value is repeated on every row.
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(realization.eta[i]);
    for (Eigen::Index i = 0; i < m; ++i) row.push_back(realization.v[j][i]);
    for (Eigen::Index i = 0; i < r; ++i) row.push_back(realization.mu[j][i]);
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(realization.truth[j][i]);
    for (Eigen::Index i = 0; i < r; ++i) row.push_back(realization.measurement[j][i]);
    csv.row(row);
  }
  csv.finish();
}

void write_config_echo(const fs::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << config_to_json_object(config).dump(2) << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

fs::path prepare_output_dir(const ExperimentConfig& config) {
  const fs::path dir(config.outputs);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

ExperimentConfig resolved_copy(const ExperimentConfig& config) {
  ExperimentConfig resolved = config;
  resolved.estimators = normalized_estimators(config.estimators);
  return resolved;
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");

  ExperimentConfig config;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(text.substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    apply_entry(config, key, value);
  }
  return config;
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  apply_entry(config, trim(key), trim(value));
}

ScenarioBundle build_scenario(const ExperimentConfig& config) {
  if (config.scenario == "oscillator") {
    if (config.sigma_bar.size() != 1)
      throw ConfigError("oscillator scenario expects a scalar sigma_bar");
    return oscillator_scenario(config.sigma_bar.front(), config.grid_intervals,
                               config.spread_alpha);
  }
  if (config.scenario == "amplidyne") {
    if (config.sigma_bar.size() != 3)
      throw ConfigError("amplidyne scenario expects sigma_bar with 3 components");
    if (config.spread_alpha != 1.0)
      throw ConfigError("spread_alpha is only supported by the oscillator scenario");
    Vector sb(3);
    sb << config.sigma_bar[0], config.sigma_bar[1], config.sigma_bar[2];
    return amplidyne_scenario(sb, config.grid_intervals);
  }
  if (config.scenario == "inline") {
    if (!config.inline_scenario)
      throw ConfigError("scenario 'inline' requires a [system] section");
    const auto& sys = *config.inline_scenario;
    if (sys.a_list.empty() || sys.gamma_list.empty() || sys.r_list.empty() || sys.q_list.empty())
      throw ConfigError("inline system: factor lists a/gamma/r/q must be nonempty");
    auto to_spd = [](const std::vector<Matrix>& list, const char* what) {
      std::vector<SpdMatrix> out;
      out.reserve(list.size());
      for (const auto& m : list) {
        try {
          out.emplace_back(m);
        } catch (const ConfigError& e) {
          throw ConfigError(std::string("inline system: ") + what + ": " + e.what());
        }
      }
      return out;
    };
    ParameterSpace space =
        build_parameter_space(sys.a_list, to_spd(sys.gamma_list, "gamma"),
                              to_spd(sys.r_list, "r"), to_spd(sys.q_list, "q"));
    if (sys.true_member < 0 || sys.true_member >= space.size())
      throw ConfigError("inline system: true_member out of range");

    SharedModel shared{sys.b, sys.c, sys.x0, std::nullopt, sys.horizon};
    validate_dimensions(space.members.front(), shared);
    const SystemTuple& true_sys = space.members[static_cast<size_t>(sys.true_member)];

    return ScenarioBundle{"inline",
                          std::move(space),
                          std::move(shared),
                          TimeGrid(0.0, sys.horizon, config.grid_intervals),
                          sys.true_member,
                          true_sys.gamma,
                          true_sys.r,
                          true_sys.q,
                          {sys.true_member}};
  }
  std::string names;
  for (const auto& n : scenario_names()) names += names.empty() ? n : ", " + n;
  throw ConfigError("unknown scenario '" + config.scenario + "' (available: " + names +
                    ", inline)");
}

std::string config_to_json(const ExperimentConfig& config) {
  return config_to_json_object(resolved_copy(config)).dump(2);
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config echo '" + path + "'");
  json j;
  try {
    in >> j;
    return config_from_json_object(j);
  } catch (const json::exception& e) {
    throw ConfigError("config echo '" + path + "' is malformed: " + e.what());
  }
}

ExperimentReport run_experiment(const ExperimentConfig& raw_config) {
  const ExperimentConfig config = resolved_copy(raw_config);
  validate_config(config);
  ScenarioBundle bundle = build_scenario(config);

  const auto samples = sample_disturbances(bundle.shared, bundle.gamma, bundle.r_cov,
                                           bundle.q_cov, bundle.grid, config.seed);
  const auto realization =
      generate_measurement(bundle.space.members[static_cast<size_t>(bundle.true_index)],
                           bundle.shared, samples, bundle.grid, config.integrator);

  EstimationResult est =
      run_estimators(bundle, realization.measurement, config, config.estimators);

  ExperimentReport report;
  report.ensemble_size = bundle.space.size();
  for (const auto& e : est.estimates) {
    const DiagnosticSeries series = weighted_error_series(e.estimate, est.reference);
    const double sup = *std::max_element(series.values.begin(), series.values.end());
    const double mean = trapezoid(series.grid, series.values) /
                        (series.grid.t_end() - series.grid.t_start());
    report.errors.push_back({e.kind, sup, mean});
  }

  const fs::path dir = prepare_output_dir(config);
  if (emits(config, "trajectories")) {
    const fs::path p = dir / "trajectories.csv";
    write_trajectories_csv(p, bundle, realization.truth, realization.measurement, est);
    report.files_written.push_back(p.string());
  }
  if (emits(config, "diagnostics")) {
    const fs::path p = dir / "diagnostics.csv";
    write_diagnostics_csv(p, bundle, est,
                          riccatis_for_members(bundle, config, est.ensemble,
                                               bundle.probe_members));
    report.files_written.push_back(p.string());
  }
  if (emits(config, "precisions")) {
    const fs::path p = dir / "precisions.csv";
    const auto members = precision_members(bundle, config);
    write_precisions_csv(p, bundle, members,
                         riccatis_for_members(bundle, config, est.ensemble, members));
    report.files_written.push_back(p.string());
  }
  if (emits(config, "config_echo")) {
    const fs::path p = dir / "config_echo.json";
    write_config_echo(p, config);
    report.files_written.push_back(p.string());
  }
  return report;
}

ExperimentReport run_simulation(const ExperimentConfig& raw_config) {
  const ExperimentConfig config = resolved_copy(raw_config);
  validate_config(config);
  ScenarioBundle bundle = build_scenario(config);

  const auto samples = sample_disturbances(bundle.shared, bundle.gamma, bundle.r_cov,
                                           bundle.q_cov, bundle.grid, config.seed);
  const auto realization =
      generate_measurement(bundle.space.members[static_cast<size_t>(bundle.true_index)],
                           bundle.shared, samples, bundle.grid, config.integrator);

  ExperimentReport report;
  report.ensemble_size = bundle.space.size();
  const fs::path dir = prepare_output_dir(config);
  const fs::path p = dir / "realization.csv";
  write_realization_csv(p, bundle.grid, realization);
  report.files_written.push_back(p.string());
  if (emits(config, "config_echo")) {
    const fs::path echo = dir / "config_echo.json";
    write_config_echo(echo, config);
    report.files_written.push_back(echo.string());
  }
  return report;
}

ExperimentReport run_diagnose(const std::string& out_dir) {
  const fs::path dir(out_dir);
  const ExperimentConfig config = config_from_json_file((dir / "config_echo.json").string());
  validate_config(config);
  ScenarioBundle bundle = build_scenario(config);

  const CsvTable table = read_csv(dir / "trajectories.csv");
  if (table.rows.size() != static_cast<size_t>(bundle.grid.num_nodes()))
    throw ConfigError("stored trajectories.csv does not match the configured grid");

  const Eigen::Index r = bundle.shared.c.rows();
  std::vector<int> y_cols;
  for (Eigen::Index i = 1; i <= r; ++i)
    y_cols.push_back(table.column("y_" + std::to_string(i)));

  std::vector<Vector> y_values;
  y_values.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Vector y(r);
    for (Eigen::Index i = 0; i < r; ++i) y[i] = row[static_cast<size_t>(y_cols[static_cast<size_t>(i)])];
    y_values.push_back(std::move(y));
  }
  Trajectory measurement(bundle.grid, std::move(y_values));

  EstimationResult est = run_estimators(bundle, measurement, config, config.estimators);

  ExperimentReport report;
  report.ensemble_size = bundle.space.size();
  for (const auto& e : est.estimates) {
    const DiagnosticSeries series = weighted_error_series(e.estimate, est.reference);
    const double sup = *std::max_element(series.values.begin(), series.values.end());
    const double mean = trapezoid(series.grid, series.values) /
                        (series.grid.t_end() - series.grid.t_start());
    report.errors.push_back({e.kind, sup, mean});
  }

  const fs::path diag = dir / "diagnostics.csv";
  write_diagnostics_csv(diag, bundle, est,
                        riccatis_for_members(bundle, config, est.ensemble,
                                             bundle.probe_members));
  report.files_written.push_back(diag.string());
  const fs::path prec = dir / "precisions.csv";
  const auto members = precision_members(bundle, config);
  write_precisions_csv(prec, bundle, members,
                       riccatis_for_members(bundle, config, est.ensemble, members));
  report.files_written.push_back(prec.string());
  return report;
}

}  // namespace kbu
