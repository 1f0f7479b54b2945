// Copyright 2026 The mhe-ipg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mhe/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>

#include <omp.h>

namespace mhe {
namespace {

using nlohmann::json;

struct Entry {
  json value;
  int line = 0;  // 0 when unknown
};
using EntryMap = std::map<std::string, Entry>;

std::string where(std::string_view source, int line) {
  std::string s(source);
  if (line > 0) s += ":" + std::to_string(line);
  return s + ": ";
}

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

void flatten(const json& j, const std::string& prefix, std::string_view text, EntryMap& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, text, out);
      continue;
    }
    const auto pos = text.find("\"" + it.key() + "\"");
    out[key] = {*it, pos == std::string_view::npos ? 0 : line_of_offset(text, pos)};
  }
}

EntryMap parse_json_entries(std::string_view text, std::string_view source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(where(source, line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      "malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(where(source, 1) + "top level must be an object");
  EntryMap out;
  flatten(j, "", text, out);
  return out;
}

json parse_plain_value(const std::string& raw) {
  try {
    return json::parse(raw);
  } catch (const json::parse_error&) {
  }
  if (raw.find(',') != std::string::npos) {
    json arr = json::array();
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) arr.push_back(parse_plain_value(trim(item)));
    return arr;
  }
  return raw;
}

EntryMap parse_kv_entries(std::string_view text, std::string_view source) {
  EntryMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where(source, lineno) + "expected 'key = value', got '" + body + "'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(where(source, lineno) + "empty key");
    if (value.empty()) throw ConfigError(where(source, lineno) + "field '" + key + "' has no value");
    if (out.contains(key)) {
      throw ConfigError(where(source, lineno) + "field '" + key + "' is set twice (first on line " +
                        std::to_string(out[key].line) + ")");
    }
    out[key] = {parse_plain_value(value), lineno};
  }
  return out;
}

class Reader {
 public:
  Reader(EntryMap entries, std::string_view source)
      : entries_(std::move(entries)), source_(source) {}

  bool has(const std::string& key) const { return entries_.contains(key); }

  void require(const std::string& key) const {
    if (!has(key)) throw ConfigError(std::string(source_) + ": missing required field '" + key + "'");
  }

  double number(const std::string& key, double fallback) {
    const Entry* e = take(key);
    if (!e) return fallback;
    if (!e->value.is_number()) fail(*e, key, "expected a number");
    return e->value.get<double>();
  }

  long integer(const std::string& key, long fallback) {
    const Entry* e = take(key);
    if (!e) return fallback;
    if (!e->value.is_number_integer()) fail(*e, key, "expected an integer");
    return e->value.get<long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const Entry* e = take(key);
    if (!e) return fallback;
    if (!e->value.is_boolean()) fail(*e, key, "expected true or false");
    return e->value.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const Entry* e = take(key);
    if (!e) return fallback;
    if (!e->value.is_string()) fail(*e, key, "expected a string");
    return e->value.get<std::string>();
  }

  // A number is broadcast to `size` entries.
  Vector vector(const std::string& key, const Vector& fallback, int size) {
    const Entry* e = take(key);
    if (!e) return fallback;
    if (e->value.is_number()) return Vector::Constant(size, e->value.get<double>());
    if (!e->value.is_array()) fail(*e, key, "expected a number or a list of numbers");
    Vector v(static_cast<Eigen::Index>(e->value.size()));
    for (std::size_t i = 0; i < e->value.size(); ++i) {
      if (!e->value[i].is_number()) fail(*e, key, "list entries must be numbers");
      v(static_cast<Eigen::Index>(i)) = e->value[i].get<double>();
    }
    if (v.size() != size) {
      fail(*e, key, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
    }
    return v;
  }

  std::vector<json> list(const std::string& key) {
    const Entry* e = take(key);
    if (!e) return {};
    if (e->value.is_array()) return {e->value.begin(), e->value.end()};
    return {e->value};
  }

  int line(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  [[noreturn]] void fail(const Entry& e, const std::string& key, const std::string& msg) const {
    throw ConfigError(where(source_, e.line) + "field '" + key + "': " + msg);
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (!used_.contains(key)) throw ConfigError(where(source_, e.line) + "unknown field '" + key + "'");
    }
  }

 private:
  const Entry* take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert({key, true});
    return &it->second;
  }

  EntryMap entries_;
  std::string_view source_;
  std::map<std::string, bool> used_;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int baseline_first_instant(const RunConfig& cfg) {
  return cfg.exclude_warmup ? *std::min_element(cfg.horizons.begin(), cfg.horizons.end()) : 0;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << content;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& msg) {
    throw ConfigError("field '" + field + "': " + msg);
  };
  if (!(dt > 0.0)) bad("dt", "must be positive");
  if (horizons.empty()) bad("horizons", "must list at least one horizon");
  for (int N : horizons) {
    if (N < 1) bad("horizons", "every horizon must be at least 1");
  }
  if (T <= *std::max_element(horizons.begin(), horizons.end())) {
    bad("T", "must exceed the largest horizon");
  }
  if (x0.size() != 3) bad("x0", "needs 3 entries");
  if (process_std.size() != 3 || (process_std.array() < 0).any()) {
    bad("process_std", "needs 3 non-negative entries");
  }
  if (meas_std.size() != 2 || (meas_std.array() < 0).any()) {
    bad("meas_std", "needs 2 non-negative entries");
  }
  if (!(clip > 0.0)) bad("clip", "must be positive");
  if (!(turn_divisor != 0.0)) bad("turn_divisor", "must be nonzero");
  if (methods.empty()) bad("methods", "must list at least one method");
  if (runs < 1) bad("runs", "must be at least 1");
  if (q_diag.size() != 0 && (q_diag.size() != 3 || (q_diag.array() <= 0).any())) {
    bad("q_diag", "needs 3 positive entries");
  }
  if (r_diag.size() != 0 && (r_diag.size() != 2 || (r_diag.array() <= 0).any())) {
    bad("r_diag", "needs 2 positive entries");
  }
  if (!(pi0 > 0.0)) bad("pi0", "must be positive");
  if (xhat0.size() != 0 && xhat0.size() != 3) bad("xhat0", "needs 3 entries");
  if (!(warm_start_gate >= 0.0)) bad("warm_start_gate", "must be non-negative");
  if (threads < 0) bad("threads", "must be non-negative");
  if (timing_repeats < 1) bad("timing_repeats", "must be at least 1");
  ipg.validate();
  if (newton.max_iter < 1 || !(newton.eps > 0.0)) bad("newton", "needs eps > 0 and max_iter >= 1");
  if (gd.max_iter < 1 || !(gd.eps > 0.0)) bad("gd", "needs eps > 0 and max_iter >= 1");
  // Estimator weights must be positive even when they default to the noise.
  const Weights w = weights();
  if ((w.q_diag.array() <= 0).any()) bad("q_diag", "process noise is zero; set q_diag explicitly");
  if ((w.r_diag.array() <= 0).any()) bad("r_diag", "measurement noise is zero; set r_diag explicitly");
}

Weights RunConfig::weights() const {
  Weights w;
  w.q_diag = q_diag.size() ? q_diag : Vector(process_std.array().square());
  w.r_diag = r_diag.size() ? r_diag : Vector(meas_std.array().square());
  return w;
}

NoiseSpec RunConfig::noise(std::uint64_t seed) const {
  return NoiseSpec{process_std, meas_std, clip, seed};
}

PipelineOptions RunConfig::pipeline_options(int horizon) const {
  PipelineOptions o;
  o.horizon = horizon;
  o.weights = weights();
  o.Pi0 = pi0 * Matrix::Identity(3, 3);
  o.xhat0 = xhat0.size() ? xhat0 : Vector(Vector::Zero(3));
  o.ipg = ipg;
  o.newton = newton;
  o.gd = gd;
  o.warm_start_preconditioner = warm_start_preconditioner;
  o.warm_start_gate = warm_start_gate;
  return o;
}

ErrorOptions RunConfig::error_options(int first_instant) const {
  ErrorOptions e;
  if (position_only) e.components = {0, 1};
  e.angle_components = {2};
  e.wrap_angles = wrap_angles;
  e.first_instant = exclude_warmup ? first_instant : 0;
  return e;
}

std::vector<Vector> RunConfig::inputs() const { return spiral_inputs(T, speed, turn_divisor); }

RunConfig parse_run_config(std::string_view text, std::string_view source) {
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool is_json = first != std::string_view::npos && text[first] == '{';
  Reader r(is_json ? parse_json_entries(text, source) : parse_kv_entries(text, source), source);

  for (const char* key : {"dt", "T", "horizons"}) r.require(key);
  if (!r.has("runs") && !r.has("M")) r.require("runs");
  if (!r.has("process_std") && !r.has("process_variance")) r.require("process_std");
  if (!r.has("meas_std") && !r.has("meas_variance")) r.require("meas_std");

  RunConfig c;
  c.dt = r.number("dt", c.dt);
  c.T = static_cast<int>(r.integer("T", c.T));
  c.x0 = r.vector("x0", c.x0, 3);
  c.speed = r.number("speed", c.speed);
  c.turn_divisor = r.number("turn_divisor", c.turn_divisor);

  auto noise_vec = [&](const std::string& std_key, const std::string& var_key, const Vector& fb,
                       int size) {
    if (r.has(std_key) && r.has(var_key)) {
      throw ConfigError(where(source, r.line(var_key)) + "set either '" + std_key + "' or '" +
                        var_key + "', not both");
    }
    if (r.has(var_key)) {
      const Vector var = r.vector(var_key, fb, size);
      if ((var.array() < 0).any()) {
        throw ConfigError(where(source, r.line(var_key)) + "field '" + var_key + "': negative variance");
      }
      return Vector(var.array().sqrt());
    }
    return r.vector(std_key, fb, size);
  };
  c.process_std = noise_vec("process_std", "process_variance", c.process_std, 3);
  c.meas_std = noise_vec("meas_std", "meas_variance", c.meas_std, 2);
  c.clip = r.number("clip", c.clip);

  if (r.has("horizons")) {
    const int line = r.line("horizons");
    c.horizons.clear();
    for (const json& h : r.list("horizons")) {
      if (!h.is_number_integer()) {
        throw ConfigError(where(source, line) + "field 'horizons': entries must be integers");
      }
      c.horizons.push_back(h.get<int>());
    }
  }
  if (r.has("methods")) {
    const int line = r.line("methods");
    c.methods.clear();
    for (const json& m : r.list("methods")) {
      if (!m.is_string()) throw ConfigError(where(source, line) + "field 'methods': entries must be names");
      try {
        c.methods.push_back(method_from_string(m.get<std::string>()));
      } catch (const ConfigError& e) {
        throw ConfigError(where(source, line) + "field 'methods': " + e.what());
      }
    }
  }

  c.runs = static_cast<int>(r.integer(r.has("M") ? "M" : "runs", c.runs));
  const long seed = r.integer("base_seed", static_cast<long>(c.base_seed));
  if (seed < 0) throw ConfigError(where(source, r.line("base_seed")) + "field 'base_seed': must be >= 0");
  c.base_seed = static_cast<std::uint64_t>(seed);
  c.out_dir = r.string("out_dir", c.out_dir);

  c.q_diag = r.vector("q_diag", c.q_diag, 3);
  c.r_diag = r.vector("r_diag", c.r_diag, 2);
  c.pi0 = r.number("pi0", c.pi0);
  c.xhat0 = r.vector("xhat0", c.xhat0, 3);
  c.warm_start_preconditioner = r.boolean("warm_start_preconditioner", c.warm_start_preconditioner);
  c.warm_start_gate = r.number("warm_start_gate", c.warm_start_gate);
  c.exclude_warmup = r.boolean("exclude_warmup", c.exclude_warmup);
  c.wrap_angles = r.boolean("wrap_angles", c.wrap_angles);
  c.position_only = r.boolean("position_only", c.position_only);
  c.threads = static_cast<int>(r.integer("threads", c.threads));
  c.timing_repeats = static_cast<int>(r.integer("timing_repeats", c.timing_repeats));
  if (r.has("exec")) {
    const int line = r.line("exec");
    const std::string e = r.string("exec", "parallel");
    if (e == "serial") {
      c.exec = Execution::serial;
    } else if (e == "parallel") {
      c.exec = Execution::parallel;
    } else {
      throw ConfigError(where(source, line) + "field 'exec': expected 'serial' or 'parallel'");
    }
  }

  c.ipg.beta = r.number("ipg.beta", c.ipg.beta);
  c.ipg.delta = r.number("ipg.delta", c.ipg.delta);
  c.ipg.eps = r.number("ipg.eps", c.ipg.eps);
  c.ipg.max_iter = static_cast<int>(r.integer("ipg.max_iter", c.ipg.max_iter));
  c.ipg.mu = r.number("ipg.mu", c.ipg.mu);
  c.ipg.lipschitz_l = r.number("ipg.lipschitz_l", c.ipg.lipschitz_l);
  c.ipg.alpha_safety = r.number("ipg.alpha_safety", c.ipg.alpha_safety);
  c.ipg.divergence_window = static_cast<int>(r.integer("ipg.divergence_window", c.ipg.divergence_window));
  if (r.has("ipg.alpha_mode")) {
    const int line = r.line("ipg.alpha_mode");
    const std::string mode = r.string("ipg.alpha_mode", "practical");
    if (mode == "practical") {
      c.ipg.alpha_mode = StepSizeMode::practical;
    } else if (mode == "theoretical") {
      c.ipg.alpha_mode = StepSizeMode::theoretical;
    } else {
      throw ConfigError(where(source, line) +
                        "field 'ipg.alpha_mode': expected 'practical' or 'theoretical'");
    }
  }
  c.newton.eps = r.number("newton.eps", c.newton.eps);
  c.newton.max_iter = static_cast<int>(r.integer("newton.max_iter", c.newton.max_iter));
  c.newton.armijo_c = r.number("newton.armijo_c", c.newton.armijo_c);
  c.newton.max_halvings = static_cast<int>(r.integer("newton.max_halvings", c.newton.max_halvings));
  c.newton.regularization = r.number("newton.regularization", c.newton.regularization);
  c.gd.eps = r.number("gd.eps", c.gd.eps);
  c.gd.max_iter = static_cast<int>(r.integer("gd.max_iter", c.gd.max_iter));
  c.gd.beta = r.number("gd.beta", c.gd.beta);
  c.gd.safety = r.number("gd.safety", c.gd.safety);
  c.ekf.joseph_form = r.boolean("ekf.joseph_form", c.ekf.joseph_form);

  r.reject_unused();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

json run_config_to_json(const RunConfig& c) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
  const Weights w = c.weights();
  return {
      {"dt", c.dt},
      {"T", c.T},
      {"x0", vec(c.x0)},
      {"speed", c.speed},
      {"turn_divisor", c.turn_divisor},
      {"process_std", vec(c.process_std)},
      {"meas_std", vec(c.meas_std)},
      {"clip", c.clip},
      {"horizons", c.horizons},
      {"methods", methods},
      {"runs", c.runs},
      {"base_seed", c.base_seed},
      {"q_diag", vec(w.q_diag)},
      {"r_diag", vec(w.r_diag)},
      {"pi0", c.pi0},
      {"xhat0", c.xhat0.size() ? vec(c.xhat0) : std::vector<double>(3, 0.0)},
      {"warm_start_preconditioner", c.warm_start_preconditioner},
      {"warm_start_gate", c.warm_start_gate},
      {"exclude_warmup", c.exclude_warmup},
      {"wrap_angles", c.wrap_angles},
      {"position_only", c.position_only},
      {"timing_repeats", c.timing_repeats},
      {"ipg",
       {{"beta", c.ipg.beta},
        {"delta", c.ipg.delta},
        {"eps", c.ipg.eps},
        {"max_iter", c.ipg.max_iter},
        {"alpha_mode", c.ipg.alpha_mode == StepSizeMode::practical ? "practical" : "theoretical"},
        {"mu", c.ipg.mu},
        {"lipschitz_l", c.ipg.lipschitz_l},
        {"alpha_safety", c.ipg.alpha_safety},
        {"divergence_window", c.ipg.divergence_window}}},
      {"newton",
       {{"eps", c.newton.eps},
        {"max_iter", c.newton.max_iter},
        {"armijo_c", c.newton.armijo_c},
        {"max_halvings", c.newton.max_halvings},
        {"regularization", c.newton.regularization}}},
      {"gd",
       {{"eps", c.gd.eps}, {"max_iter", c.gd.max_iter}, {"beta", c.gd.beta}, {"safety", c.gd.safety}}},
      {"ekf", {{"joseph_form", c.ekf.joseph_form}}},
  };
}

const BenchRow* BenchReport::find(Method m, int horizon) const {
  for (const BenchRow& row : rows) {
    if (row.method == m && row.horizon == horizon) return &row;
  }
  return nullptr;
}

std::vector<std::pair<Method, int>> bench_cases(const RunConfig& cfg) {
  std::vector<std::pair<Method, int>> cases;
  for (Method m : cfg.methods) {
    if (is_mhe(m)) {
      for (int N : cfg.horizons) cases.emplace_back(m, N);
    } else {
      cases.emplace_back(m, m == Method::ekf ? 1 : 0);
    }
  }
  return cases;
}

std::vector<RunRecord> bench_run(const RunConfig& cfg, int run_index) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(run_index);
  const auto model = std::make_shared<UnicycleModel>(cfg.dt);
  const std::vector<Vector> u = cfg.inputs();
  const Trajectory traj = simulate(*model, cfg.x0, u, cfg.noise(seed), cfg.dt);
  const int base_first = baseline_first_instant(cfg);

  std::vector<RunRecord> out;
  for (const auto& [method, N] : bench_cases(cfg)) {
    RunRecord rec;
    rec.seed = seed;
    rec.method = method;
    rec.horizon = N;
    if (is_mhe(method)) {
      const PipelineOptions opts = cfg.pipeline_options(N);
      PipelineResult res;
      std::vector<double> seconds;
      for (int rep = 0; rep < cfg.timing_repeats; ++rep) {
        PipelineResult r = mhe_pipeline(traj, model, method, opts);
        seconds.push_back(r.stats.solver_seconds);
        if (rep == 0) res = std::move(r);
      }
      rec.rmse = run_rmse(estimation_errors(res.estimates, traj.states, cfg.error_options(N)));
      rec.time_s = median(seconds);
      rec.iters = res.stats.total_iterations;
      rec.converged = res.stats.nonconverged == 0;
      rec.solves = res.stats.solves;
      rec.spd_violations = res.stats.spd_violations;
      rec.preconditioner_reuses = res.stats.preconditioner_reuses;
    } else if (method == Method::ekf) {
      const Weights w = cfg.weights();
      const Vector xhat0 = cfg.xhat0.size() ? cfg.xhat0 : Vector(Vector::Zero(3));
      std::vector<double> seconds;
      PipelineResult res;
      for (int rep = 0; rep < cfg.timing_repeats; ++rep) {
        PipelineResult r =
            ekf_pipeline(traj, *model, w.Q(), w.R(), xhat0, cfg.pi0 * Matrix::Identity(3, 3), cfg.ekf);
        seconds.push_back(r.stats.solver_seconds);
        if (rep == 0) res = std::move(r);
      }
      rec.rmse = run_rmse(estimation_errors(res.estimates, traj.states, cfg.error_options(base_first)));
      rec.time_s = median(seconds);
      rec.solves = traj.steps();
      rec.spd_violations = res.stats.spd_violations;
    } else {
      rec.rmse = run_rmse(observation_errors(traj, *model, cfg.exclude_warmup ? base_first : 0));
    }
    out.push_back(rec);
  }
  return out;
}

BenchReport bench(const RunConfig& cfg) {
  cfg.validate();
  const auto cases = bench_cases(cfg);
  std::vector<std::vector<RunRecord>> per_run(cfg.runs);

  if (cfg.exec == Execution::parallel) {
    const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int r = 0; r < cfg.runs; ++r) {
      try {
        per_run[r] = bench_run(cfg, r);
      } catch (...) {
#pragma omp critical(mhe_bench_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (int r = 0; r < cfg.runs; ++r) per_run[r] = bench_run(cfg, r);
  }

  BenchReport report;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    BenchRow row;
    row.method = cases[c].first;
    row.horizon = cases[c].second;
    double sum = 0.0, time = 0.0, iters = 0.0, per_solve = 0.0;
    for (int r = 0; r < cfg.runs; ++r) {
      const RunRecord& rec = per_run[r][c];
      report.records.push_back(rec);
      sum += rec.rmse;
      time += rec.time_s;
      iters += static_cast<double>(rec.iters);
      per_solve += rec.solves > 0 ? rec.time_s / rec.solves : 0.0;
      row.nonconverged_runs += rec.converged ? 0 : 1;
      row.spd_violations += rec.spd_violations;
      row.preconditioner_reuses += rec.preconditioner_reuses;
    }
    const double M = cfg.runs;
    row.mean_rmse = sum / M;
    double ss = 0.0;
    for (int r = 0; r < cfg.runs; ++r) ss += std::pow(per_run[r][c].rmse - row.mean_rmse, 2);
    row.var_rmse = cfg.runs > 1 ? ss / (M - 1.0) : 0.0;
    row.mean_time_s = time / M;
    row.mean_iters = iters / M;
    row.mean_time_per_solve_s = per_solve / M;
    report.rows.push_back(row);
  }
  return report;
}

void write_bench_outputs(const BenchReport& report, const RunConfig& cfg,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::string errors = "method,N,mean_rmse,var_rmse\n";
  std::string cost = "method,N,mean_time_s,mean_iters\n";
  json rows = json::array();
  for (const BenchRow& row : report.rows) {
    const std::string name(to_string(row.method));
    const std::string N = std::to_string(row.horizon);
    errors += name + "," + N + "," + fmt(row.mean_rmse) + "," + fmt(row.var_rmse) + "\n";
    cost += name + "," + N + "," + fmt(row.mean_time_s) + "," + fmt(row.mean_iters) + "\n";
    rows.push_back({{"method", name},
                    {"N", row.horizon},
                    {"mean_rmse", row.mean_rmse},
                    {"var_rmse", row.var_rmse},
                    {"mean_time_s", row.mean_time_s},
                    {"mean_iters", row.mean_iters},
                    {"mean_time_per_solve_s", row.mean_time_per_solve_s},
                    {"nonconverged_runs", row.nonconverged_runs},
                    {"spd_violations", row.spd_violations},
                    {"preconditioner_reuses", row.preconditioner_reuses}});
  }
  write_file(dir / "errors.csv", errors);
  write_file(dir / "cost.csv", cost);

  json records = json::array();
  for (const RunRecord& rec : report.records) {
    records.push_back({{"seed", rec.seed},
                       {"method", std::string(to_string(rec.method))},
                       {"N", rec.horizon},
                       {"rmse", rec.rmse},
                       {"time_s", rec.time_s},
                       {"iters", rec.iters},
                       {"converged", rec.converged}});
  }
  write_file(dir / "runs.json", records.dump(1) + "\n");

  const json summary = {{"config", run_config_to_json(cfg)}, {"rows", rows}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace mhe
