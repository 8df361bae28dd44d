#include "ushock/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ushock {

using nlohmann::json;

namespace {

std::string join(const std::string &path, const std::string &key) {
  return path.empty() ? key : path + "." + key;
}

// message of a ParamError without its own field prefix
std::string bare_message(const ParamError &e) {
  const std::string w = e.what();
  const std::string prefix = e.field() + ": ";
  return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
}

// Typed access to one table; remembers which keys were consumed.
class Reader {
public:
  Reader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError(path_.empty() ? "<root>" : path_, "expected a table");
  }

  void get(const std::string &key, double &out) {
    const json *v = find(key);
    if (!v)
      return;
    if (!v->is_number())
      throw ConfigError(join(path_, key), "expected a number");
    out = v->get<double>();
    if (!std::isfinite(out))
      throw ConfigError(join(path_, key), "must be finite");
  }

  void get(const std::string &key, int &out) {
    const json *v = find(key);
    if (!v)
      return;
    if (!v->is_number_integer())
      throw ConfigError(join(path_, key), "expected an integer");
    const auto x = v->get<long long>();
    if (x < -1000000000LL || x > 1000000000LL)
      throw ConfigError(join(path_, key), "out of range");
    out = static_cast<int>(x);
  }

  void get(const std::string &key, bool &out) {
    const json *v = find(key);
    if (!v)
      return;
    if (!v->is_boolean())
      throw ConfigError(join(path_, key), "expected true or false");
    out = v->get<bool>();
  }

  void get(const std::string &key, std::string &out) {
    const json *v = find(key);
    if (!v)
      return;
    if (!v->is_string())
      throw ConfigError(join(path_, key), "expected a string");
    out = v->get<std::string>();
  }

  void get(const std::string &key, std::vector<std::string> &out) {
    const json *v = find(key);
    if (!v)
      return;
    if (!v->is_array())
      throw ConfigError(join(path_, key), "expected a list of strings");
    out.clear();
    for (const auto &e : *v) {
      if (!e.is_string())
        throw ConfigError(join(path_, key), "expected a list of strings");
      out.push_back(e.get<std::string>());
    }
  }

  template <typename Fn> void enumerated(const std::string &key, Fn &&parse) {
    std::string name;
    if (!find(key))
      return;
    get(key, name);
    try {
      parse(name);
    } catch (const ParamError &e) {
      throw ConfigError(join(path_, key), bare_message(e));
    }
  }

  Reader child(const std::string &key) {
    const json *v = find(key);
    static const json empty = json::object();
    return Reader(v ? *v : empty, join(path_, key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(join(path_, it.key()), "unknown key");
  }

private:
  const json *find(const std::string &key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null())
      return nullptr;
    return &*it;
  }

  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string &key, const std::string &what) {
  if (!ok)
    throw ConfigError(key, what);
}

void check_names(const std::vector<std::string> &names, const std::string &key) {
  const auto known = all_bootstrap_checks();
  for (const auto &n : names)
    require(std::find(known.begin(), known.end(), n) != known.end(), key,
            "unknown check '" + n + "'");
}

} // namespace

std::string to_string(ClosureKind k) {
  return k == ClosureKind::Discrete ? "discrete" : "formula";
}

ClosureKind closure_from_string(const std::string &name) {
  if (name == "discrete")
    return ClosureKind::Discrete;
  if (name == "formula")
    return ClosureKind::Formula;
  throw ParamError("solver.closure",
                   "expected 'discrete' or 'formula', got '" + name + "'");
}

RunConfig default_config(double epsilon) {
  RunConfig c;
  c.params.epsilon = epsilon;
  c.data = default_data_spec(epsilon);
  return c;
}

RunConfig parse_config(const json &j, const std::filesystem::path &base_dir) {
  Reader root(j, "");
  RunConfig c;
  c.base_dir = base_dir;

  {
    Reader r = root.child("params");
    r.get("gamma", c.params.gamma);
    r.get("epsilon", c.params.epsilon);
    r.get("kappa0", c.params.kappa0);
    r.get("M", c.params.bigM);
    r.get("ell", c.params.ell);
    r.finish();
  }
  // data defaults scale with epsilon
  if (c.params.epsilon > 0.0)
    c.data = default_data_spec(c.params.epsilon);
  {
    Reader r = root.child("grid");
    r.get("n_nodes", c.grid.n_nodes);
    r.get("stretch", c.grid.stretch);
    r.get("half_width", c.grid.half_width);
    r.finish();
  }
  {
    Reader r = root.child("data");
    r.get("alpha", c.data.alpha);
    r.get("beta", c.data.beta);
    r.get("z0_amplitude", c.data.z0_amplitude);
    r.get("a0_amplitude", c.data.a0_amplitude);
    r.get("z0_width", c.data.z0_width);
    r.get("a0_width", c.data.a0_width);
    r.get("cutoff_profile", c.data.cutoff_profile);
    Reader pr = r.child("perturbation");
    auto &pt = c.data.perturbation;
    pr.enumerated("kind", [&](const std::string &n) {
      pt.kind = perturbation_from_string(n);
    });
    pr.get("even_amplitude", pt.even_amplitude);
    pr.get("odd_amplitude", pt.odd_amplitude);
    pr.get("samples_file", pt.samples_file);
    pr.finish();
    r.finish();
  }
  {
    Reader r = root.child("solver");
    auto &s = c.solver;
    r.get("cfl", s.cfl);
    r.get("drift_tol", s.drift_tol);
    r.get("q5_floor", s.q5_floor);
    r.get("segment_length", s.segment_length);
    r.get("step_multiple", s.step_multiple);
    r.get("central_band", s.central_band);
    r.get("upwind_points", s.upwind_points);
    r.enumerated("closure", [&](const std::string &n) {
      s.closure = closure_from_string(n);
    });
    r.get("enforce_drift", s.enforce_drift);
    r.finish();
  }
  {
    Reader r = root.child("shooting");
    auto &s = c.shooting;
    r.get("n_max", s.n_max);
    r.get("newton_tol", s.newton_tol);
    r.get("cauchy_tol", s.cauchy_tol);
    r.enumerated("jacobian_source", [&](const std::string &n) {
      s.jacobian_source = jacobian_source_from_string(n);
    });
    r.get("fd_step", s.fd_step);
    r.get("trust_scale", s.trust_scale);
    r.get("max_newton", s.max_newton);
    r.get("cond_max", s.cond_max);
    r.get("spacing", s.spacing);
    r.get("final_cadence", s.final_cadence);
    r.get("final_extra", s.final_extra);
    r.finish();
  }
  {
    Reader r = root.child("diagnostics");
    auto &d = c.diagnostics;
    r.get("checks", d.checks);
    r.get("hard", d.hard);
    r.get("delta", d.delta);
    r.get("holder_exponent", d.holder_exponent);
    r.get("nu_settle_tol", d.nu_settle_tol);
    Reader k = r.child("constants");
    k.get("growth", d.constants.growth);
    k.get("slope", d.constants.slope);
    k.get("base", d.constants.base);
    k.get("q3_constant", d.constants.q3_constant);
    k.get("q5_floor", d.constants.q5_floor);
    k.get("xi_dot_factor", d.constants.xi_dot_factor);
    k.finish();
    r.finish();
  }
  {
    Reader r = root.child("output");
    r.get("directory", c.output.directory);
    r.get("cadence", c.output.cadence);
    r.get("formats", c.output.formats);
    r.get("keep_sens_fields", c.output.keep_sens_fields);
    r.finish();
  }
  {
    Reader r = root.child("simulate");
    r.get("duration", c.simulate.duration);
    r.get("oracle", c.simulate.oracle);
    r.get("profile_start", c.simulate.profile_start);
    r.finish();
  }
  root.finish();
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in)
    throw ConfigError("<file>", "cannot open " + file.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error &e) {
    throw ConfigError("<file>", std::string("parse error: ") + e.what());
  }
  return parse_config(j, file.parent_path());
}

json to_json(const RunConfig &c) {
  json j;
  j["params"] = {{"gamma", c.params.gamma},
                 {"epsilon", c.params.epsilon},
                 {"kappa0", c.params.kappa0},
                 {"M", c.params.bigM},
                 {"ell", c.params.ell}};
  j["grid"] = {{"n_nodes", c.grid.n_nodes},
               {"stretch", c.grid.stretch},
               {"half_width", c.grid.half_width}};
  const auto &pt = c.data.perturbation;
  j["data"] = {{"alpha", c.data.alpha},
               {"beta", c.data.beta},
               {"z0_amplitude", c.data.z0_amplitude},
               {"a0_amplitude", c.data.a0_amplitude},
               {"z0_width", c.data.z0_width},
               {"a0_width", c.data.a0_width},
               {"cutoff_profile", c.data.cutoff_profile},
               {"perturbation",
                {{"kind", to_string(pt.kind)},
                 {"even_amplitude", pt.even_amplitude},
                 {"odd_amplitude", pt.odd_amplitude},
                 {"samples_file", pt.samples_file}}}};
  const auto &s = c.solver;
  j["solver"] = {{"cfl", s.cfl},
                 {"drift_tol", s.drift_tol},
                 {"q5_floor", s.q5_floor},
                 {"segment_length", s.segment_length},
                 {"step_multiple", s.step_multiple},
                 {"central_band", s.central_band},
                 {"upwind_points", s.upwind_points},
                 {"closure", to_string(s.closure)},
                 {"enforce_drift", s.enforce_drift}};
  const auto &sh = c.shooting;
  j["shooting"] = {{"n_max", sh.n_max},
                   {"newton_tol", sh.newton_tol},
                   {"cauchy_tol", sh.cauchy_tol},
                   {"jacobian_source", to_string(sh.jacobian_source)},
                   {"fd_step", sh.fd_step},
                   {"trust_scale", sh.trust_scale},
                   {"max_newton", sh.max_newton},
                   {"cond_max", sh.cond_max},
                   {"spacing", sh.spacing},
                   {"final_cadence", sh.final_cadence},
                   {"final_extra", sh.final_extra}};
  const auto &d = c.diagnostics;
  j["diagnostics"] = {{"checks", d.checks},
                      {"hard", d.hard},
                      {"delta", d.delta},
                      {"holder_exponent", d.holder_exponent},
                      {"nu_settle_tol", d.nu_settle_tol},
                      {"constants",
                       {{"growth", d.constants.growth},
                        {"slope", d.constants.slope},
                        {"base", d.constants.base},
                        {"q3_constant", d.constants.q3_constant},
                        {"q5_floor", d.constants.q5_floor},
                        {"xi_dot_factor", d.constants.xi_dot_factor}}}};
  j["output"] = {{"directory", c.output.directory},
                 {"cadence", c.output.cadence},
                 {"formats", c.output.formats},
                 {"keep_sens_fields", c.output.keep_sens_fields}};
  j["simulate"] = {{"duration", c.simulate.duration},
                   {"oracle", c.simulate.oracle},
                   {"profile_start", c.simulate.profile_start}};
  return j;
}

void validate(const RunConfig &c) {
  Params p;
  try {
    p = build_params(c);
  } catch (const ParamError &e) {
    throw ConfigError("params." + (e.field() == "bigM" ? std::string("M") : e.field()),
                      bare_message(e));
  }
  try {
    build_grid(c);
  } catch (const ParamError &e) {
    throw ConfigError("grid." + e.field(), bare_message(e));
  }
  try {
    validate(build_data(c), p);
  } catch (const ParamError &e) {
    throw ConfigError(e.field(), bare_message(e));
  }

  const auto &s = c.solver;
  require(s.cfl > 0.0 && s.cfl <= 1.0, "solver.cfl", "must be in (0, 1]");
  require(s.drift_tol > 0.0, "solver.drift_tol", "must be > 0");
  require(s.q5_floor > 0.0, "solver.q5_floor", "must be > 0");
  require(s.segment_length > 0.0, "solver.segment_length", "must be > 0");
  require(s.step_multiple >= 1, "solver.step_multiple", "must be >= 1");
  require(s.upwind_points == 4 || s.upwind_points == 6, "solver.upwind_points",
          "must be 4 or 6");
  require(s.central_band >= 6, "solver.central_band",
          "must cover the 13 central nodes");
  require(2 * s.central_band + 8 < c.grid.n_nodes, "solver.central_band",
          "too wide for the grid");

  const auto &sh = c.shooting;
  require(sh.n_max >= 3, "shooting.n_max", "must be >= 3");
  require(sh.newton_tol > 0.0, "shooting.newton_tol", "must be > 0");
  require(sh.cauchy_tol > 0.0, "shooting.cauchy_tol", "must be > 0");
  require(sh.fd_step > 0.0, "shooting.fd_step", "must be > 0");
  require(sh.trust_scale > 0.0, "shooting.trust_scale", "must be > 0");
  require(sh.max_newton >= 1, "shooting.max_newton", "must be >= 1");
  require(sh.cond_max > 1.0, "shooting.cond_max", "must be > 1");
  require(sh.spacing > 0.0, "shooting.spacing", "must be > 0");
  require(sh.final_cadence >= 0.0, "shooting.final_cadence", "must be >= 0");
  require(sh.final_extra >= 0.0, "shooting.final_extra", "must be >= 0");

  const auto &d = c.diagnostics;
  check_names(d.checks, "diagnostics.checks");
  check_names(d.hard, "diagnostics.hard");
  require(d.delta >= 0.0 && d.delta < 0.2, "diagnostics.delta",
          "must be in [0, 0.2)");
  require(d.holder_exponent > 0.0 && d.holder_exponent <= 1.0,
          "diagnostics.holder_exponent", "must be in (0, 1]");
  require(d.nu_settle_tol > 0.0, "diagnostics.nu_settle_tol", "must be > 0");
  const auto &k = d.constants;
  require(k.growth > 0.0, "diagnostics.constants.growth", "must be > 0");
  require(k.slope > 0.0, "diagnostics.constants.slope", "must be > 0");
  require(k.base > 1.0, "diagnostics.constants.base", "must be > 1");
  require(k.q3_constant > 0.0, "diagnostics.constants.q3_constant", "must be > 0");
  require(k.q5_floor > 0.0, "diagnostics.constants.q5_floor", "must be > 0");
  require(k.xi_dot_factor > 0.0, "diagnostics.constants.xi_dot_factor",
          "must be > 0");

  require(!c.output.directory.empty(), "output.directory", "must not be empty");
  require(c.output.cadence >= 0.0, "output.cadence", "must be >= 0");
  for (const auto &f : c.output.formats)
    require(f == "csv" || f == "json", "output.formats",
            "unknown format '" + f + "'");

  require(c.simulate.duration >= 0.0, "simulate.duration", "must be >= 0");
  if (c.simulate.oracle)
    require(c.data.z0_amplitude == 0.0 && c.data.a0_amplitude == 0.0,
            "simulate.oracle", "needs data.z0_amplitude = data.a0_amplitude = 0");
}

Params build_params(const RunConfig &c) {
  return make_params(c.params.gamma, c.params.epsilon, c.params.kappa0,
                     c.params.bigM, c.params.ell);
}

Grid build_grid(const RunConfig &c) {
  return make_grid(c.grid.n_nodes, c.grid.stretch, c.grid.half_width);
}

DataSpec build_data(const RunConfig &c) {
  DataSpec d = c.data;
  auto &pt = d.perturbation;
  if (pt.kind == PerturbationKind::Samples && pt.sample_x.empty()) {
    if (pt.samples_file.empty())
      throw ConfigError("data.perturbation.samples_file",
                        "required when kind is 'samples'");
    std::filesystem::path f(pt.samples_file);
    if (f.is_relative() && !c.base_dir.empty())
      f = c.base_dir / f;
    try {
      load_samples(f, pt.sample_x, pt.sample_v);
    } catch (const std::runtime_error &e) {
      throw ConfigError("data.perturbation.samples_file", e.what());
    }
  }
  return d;
}

ShootingProblem build_problem(const RunConfig &c) {
  ShootingProblem prob{build_params(c), build_grid(c), c.solver, build_data(c),
                       c.shooting};
  return prob;
}

void load_samples(const std::filesystem::path &file, std::vector<double> &xs,
                  std::vector<double> &vs) {
  std::ifstream in(file);
  if (!in)
    throw std::runtime_error("cannot open " + file.string());
  xs.clear();
  vs.clear();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#')
      continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, v;
    if (!(ls >> x >> v)) {
      if (line_no == 1)
        continue; // header
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                               ": expected two numbers");
    }
    if (!xs.empty() && !(x > xs.back()))
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                               ": x must be strictly increasing");
    xs.push_back(x);
    vs.push_back(v);
  }
}

} // namespace ushock
