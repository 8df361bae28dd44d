#include "ushock/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace ushock {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string &text) {
  if (text == "nan")
    return std::nan("");
  if (text == "inf")
    return HUGE_VAL;
  if (text == "-inf")
    return -HUGE_VAL;
  double v = 0.0;
  const char *b = text.data(), *e = text.data() + text.size();
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e)
    throw std::runtime_error("not a number: '" + text + "'");
  return v;
}

fs::path output_dir(const OutputConfig &out) {
  if (const char *env = std::getenv("USHOCK_OUTPUT_DIR"); env && *env)
    return fs::path(env);
  return fs::path(out.directory);
}

void write_text(const fs::path &file, const std::string &text) {
  if (file.has_parent_path())
    fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  out << text;
  if (!out)
    throw std::runtime_error("cannot write " + file.string());
}

void write_json(const fs::path &file, const json &j) {
  write_text(file, j.dump(2) + "\n");
}

json read_json(const fs::path &file) {
  std::ifstream in(file);
  if (!in)
    throw std::runtime_error("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw std::runtime_error(file.string() + ": " + e.what());
  }
}

CsvWriter::CsvWriter(const fs::path &file, const std::vector<std::string> &columns)
    : file_(file), n_(columns.size()) {
  if (file.has_parent_path())
    fs::create_directories(file.parent_path());
  out_.open(file, std::ios::binary);
  if (!out_)
    throw std::runtime_error("cannot write " + file.string());
  for (std::size_t i = 0; i < n_; ++i)
    out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double> &values) {
  if (values.size() != n_)
    throw std::logic_error("CsvWriter: row width mismatch in " + file_.string());
  std::string line;
  for (std::size_t i = 0; i < n_; ++i) {
    if (i)
      line += ',';
    line += format_double(values[i]);
  }
  line += '\n';
  out_ << line;
}

std::size_t CsvTable::column(const std::string &name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end())
    throw std::runtime_error("missing column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

CsvTable read_csv(const fs::path &file) {
  std::ifstream in(file);
  if (!in)
    throw std::runtime_error("cannot open " + file.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(file.string() + ": empty file");
  {
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      t.columns.push_back(cell);
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(parse_double(cell));
      } catch (const std::runtime_error &e) {
        throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                                 ": " + e.what());
      }
    }
    if (row.size() != t.columns.size())
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                               ": wrong number of cells");
    t.rows.push_back(std::move(row));
  }
  return t;
}

json modulation_json(const ModulationState &m) {
  return {{"tau", m.tau},         {"xi", m.xi},         {"kappa", m.kappa},
          {"tau_dot", m.tau_dot}, {"xi_dot", m.xi_dot}, {"kappa_dot", m.kappa_dot},
          {"mu", m.mu},           {"beta_tau", m.beta_tau}};
}

json snapshot_json(const Snapshot &sn) {
  json j = modulation_json(sn.mod);
  j["s"] = sn.fields.s;
  j["t"] = sn.mod.tau - std::exp(-sn.fields.s);
  j["q"] = sn.q;
  j["drift"] = constraint_drift(sn.q);
  json sens = json::array();
  for (const auto &b : sn.sens)
    sens.push_back({{"q_c", b.q_c},
                    {"mu_c", b.mu_c},
                    {"tau_dot_c", b.tau_dot_c},
                    {"kappa_dot_c", b.kappa_dot_c},
                    {"xi_dot_c", b.xi_dot_c},
                    {"kappa_c", b.kappa_c},
                    {"tau_c", b.tau_c},
                    {"xi_c", b.xi_c}});
  j["sensitivities"] = sens;
  return j;
}

void write_snapshot(const fs::path &dir, int index, const Snapshot &sn,
                    const Grid &grid, const std::vector<std::string> &formats) {
  char stem[32];
  std::snprintf(stem, sizeof stem, "snap_%04d", index);
  const auto has = [&](const char *f) {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  };
  if (has("csv")) {
    CsvWriter w(dir / (std::string(stem) + ".csv"), {"x", "W", "Z", "A"});
    for (int j = 0; j < grid.n_nodes; ++j)
      w.row({grid.x(j), sn.fields.W(j), sn.fields.Z(j), sn.fields.A(j)});
  }
  if (has("json"))
    write_json(dir / (std::string(stem) + ".json"), snapshot_json(sn));
}

Snapshot read_snapshot(const fs::path &csv, const fs::path &sidecar,
                       const Grid &grid) {
  const CsvTable t = read_csv(csv);
  const std::size_t cx = t.column("x"), cw = t.column("W"), cz = t.column("Z"),
                    ca = t.column("A");
  if (static_cast<int>(t.rows.size()) != grid.n_nodes)
    throw std::runtime_error(csv.string() + ": expected " +
                             std::to_string(grid.n_nodes) + " rows");
  Snapshot sn;
  const int n = grid.n_nodes;
  sn.fields.W.resize(n);
  sn.fields.Z.resize(n);
  sn.fields.A.resize(n);
  for (int j = 0; j < n; ++j) {
    const auto &r = t.rows[j];
    if (std::abs(r[cx] - grid.x(j)) > 1e-12 * (1.0 + std::abs(grid.x(j))))
      throw std::runtime_error(csv.string() + ": x column does not match the grid");
    sn.fields.W(j) = r[cw];
    sn.fields.Z(j) = r[cz];
    sn.fields.A(j) = r[ca];
  }
  const json j = read_json(sidecar);
  try {
    sn.fields.s = j.at("s").get<double>();
    auto &m = sn.mod;
    m.tau = j.at("tau").get<double>();
    m.xi = j.at("xi").get<double>();
    m.kappa = j.at("kappa").get<double>();
    m.tau_dot = j.at("tau_dot").get<double>();
    m.xi_dot = j.at("xi_dot").get<double>();
    m.kappa_dot = j.at("kappa_dot").get<double>();
    m.mu = j.at("mu").get<double>();
    m.beta_tau = j.at("beta_tau").get<double>();
    sn.q = j.at("q").get<QVector>();
    if (j.contains("sensitivities"))
      for (const auto &b : j.at("sensitivities")) {
        SensitivitySnapshot ss;
        ss.q_c = b.at("q_c").get<QVector>();
        ss.mu_c = b.at("mu_c").get<double>();
        ss.tau_dot_c = b.at("tau_dot_c").get<double>();
        ss.kappa_dot_c = b.at("kappa_dot_c").get<double>();
        ss.xi_dot_c = b.at("xi_dot_c").get<double>();
        ss.kappa_c = b.at("kappa_c").get<double>();
        ss.tau_c = b.at("tau_c").get<double>();
        ss.xi_c = b.at("xi_c").get<double>();
        sn.sens.push_back(ss);
      }
  } catch (const json::exception &e) {
    throw std::runtime_error(sidecar.string() + ": " + e.what());
  }
  return sn;
}

RunArtifacts read_run(const fs::path &dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("run directory not found: " + dir.string());
  RunArtifacts run;
  run.config = parse_config(read_json(dir / "config.json"), dir);
  const Grid grid = build_grid(run.config);
  std::vector<fs::path> stems;
  const fs::path sdir = dir / "snapshots";
  if (!fs::is_directory(sdir))
    throw std::runtime_error("no snapshots/ in " + dir.string());
  for (const auto &e : fs::directory_iterator(sdir))
    if (e.path().extension() == ".json" &&
        e.path().filename().string().rfind("snap_", 0) == 0)
      stems.push_back(e.path().parent_path() / e.path().stem());
  std::sort(stems.begin(), stems.end());
  for (const auto &st : stems)
    run.snapshots.push_back(read_snapshot(fs::path(st.string() + ".csv"),
                                          fs::path(st.string() + ".json"), grid));
  if (run.snapshots.empty())
    throw std::runtime_error("no snapshots in " + sdir.string());
  return run;
}

json output_schema() {
  json s;
  s["float_format"] = "shortest round-trip decimal; nan, inf, -inf spelled out";
  s["files"] = {
      {"snapshots/snap_NNNN.csv",
       {{"x", "self-similar coordinate of the grid node"},
        {"W", "self-similar w field"},
        {"Z", "self-similar z field"},
        {"A", "self-similar a field"}}},
      {"snapshots/snap_NNNN.json",
       {{"s", "self-similar time"},
        {"t", "physical time tau - exp(-s)"},
        {"tau, xi, kappa", "modulation variables"},
        {"tau_dot, xi_dot, kappa_dot", "their physical-time rates"},
        {"mu", "transport speed of W at x = 0"},
        {"beta_tau", "1 / (1 - tau_dot)"},
        {"q", "x-derivatives of W at 0, orders 0..6"},
        {"drift", "max(|q0|, |q1 + 1|, |q4|)"},
        {"sensitivities", "per parameter (alpha, beta): derivatives of q and the modulation"}}},
      {"timeseries.csv",
       {{"s", "self-similar time"},
        {"t", "physical time"},
        {"tau, xi, kappa, tau_dot, xi_dot, kappa_dot, mu", "modulation state"},
        {"q0..q6", "x-derivatives of W at 0"},
        {"drift", "constraint drift"},
        {"profile_distance", "weighted distance to the rescaled profile with nu = q5"},
        {"dq2_dalpha, dq2_dbeta, dq3_dalpha, dq3_dbeta", "Jacobian entries (shoot only)"}}},
      {"oracle_burgers.csv",
       {{"s", "self-similar time"},
        {"t", "physical time"},
        {"sup_error", "max |w - w_exact| over the nodes"},
        {"weighted_error", "max |W - W_exact| eta_{-1/20}"},
        {"x_at_max", "node where sup_error is attained"}}},
      {"profile.csv",
       {{"x", "abscissa"},
        {"W, W1..W5", "profile and its derivatives"},
        {"W_closed", "Cardano closed form (index 1 only)"}}},
      {"oracle_ode.csv",
       {{"n", "shooting node s_n = n"},
        {"alpha", "accepted initial value"},
        {"residual", "|u(s_n)|"},
        {"newton_steps", "Newton corrections used"}}},
      {"iterates.jsonl", "one JSON object per shooting level"},
      {"margins.csv",
       {{"check", "row index into report.json entries"},
        {"s", "time of the worst snapshot"},
        {"value", "measured quantity"},
        {"bound", "configured bound"},
        {"margin", "signed slack, negative when violated"}}}};
  return s;
}

void write_schema(const fs::path &dir) { write_json(dir / "schema.json", output_schema()); }

} // namespace ushock
