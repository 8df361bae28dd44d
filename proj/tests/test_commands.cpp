#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ushock/commands.hpp"
#include "ushock/io.hpp"

using namespace ushock;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("ushock_cmd_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small(const fs::path &out) {
  json j;
  j["params"]["gamma"] = 3.0;
  j["params"]["kappa0"] = 1.0;
  j["grid"]["n_nodes"] = 1025;
  j["simulate"]["duration"] = 1.0;
  j["output"]["directory"] = out.string();
  return parse_config(j);
}

std::string slurp(const fs::path &f) {
  std::ifstream in(f, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace

TEST_CASE("profile table") {
  ProfileOptions o;
  o.xs = {0.0};
  std::ostringstream out, log;
  CHECK(cmd_profile(o, out, log) == kExitOk);
  CHECK(out.str() == "x,W,W1,W2,W3,W4,W5\n0,0,-1,0,0,0,120\n");

  o.index = 1;
  o.xs = {-2.0, 0.5, 3.0};
  std::ostringstream out1;
  cmd_profile(o, out1, log);
  std::istringstream rows(out1.str());
  std::string line;
  std::getline(rows, line);
  CHECK(line == "x,W,W1,W2,W3,W4,W5,W_closed");
  while (std::getline(rows, line)) {
    std::vector<double> v;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      v.push_back(parse_double(cell));
    CHECK(std::abs(v[1] - v[7]) <= 1e-10);
  }

  o = ProfileOptions{};
  o.count = 11;
  o.x_min = -1.0;
  o.x_max = 1.0;
  std::ostringstream out2;
  cmd_profile(o, out2, log);
  const std::string table = out2.str();
  CHECK(std::count(table.begin(), table.end(), '\n') == 12);
  o.nu = -1.0;
  CHECK_THROWS_AS(cmd_profile(o, out2, log), ConfigError);
}

TEST_CASE("simulate then verify") {
  const fs::path dir = scratch("steady");
  RunConfig c = small(dir);
  c.simulate.profile_start = true;
  std::ostringstream log;
  REQUIRE(cmd_simulate(c, log) == kExitOk);
  for (const char *f : {"config.json", "schema.json", "summary.json", "timeseries.csv",
                        "snapshots/snap_0000.csv", "snapshots/snap_0004.json"})
    CHECK(fs::exists(dir / f));
  const json summary = read_json(dir / "summary.json");
  CHECK(summary["final_profile_deviation"].get<double>() <= 1e-5);
  CHECK(std::isfinite(summary["final_profile_distance"].get<double>()));
  CHECK(cmd_verify(dir, nullptr, log) == kExitOk);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "margins.csv"));

  // corrupt W in the last snapshot: the growth bound fails by name
  const fs::path snap = dir / "snapshots/snap_0004.csv";
  CsvTable t = read_csv(snap);
  {
    CsvWriter w(snap, t.columns);
    for (auto row : t.rows) {
      row[1] *= 10.0;
      w.row(row);
    }
  }
  std::ostringstream vlog;
  CHECK(cmd_verify(dir, nullptr, vlog) == kExitVerify);
  CHECK(vlog.str().find("W_growth") != std::string::npos);

  CHECK(cmd_verify(scratch("missing"), nullptr, log) == kExitConfig);
}

TEST_CASE("simulate is deterministic") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream log;
  REQUIRE(cmd_simulate(small(a), log) == kExitOk);
  REQUIRE(cmd_simulate(small(b), log) == kExitOk);
  CHECK(slurp(a / "timeseries.csv") == slurp(b / "timeseries.csv"));
  CHECK(slurp(a / "snapshots/snap_0004.csv") == slurp(b / "snapshots/snap_0004.csv"));
}

TEST_CASE("cadence 0 keeps the endpoints") {
  const fs::path dir = scratch("cad0");
  RunConfig c = small(dir);
  c.output.cadence = 0.0;
  c.output.formats = {"json"};
  std::ostringstream log;
  REQUIRE(cmd_simulate(c, log) == kExitOk);
  int n = 0;
  for (const auto &e : fs::directory_iterator(dir / "snapshots")) {
    CHECK(e.path().extension() == ".json");
    ++n;
  }
  CHECK(n == 2);
}

TEST_CASE("oracle-burgers writes the comparison") {
  const fs::path dir = scratch("oracle");
  RunConfig c = small(dir);
  c.simulate.duration = 0.5;
  std::ostringstream log;
  CHECK(cmd_oracle_burgers(c, 1e-2, log) == kExitOk);
  const CsvTable t = read_csv(dir / "oracle_burgers.csv");
  CHECK(t.rows.size() == 3);
  CHECK(cmd_oracle_burgers(c, 1e-30, log) == kExitVerify);
}

TEST_CASE("solver failure exit code") {
  const fs::path dir = scratch("fail");
  RunConfig c = small(dir);
  c.solver.q5_floor = 1000.0;
  std::ostringstream log;
  CHECK(cmd_simulate(c, log) == kExitSolver);
  CHECK(fs::exists(dir / "failure.json"));
}

TEST_CASE("oracle-ode") {
  OdeOptions o;
  o.output_dir = scratch("ode");
  std::ostringstream log;
  CHECK(cmd_oracle_ode(o, log) == kExitOk);
  const json j = read_json(o.output_dir / "oracle_ode.json");
  CHECK(std::abs(j["alpha_star"].get<double>() + 2.0 / 3.0) <= 1e-8);
  o.rate = -1.0;
  CHECK_THROWS_AS(cmd_oracle_ode(o, log), ConfigError);
}
