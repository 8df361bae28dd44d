#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ushock/config.hpp"
#include "ushock/dynamics.hpp"

namespace ushock {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string &text);

/// The configured directory, or $USHOCK_OUTPUT_DIR when set and non-empty.
std::filesystem::path output_dir(const OutputConfig &out);

void write_text(const std::filesystem::path &file, const std::string &text);
void write_json(const std::filesystem::path &file, const nlohmann::json &j);
nlohmann::json read_json(const std::filesystem::path &file);

/// Small CSV writer; every numeric cell goes through format_double.
class CsvWriter {
public:
  CsvWriter(const std::filesystem::path &file,
            const std::vector<std::string> &columns);
  void row(const std::vector<double> &values);
  std::size_t columns() const { return n_; }

private:
  std::filesystem::path file_;
  std::ofstream out_;
  std::size_t n_ = 0;
};

/// Columns and values of a CSV file written by CsvWriter.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  /// index of a column; throws std::runtime_error when absent
  std::size_t column(const std::string &name) const;
};
CsvTable read_csv(const std::filesystem::path &file);

nlohmann::json modulation_json(const ModulationState &m);
nlohmann::json snapshot_json(const Snapshot &sn);

/// snap_XXXX.csv (x, W, Z, A) and snap_XXXX.json per the format list.
void write_snapshot(const std::filesystem::path &dir, int index,
                    const Snapshot &sn, const Grid &grid,
                    const std::vector<std::string> &formats);

/// Reads one snapshot pair; x must match the grid nodes to round-off.
Snapshot read_snapshot(const std::filesystem::path &csv,
                       const std::filesystem::path &sidecar, const Grid &grid);

struct RunArtifacts {
  RunConfig config;
  std::vector<Snapshot> snapshots;
};

/// Loads config.json and the snapshots/ series of a run directory.
RunArtifacts read_run(const std::filesystem::path &dir);

/// schema.json describing every CSV this tool writes.
nlohmann::json output_schema();
void write_schema(const std::filesystem::path &dir);

} // namespace ushock
