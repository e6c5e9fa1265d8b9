#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tightlab/exec.hpp"
#include "tightlab/scenario.hpp"

namespace tightlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

enum class Command { cover, calc, measure, simulate, verify };
const char* to_string(Command c);

enum ExitCode : int { kOk = 0, kUsage = 1, kPremise = 2, kViolation = 3 };

/// A CSV table held in memory until the report is written.
struct Table {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const;
};

struct Report {
  Json json;
  int exit_code = kOk;
  std::vector<Table> tables;
};

/// Runs one subcommand on a parsed scenario. Module errors never escape:
/// they land in the report's "errors" list with their names verbatim.
Report run(Command cmd, const Scenario& sc, Exec exec = Exec::parallel);

/// Report text: two-space indent, non-finite numbers as "inf"/"-inf"/"nan".
std::string dump_report(const Json& report);
/// Writes report.json plus every table into dir (created if missing).
void write_report(const Report& r, const std::filesystem::path& dir);
Json load_report(const std::filesystem::path& path);

/// The effective configuration as embedded in reports.
Json scenario_json(const Scenario& sc);

struct DiffEntry {
  std::string path;  ///< JSON pointer
  std::string a;
  std::string b;
  bool mc;     ///< the path lies under an "mc" object
  bool close;  ///< numeric and within the relative tolerance
};

struct DiffResult {
  bool same = true;
  bool schema_mismatch = false;
  std::vector<DiffEntry> entries;
  std::size_t non_mc_differences = 0;

  std::string text() const;
};

/// Field-by-field comparison, "timestamp" excluded. Numbers within rel_tol
/// are flagged close but still count as differences.
DiffResult diff_reports(const Json& a, const Json& b, double rel_tol = 1e-9);

}  // namespace tightlab
