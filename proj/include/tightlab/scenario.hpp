#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tightlab/field_lab.hpp"
#include "tightlab/metric_space.hpp"

namespace tightlab {

enum class Route { entropy, majorizing, both };
const char* to_string(Route r);
Route route_from_string(const std::string& s);

struct SpaceSpec {
  std::string family = "interval";  ///< interval | brownian | torus | product | two-point | file
  std::size_t points = 16;
  std::size_t dims = 2;   ///< product only
  double d = 0.7;         ///< two-point only
  std::filesystem::path file;
  double tol = 1e-9;
};

/// amplitude/phase profiles: an explicit list or a named profile evaluated on
/// the point coordinates ("ones", "coord" for a(t) = t, "zero").
using Profile = std::variant<std::string, std::vector<double>>;

struct ModelSpec {
  std::string kind = "gaussian";  ///< gaussian | rademacher | trig | student-t
  std::string covariance = "brownian";  ///< brownian | identity | file
  std::filesystem::path covariance_file;
  Profile amplitude = std::string("ones");
  Profile phase = std::string("zero");
  double dof = 3.0;
};

struct CalculusSpec {
  double lambda_half_width = 4.0;
  std::size_t lambda_points = 201;
  double chi_half_width = 64.0;
  std::size_t chi_points = 513;
  std::size_t n_cap = 1'000'000;
};

struct GridSpec {
  std::vector<double> u{1.0, 1.5, 2.0};
  std::vector<std::size_t> n{1, 4, 16};
  std::vector<double> radii{0.5, 1.0, 2.0};
  std::vector<double> mu{1.0, 2.0, 4.0};
  std::vector<double> x{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0};
  std::vector<double> moment_lambda{0.25, 0.5, 1.0};
  std::vector<double> eps;  ///< empty: the jump radii of the space
};

struct McSpec {
  std::size_t reps = 10000;
  std::uint64_t seed = 0;
};

struct CalibrationSpec {
  double c_max = 100.0;
  double c_min = 1e-6;
  double cushion = 2.0;
};

struct EntropySpec {
  double C = 1.0;
  std::string cover = "automatic";  ///< exact | greedy | automatic
  std::size_t exact_cap = 20;
  std::vector<std::size_t> refinement;  ///< coarser point counts for the J check; empty: points/4, points/2
  double refinement_tol = 0.05;
  std::vector<double> u;      ///< empty: grids.u
  std::vector<double> radii;  ///< empty: grids.radii
};

struct MajorizingSpec {
  std::string phi = "gauss2";
  double p = 2.0;
  std::string measure = "uniform";  ///< uniform | file
  std::filesystem::path measure_file;
  std::optional<double> V;          ///< default: diameter of d_Phi
  std::vector<double> v_grid;       ///< default: {D/4, D/2, D, 2D}
  std::optional<std::size_t> base_point;
  double C = 1.0;
  std::vector<double> u;      ///< empty: grids.u
  std::vector<double> radii;  ///< empty: grids.radii
};

struct Scenario {
  std::string name;
  std::filesystem::path source;
  SpaceSpec space;
  ModelSpec model;
  CalculusSpec calculus;
  GridSpec grids;
  McSpec mc;
  CalibrationSpec calibration;
  Route route = Route::entropy;
  std::optional<EntropySpec> entropy;        ///< present iff the route uses it
  std::optional<MajorizingSpec> majorizing;  ///< present iff the route uses it
  std::filesystem::path out_dir;
};

/// CLI flags that override scenario fields.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<Route> route;
  std::optional<std::filesystem::path> out;
};

/// Parses TOML. ConfigError messages carry "file:line: field: problem".
Scenario parse_scenario(const std::filesystem::path& path, const Overrides& ov = {});
Scenario parse_scenario_string(const std::string& text, const std::filesystem::path& origin,
                               const Overrides& ov = {});

MetricSpace build_space(const SpaceSpec& s);
/// Builds the space spec with a different point count (refinement studies).
MetricSpace build_space(const SpaceSpec& s, std::size_t points);
RandomFieldModel build_model(const ModelSpec& m, const MetricSpace& mesh);

}  // namespace tightlab
