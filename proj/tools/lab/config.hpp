#pragma once

#include "ctlab/cost.hpp"
#include "ctlab/density.hpp"
#include "ctlab/grid.hpp"
#include "ctlab/transport.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lab {

inline constexpr int kSchemaVersion = 1;

/// Support of a measure: a box, a ball or a union of balls.
struct DomainSpec {
  std::string type = "box";
  ctlab::Box box;
  std::vector<ctlab::Ball> balls;

  ctlab::Box bounding_box() const;
  bool contains(ctlab::PointRef x) const;
  bool convex() const { return type != "balls" || balls.size() == 1; }
};

struct MeasureSpec {
  DomainSpec domain;
  std::string density = "uniform";  // uniform | gaussian-mixture | csv-grid
  std::vector<ctlab::GaussianComponent> components;
  std::string csv_path;
  bool jitter = false;

  ctlab::DensitySpec to_density() const;
};

struct CostSpec {
  ctlab::CostKind kind = ctlab::CostKind::QuadraticBilinear;
  double exponent = 2.0;
  double delta = 0.0;
  ctlab::Bump bump = ctlab::Bump::Phi1;
};

struct GridSpec {
  int n_atoms = 400;
  int n_atoms_target = 0;  // 0: same as n_atoms
  int eval_resolution = 64;
  std::optional<ctlab::Box> eval_box;  // default: source box grown by `margin` on every side
  double margin = 0.25;
};

struct SolverSpec {
  ctlab::SolverMethod method = ctlab::SolverMethod::Exact;
  double epsilon = 1e-3;
  int max_iter = 20000;
  double tol = 1e-9;
};

struct ExperimentSpec {
  double M = 4.0;
  double N = 2.0;
  std::vector<double> p{2.0};
  double h0 = 0.02;
  int K_levels = 3;
  double sigma = 0.5;
  double c_prime = 4.0;
  double ratio_cap = 9.0;
  std::uint64_t seed = 1;
  double rho0 = 0.5;
  int step_multiplier = 1;
  int engulf_samples = 100;
  std::vector<double> engulf_heights{1e-3, 3e-3, 1e-2};
  std::vector<double> section_heights{0.01, 0.05, 0.1};
  std::vector<double> delta_sweep;     // decay runs once per delta when set
  std::vector<int> resolution_sweep;   // w2p and singular run once per resolution when set
  double boundary_h0 = 0.125;
  int boundary_families = 6;
  bool exclude_singular = false;
  bool closeness_check = false;        // report sup |u - |x|^2/2| after solve
  double domain_bound = 0.0;           // K > 1: require B_{1/K} ⊂ domain ⊂ B_K; 0 disables
};

struct ScenarioConfig {
  int schema = kSchemaVersion;
  std::string name = "scenario";
  int dimension = 2;
  MeasureSpec source;
  MeasureSpec target;
  CostSpec cost;
  GridSpec grid;
  SolverSpec solver;
  ExperimentSpec experiment;
  std::string output = "lab_out";
};

/// Parses and validates; unknown keys and out-of-range values raise
/// ctlab::Error with kind Validation.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);

/// Every field, defaults included, with keys in sorted order.
nlohmann::json to_json(const ScenarioConfig& cfg);

/// Compact dump of to_json without the output directory.
std::string canonical_string(const ScenarioConfig& cfg);
/// 64-bit FNV-1a of the canonical string, as 16 hex digits.
std::string scenario_hash(const ScenarioConfig& cfg);
/// Hash of the parts a solve depends on (measures, cost, atoms, solver, seed).
std::string solve_key(const ScenarioConfig& cfg);

std::uint64_t fnv1a(const std::string& bytes);

/// Built-in presets E1 to E5.
ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// The cost model over (evaluation box ∪ source box) x target box.
ctlab::CostModel make_cost_model(const ScenarioConfig& cfg);
ctlab::Box eval_box(const ScenarioConfig& cfg);
ctlab::Grid eval_grid(const ScenarioConfig& cfg);
/// Grid cells whose centres lie in the source domain.
ctlab::CellSet source_cells(const ScenarioConfig& cfg, const ctlab::Grid& grid);

/// Copy with one swept value fixed and the sweeps cleared.
ScenarioConfig with_delta(const ScenarioConfig& cfg, double delta);
/// Copy at another evaluation resolution; the Hessian step multiplier is
/// scaled so the step length stays fixed.
ScenarioConfig with_resolution(const ScenarioConfig& cfg, int resolution);

}  // namespace lab
