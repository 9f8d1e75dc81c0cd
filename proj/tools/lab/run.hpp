#pragma once

#include "config.hpp"
#include "io.hpp"

#include "ctlab/potential.hpp"
#include "ctlab/transport.hpp"

#include <map>
#include <string>
#include <vector>

namespace lab {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Command { CheckCost, Solve, Sections, Engulf, Decay, W2p, Singular, Boundary };

std::string to_string(Command command);
/// Throws Validation for an unknown name.
Command command_from_string(const std::string& name);
std::vector<std::string> command_names();

struct RunOptions {
  fs::path out_dir = "lab_out";
  bool force = false;  // re-solve even when the cache holds this solve
};

/// What one subcommand produced. Written next to its outputs as
/// run_<command>.json; the timings are the only run-dependent content.
struct RunArtifact {
  std::string command;
  std::string scenario_hash;
  std::string tool_version = kToolVersion;
  fs::path run_dir;
  std::vector<std::string> potential_paths;
  std::vector<std::string> plan_paths;
  std::vector<std::string> reports;
  bool reused_cache = false;
  std::map<std::string, double> seconds;

  nlohmann::json to_json() const;
};

RunArtifact run_scenario(const ScenarioConfig& cfg, Command command, const RunOptions& options);

/// Sampled measures and the exact or entropic plan between them.
struct Solved {
  ctlab::AtomCloud source;
  ctlab::AtomCloud target;
  ctlab::TransportPlan plan;
};

Solved solve_scenario(const ScenarioConfig& cfg);

/// Solve variants: one per swept delta, else the config itself.
std::vector<ScenarioConfig> solve_variants(const ScenarioConfig& cfg);

fs::path cache_dir(const ScenarioConfig& cfg, const fs::path& out_dir);

/// Potential of a cached solve on the config's evaluation grid. Throws
/// MissingArtifact when the solve has not been run.
ctlab::PotentialField load_potential(const ScenarioConfig& cfg, const fs::path& out_dir);
/// The cached plan and clouds.
Solved load_solved(const ScenarioConfig& cfg, const fs::path& out_dir);

/// sup over source-domain cells of |u(x) - |x|^2/2|.
double identity_closeness(const ScenarioConfig& cfg, const ctlab::PotentialField& u);

/// Plain-text mask: '#' member, '.' other domain cell, ' ' outside; 2D only,
/// top row first.
std::string mask_text(const ctlab::Grid& grid, const ctlab::CellSet& domain, const ctlab::CellSet& members);
/// SVG overlay of member cells on the domain cells; 2D only.
std::string mask_svg(const ctlab::Grid& grid, const ctlab::CellSet& domain, const ctlab::CellSet& members,
                     const std::string& title);

}  // namespace lab
