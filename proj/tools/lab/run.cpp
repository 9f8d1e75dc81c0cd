#include "run.hpp"

#include "ctlab/cconvex.hpp"
#include "ctlab/error.hpp"
#include "ctlab/geometry.hpp"
#include "ctlab/regularity.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace lab {

using nlohmann::json;
using ctlab::CellSet;
using ctlab::Error;
using ctlab::ErrorKind;
using ctlab::Grid;
using ctlab::PotentialField;

namespace {

constexpr int kExcludeLayers = 3;  // dilation of the singular mask in w2p

const std::vector<std::pair<Command, std::string>> kCommands = {
    {Command::CheckCost, "check-cost"}, {Command::Solve, "solve"},       {Command::Sections, "sections"},
    {Command::Engulf, "engulf"},        {Command::Decay, "decay"},       {Command::W2p, "w2p"},
    {Command::Singular, "singular"},    {Command::Boundary, "boundary"},
};

json matrix_json(const ctlab::Matrix& m) {
  json cols = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    json col = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) col.push_back(m(r, c));
    cols.push_back(col);
  }
  return cols;
}

ctlab::Matrix matrix_from(const json& cols, int dim) {
  ctlab::Matrix m(dim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (int r = 0; r < dim; ++r) m(r, static_cast<Eigen::Index>(c)) = cols[c][static_cast<std::size_t>(r)].get<double>();
  return m;
}

json vector_json(const ctlab::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ctlab::Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const ctlab::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json cloud_json(const ctlab::AtomCloud& c) {
  return {{"positions", matrix_json(c.positions)},
          {"weights", vector_json(c.weights)},
          {"box", {{"lo", vector_json(c.domain_box.lo)}, {"hi", vector_json(c.domain_box.hi)}}}};
}

ctlab::AtomCloud cloud_from(const json& j, int dim) {
  ctlab::AtomCloud c;
  c.positions = matrix_from(j.at("positions"), dim);
  c.weights = vector_from(j.at("weights"));
  c.domain_box = ctlab::Box(vector_from(j.at("box").at("lo")), vector_from(j.at("box").at("hi")));
  return c;
}

ctlab::Point anchor_point(const ScenarioConfig& cfg) { return cfg.source.domain.bounding_box().center(); }

ctlab::SolverOptions solver_options(const ScenarioConfig& cfg) {
  ctlab::SolverOptions o;
  o.method = cfg.solver.method;
  o.epsilon = cfg.solver.epsilon;
  o.max_iter = cfg.solver.max_iter;
  o.tol = cfg.solver.tol;
  return o;
}

std::vector<ScenarioConfig> resolution_variants(const ScenarioConfig& cfg) {
  if (cfg.experiment.resolution_sweep.empty()) return {cfg};
  std::vector<ScenarioConfig> out;
  for (int r : cfg.experiment.resolution_sweep) out.push_back(with_resolution(cfg, r));
  return out;
}

double domain_measure(const Grid& grid, const CellSet& cells) {
  return static_cast<double>(cells.size()) * grid.cell_volume();
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string res_suffix(int res) { return "_r" + std::to_string(res); }

void add_point_columns(std::vector<std::string>& header, const std::string& prefix, int dim) {
  for (int a = 1; a <= dim; ++a) header.push_back(prefix + std::to_string(a));
}

// ---- subcommands ----

void do_check_cost(const ScenarioConfig& cfg, RunArtifact& art) {
  const ctlab::CostModel cost = make_cost_model(cfg);
  const ctlab::ConditionReport r = ctlab::check_conditions(cost, 2000, cfg.experiment.seed);
  json j = {{"scenario_hash", art.scenario_hash},
            {"kind", ctlab::to_string(cost.kind)},
            {"delta", cost.delta},
            {"samples", r.sample_count},
            {"c0_norm", r.c0_norm},
            {"c1_ok", r.c1_ok},
            {"c1_worst_ratio", r.c1_worst_ratio},
            {"c2_ok", r.c2_ok},
            {"c2_worst_ratio", r.c2_worst_ratio},
            {"c3_ok", r.c3_ok},
            {"c3_min_absdet", r.c3_min_absdet},
            {"c3_max_absdet", r.c3_max_absdet},
            {"delta_hat", r.delta_hat}};
  write_json(art.run_dir / "cost_check.json", j);
  art.reports.push_back("cost_check.json");
}

void do_solve(const ScenarioConfig& cfg, const RunOptions& opt, RunArtifact& art) {
  json variants = json::array();
  double worst_gap = 0.0;
  bool all_cached = true;
  for (const ScenarioConfig& v : solve_variants(cfg)) {
    const fs::path dir = cache_dir(v, opt.out_dir);
    const bool cached = !opt.force && fs::exists(dir / "plan.json") && fs::exists(dir / "potential.json");
    all_cached = all_cached && cached;
    Stopwatch clock;
    if (!cached) {
      const Solved s = solve_scenario(v);
      json couplings = json::array();
      for (const auto& c : s.plan.couplings) couplings.push_back({c.i, c.j, c.mass});
      const ctlab::PlanCheck check =
          ctlab::check_plan(s.plan, ctlab::cost_matrix(make_cost_model(v), s.source, s.target), s.source.weights,
                            s.target.weights);
      write_json(dir / "plan.json", {{"solve_key", solve_key(v)},
                                     {"method", ctlab::to_string(s.plan.method)},
                                     {"epsilon", s.plan.epsilon},
                                     {"objective", s.plan.objective},
                                     {"gap", s.plan.gap},
                                     {"iterations", s.plan.iterations},
                                     {"row_error", check.row_error},
                                     {"column_error", check.column_error},
                                     {"dual_violation", check.dual_violation},
                                     {"support_slack", check.support_slack},
                                     {"source", cloud_json(s.source)},
                                     {"target", cloud_json(s.target)},
                                     {"couplings", couplings},
                                     {"source_duals", vector_json(s.plan.source_duals)},
                                     {"target_duals", vector_json(s.plan.target_duals)}});
      const ctlab::Grid grid = eval_grid(v);
      const PotentialField u =
          ctlab::reconstruct_potential(s.plan, make_cost_model(v), s.target, grid, anchor_point(v));
      write_json(dir / "potential.json", {{"solve_key", solve_key(v)},
                                          {"anchor", vector_json(anchor_point(v))},
                                          {"targets", matrix_json(u.targets())},
                                          {"lambda", vector_json(u.lambda())}});
    }
    art.seconds["solve_delta_" + format_number(v.cost.delta)] = clock.seconds();
    const json plan = read_json(dir / "plan.json");
    json row = {{"solve_key", solve_key(v)},
                {"delta", v.cost.delta},
                {"cached", cached},
                {"objective", plan["objective"]},
                {"gap", plan["gap"]},
                {"iterations", plan["iterations"]},
                {"row_error", plan["row_error"]},
                {"column_error", plan["column_error"]},
                {"dual_violation", plan["dual_violation"]},
                {"support_slack", plan["support_slack"]},
                {"n_source", plan["source"]["weights"].size()},
                {"n_target", plan["target"]["weights"].size()}};
    worst_gap = std::max(worst_gap, std::abs(plan["gap"].get<double>()));
    if (cfg.experiment.closeness_check)
      row["closeness"] = identity_closeness(v, load_potential(v, opt.out_dir));
    art.plan_paths.push_back(fs::relative(dir / "plan.json", opt.out_dir).string());
    art.potential_paths.push_back(fs::relative(dir / "potential.json", opt.out_dir).string());
    variants.push_back(row);
  }
  art.reused_cache = all_cached;
  json summary = {{"scenario_hash", art.scenario_hash}, {"gap", worst_gap}, {"variants", variants}};
  if (cfg.experiment.closeness_check) {
    double worst = 0.0;
    for (const auto& v : variants) worst = std::max(worst, v["closeness"].get<double>());
    summary["closeness"] = worst;
  }
  write_json(art.run_dir / "solve.json", summary);
  art.reports.push_back("solve.json");
}

void do_sections(const ScenarioConfig& cfg, const RunOptions& opt, RunArtifact& art) {
  const PotentialField u = load_potential(cfg, opt.out_dir);
  const ctlab::CostModel& cost = u.cost();
  const Grid& grid = u.grid();
  const int n = grid.dim();
  const ctlab::Point c = anchor_point(cfg);

  std::vector<ctlab::Point> centers{c};
  for (std::uint64_t i = 1; centers.size() < 5 && i < 64; ++i) {
    const ctlab::Vector z = 2.0 * ctlab::halton_point(i, n).array() - 1.0;
    if (z.norm() <= 1.0) centers.push_back(c + cfg.experiment.rho0 * z);
  }

  std::vector<std::string> header{"h"};
  add_point_columns(header, "x0_", n);
  for (const char* col : {"cells", "volume", "connected", "r_in", "r_out", "sandwich_ratio", "norm_size", "ok"})
    header.push_back(col);
  CsvTable table(header);
  for (double h : cfg.experiment.section_heights)
    for (const ctlab::Point& x0 : centers) {
      std::vector<double> row{h};
      for (int a = 0; a < n; ++a) row.push_back(x0[a]);
      const ctlab::Section s = ctlab::section_extract(u, cost, x0, ctlab::supporting_target(u, x0), h);
      row.push_back(static_cast<double>(s.cells.size()));
      row.push_back(s.volume(grid));
      row.push_back(s.connected ? 1.0 : 0.0);
      try {
        const ctlab::Normalization nz = ctlab::john_normalize(grid, s.cells);
        for (double v : {nz.r_in, nz.r_out, nz.sandwich_ratio, nz.norm_size, 1.0}) row.push_back(v);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Degenerate) throw;
        for (int i = 0; i < 4; ++i) row.push_back(std::nan(""));
        row.push_back(0.0);
      }
      table.add(row);
    }
  table.write(art.run_dir / "sections.csv");
  art.reports.push_back("sections.csv");
}

void do_engulf(const ScenarioConfig& cfg, const RunOptions& opt, RunArtifact& art) {
  const PotentialField u = load_potential(cfg, opt.out_dir);
  const auto rows = ctlab::engulfing_estimate(u, u.cost(), cfg.experiment.engulf_samples,
                                              cfg.experiment.engulf_heights, cfg.experiment.seed);
  CsvTable table({"h", "samples", "skipped", "capped", "max_c", "q50", "q90", "c_prime"});
  CsvTable raw({"h", "sample", "c"});
  for (const auto& r : rows) {
    table.add({r.h, static_cast<double>(r.samples), static_cast<double>(r.skipped), static_cast<double>(r.capped),
               r.max_c, r.q50, r.q90, r.c_prime});
    for (std::size_t i = 0; i < r.constants.size(); ++i) raw.add({r.h, static_cast<double>(i), r.constants[i]});
  }
  table.write(art.run_dir / "engulf.csv");
  raw.write(art.run_dir / "engulf_samples.csv");
  art.reports.insert(art.reports.end(), {"engulf.csv", "engulf_samples.csv"});
}

void do_decay(const ScenarioConfig& cfg, const RunOptions& opt, RunArtifact& art) {
  CsvTable table({"delta", "k", "rho", "measure", "fraction", "domain_fraction", "ratio", "cells", "candidates",
                  "sections_selected", "bisection_failures", "mean_bad_fraction", "covering_bound", "band_mass"});
  json summary = json::array();
  for (const ScenarioConfig& v : solve_variants(cfg)) {
    const PotentialField u = load_potential(v, opt.out_dir);
    const ctlab::HessianField hess = ctlab::hessian_field(u, v.experiment.step_multiplier);
    ctlab::DecayOptions d;
    d.M = v.experiment.M;
    d.N = v.experiment.N;
    d.levels = v.experiment.K_levels;
    d.rho0 = v.experiment.rho0;
    d.center = anchor_point(v);
    d.sigma = v.experiment.sigma;
    d.c_prime = v.experiment.c_prime;
    const ctlab::LevelSetTable t = ctlab::levelset_decay(u, u.cost(), hess, d);
    const double dom = domain_measure(u.grid(), source_cells(v, u.grid()));
    for (const auto& r : t.rows)
      table.add({v.cost.delta, static_cast<double>(r.k), r.rho, r.measure, r.fraction, r.measure / dom, r.ratio,
                 static_cast<double>(r.cells), static_cast<double>(r.candidates),
                 static_cast<double>(r.sections_selected), static_cast<double>(r.bisection_failures),
                 r.mean_bad_fraction, r.covering_bound, r.band_mass});
    summary.push_back({{"delta", v.cost.delta},
                       {"theta", t.theta},
                       {"beta", t.beta},
                       {"log_c_hat", t.log_c_hat},
                       {"collapsed", t.collapsed},
                       {"max_ratio", ctlab::max_ratio(t)},
                       {"d1_domain_fraction", t.rows.size() > 1 ? t.rows[1].measure / dom : 0.0}});
  }
  table.write(art.run_dir / "decay.csv");
  write_json(art.run_dir / "decay.json", {{"scenario_hash", art.scenario_hash}, {"M", cfg.experiment.M},
                                          {"N", cfg.experiment.N}, {"levels", summary}});
  art.reports.insert(art.reports.end(), {"decay.csv", "decay.json"});
}

ctlab::SingularMask detect(const ScenarioConfig& cfg, const PotentialField& u, const CellSet& domain) {
  return ctlab::singular_detect(u, u.cost(), cfg.experiment.h0, cfg.experiment.ratio_cap, domain);
}

void do_w2p(const ScenarioConfig& cfg, const RunOptions& opt, RunArtifact& art) {
  for (const ScenarioConfig& v : resolution_variants(cfg)) {
    const PotentialField u = load_potential(v, opt.out_dir);
    const ctlab::HessianField hess = ctlab::hessian_field(u, v.experiment.step_multiplier);
    const CellSet region = source_cells(v, u.grid());
    std::optional<ctlab::SingularMask> excl;
    if (v.experiment.exclude_singular) {
      excl = detect(v, u, region);
      excl->cells = ctlab::dilate(u.grid(), excl->cells, kExcludeLayers);
    }
    CsvTable table({"resolution", "step_multiplier", "p", "excluded", "direct", "layer_cake", "region_measure",
                    "cells"});
    for (double p : v.experiment.p) {
      const ctlab::W2pResult r = ctlab::w2p_norm(hess, region, p, nullptr, v.experiment.M);
      table.add({static_cast<double>(v.grid.eval_resolution), static_cast<double>(v.experiment.step_multiplier), p,
                 0.0, r.direct, r.layer_cake, r.region_measure, static_cast<double>(r.cells)});
      if (excl) {
        const ctlab::W2pResult e = ctlab::w2p_norm(hess, region, p, &*excl, v.experiment.M);
        table.add({static_cast<double>(v.grid.eval_resolution), static_cast<double>(v.experiment.step_multiplier),
                   p, 1.0, e.direct, e.layer_cake, e.region_measure, static_cast<double>(e.cells)});
      }
    }
    const std::string name = "w2p" + res_suffix(v.grid.eval_resolution) + ".csv";
    table.write(art.run_dir / name);
    art.reports.push_back(name);
  }
}

void do_singular(const ScenarioConfig& cfg, const RunOptions& opt, RunArtifact& art) {
  CsvTable table({"resolution", "spacing", "cells", "measure", "fraction", "kink_cells", "section_cells"});
  for (const ScenarioConfig& v : resolution_variants(cfg)) {
    const PotentialField u = load_potential(v, opt.out_dir);
    const Grid& grid = u.grid();
    const CellSet domain = source_cells(v, grid);
    const ctlab::SingularMask m = detect(v, u, domain);
    const double dom = domain_measure(grid, domain);
    const int res = v.grid.eval_resolution;
    table.add({static_cast<double>(res), grid.max_spacing(), static_cast<double>(m.cells.size()), m.measure,
               m.fraction(dom), static_cast<double>(m.kink_cells.size()), static_cast<double>(m.section_cells.size())});
    const std::string stem = "singular" + res_suffix(res);
    write_json(art.run_dir / (stem + ".json"), {{"resolution", res},
                                                 {"spacing", grid.max_spacing()},
                                                 {"cells", m.cells.size()},
                                                 {"measure", m.measure},
                                                 {"domain_measure", dom},
                                                 {"fraction", m.fraction(dom)},
                                                 {"kink_cells", m.kink_cells.size()},
                                                 {"section_cells", m.section_cells.size()},
                                                 {"h0", m.h0},
                                                 {"ratio_cap", m.ratio_cap},
                                                 {"ladder", m.ladder}});
    art.reports.push_back(stem + ".json");
    if (grid.dim() == 2) {
      write_text(art.run_dir / ("mask" + res_suffix(res) + ".txt"), mask_text(grid, domain, m.cells));
      write_text(art.run_dir / (stem + ".svg"),
                 mask_svg(grid, domain, m.cells, "singular set at " + std::to_string(res) + " cells per axis"));
      art.reports.push_back("mask" + res_suffix(res) + ".txt");
      art.reports.push_back(stem + ".svg");
    }
  }
  table.write(art.run_dir / "singular.csv");
  art.reports.push_back("singular.csv");
}

void do_boundary(const ScenarioConfig& cfg, const RunOptions& opt, RunArtifact& art) {
  const PotentialField u = load_potential(cfg, opt.out_dir);
  const Grid& grid = u.grid();
  const ctlab::HessianField hess = ctlab::hessian_field(u, cfg.experiment.step_multiplier);
  const CellSet domain = source_cells(cfg, grid);
  ctlab::BoundaryOptions bo;
  bo.p = cfg.experiment.p.front();
  bo.families = cfg.experiment.boundary_families;
  bo.sigma = cfg.experiment.sigma;
  const ctlab::BoundaryProfile prof = ctlab::boundary_heights(u, u.cost(), domain, cfg.experiment.boundary_h0, hess, bo);

  CsvTable fam({"k", "h_lo", "h_hi", "candidates", "n_sections", "power_sum"});
  for (const auto& f : prof.families)
    fam.add({static_cast<double>(f.k), f.h_lo, f.h_hi, static_cast<double>(f.candidates),
             static_cast<double>(f.n_sections), f.power_sum});
  fam.write(art.run_dir / "boundary.csv");

  std::vector<std::string> header{"cell"};
  add_point_columns(header, "x_", grid.dim());
  header.insert(header.end(), {"h_bar", "interior"});
  CsvTable cells(header);
  for (ctlab::CellIndex c : domain) {
    std::vector<double> row{static_cast<double>(c)};
    const ctlab::Point x = grid.center(c);
    for (int a = 0; a < grid.dim(); ++a) row.push_back(x[a]);
    row.push_back(prof.h_bar[c]);
    row.push_back(prof.interior[static_cast<std::size_t>(c)] ? 1.0 : 0.0);
    cells.add(row);
  }
  cells.write(art.run_dir / "boundary_cells.csv");
  write_json(art.run_dir / "boundary.json", {{"scenario_hash", art.scenario_hash},
                                             {"p", bo.p},
                                             {"h0", prof.h0},
                                             {"domain_convex", prof.domain_convex},
                                             {"boundary_cells", prof.boundary.size()},
                                             {"fitted_rate", prof.fitted_rate}});
  art.reports.insert(art.reports.end(), {"boundary.csv", "boundary_cells.csv", "boundary.json"});
}

}  // namespace

std::string to_string(Command command) {
  for (const auto& [c, name] : kCommands)
    if (c == command) return name;
  return "unknown";
}

Command command_from_string(const std::string& name) {
  for (const auto& [c, n] : kCommands)
    if (n == name) return c;
  throw Error(ErrorKind::Validation, "lab", "unknown subcommand '" + name + "'");
}

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& entry : kCommands) out.push_back(entry.second);
  return out;
}

json RunArtifact::to_json() const {
  return {{"command", command},
          {"scenario_hash", scenario_hash},
          {"tool_version", tool_version},
          {"run_dir", run_dir.string()},
          {"potential_paths", potential_paths},
          {"plan_paths", plan_paths},
          {"reports", reports},
          {"reused_cache", reused_cache},
          {"seconds", seconds}};
}

std::vector<ScenarioConfig> solve_variants(const ScenarioConfig& cfg) {
  if (cfg.experiment.delta_sweep.empty()) return {cfg};
  std::vector<ScenarioConfig> out;
  for (double d : cfg.experiment.delta_sweep) out.push_back(with_delta(cfg, d));
  return out;
}

fs::path cache_dir(const ScenarioConfig& cfg, const fs::path& out_dir) {
  return out_dir / "cache" / solve_key(cfg);
}

Solved solve_scenario(const ScenarioConfig& cfg) {
  Solved s;
  const int n_target = cfg.grid.n_atoms_target > 0 ? cfg.grid.n_atoms_target : cfg.grid.n_atoms;
  s.source = ctlab::sample_density(cfg.source.to_density(), cfg.grid.n_atoms, cfg.experiment.seed);
  s.target = ctlab::sample_density(cfg.target.to_density(), n_target, cfg.experiment.seed + 1);
  s.plan = ctlab::solve_discrete(make_cost_model(cfg), s.source, s.target, solver_options(cfg));
  return s;
}

PotentialField load_potential(const ScenarioConfig& cfg, const fs::path& out_dir) {
  const fs::path path = cache_dir(cfg, out_dir) / "potential.json";
  if (!fs::exists(path))
    throw Error(ErrorKind::MissingArtifact, "load_potential",
                "no potential artifact for solve " + solve_key(cfg) + " in " + out_dir.string() +
                    "; run `lab solve` with this config first");
  const json j = read_json(path);
  return PotentialField::from_atoms(make_cost_model(cfg), matrix_from(j.at("targets"), cfg.dimension),
                                    vector_from(j.at("lambda")), eval_grid(cfg));
}

Solved load_solved(const ScenarioConfig& cfg, const fs::path& out_dir) {
  const fs::path path = cache_dir(cfg, out_dir) / "plan.json";
  if (!fs::exists(path))
    throw Error(ErrorKind::MissingArtifact, "load_solved",
                "no plan artifact for solve " + solve_key(cfg) + "; run `lab solve` with this config first");
  const json j = read_json(path);
  Solved s;
  s.source = cloud_from(j.at("source"), cfg.dimension);
  s.target = cloud_from(j.at("target"), cfg.dimension);
  for (const auto& c : j.at("couplings"))
    s.plan.couplings.push_back({c[0].get<int>(), c[1].get<int>(), c[2].get<double>()});
  s.plan.source_duals = vector_from(j.at("source_duals"));
  s.plan.target_duals = vector_from(j.at("target_duals"));
  s.plan.objective = j.at("objective").get<double>();
  s.plan.gap = j.at("gap").get<double>();
  s.plan.method = ctlab::solver_method_from_string(j.at("method").get<std::string>());
  s.plan.epsilon = j.at("epsilon").get<double>();
  s.plan.iterations = j.at("iterations").get<long>();
  return s;
}

double identity_closeness(const ScenarioConfig& cfg, const PotentialField& u) {
  double worst = 0.0;
  for (ctlab::CellIndex c : source_cells(cfg, u.grid()))
    worst = std::max(worst, std::abs(u.value(c) - 0.5 * u.grid().center(c).squaredNorm()));
  return worst;
}

std::string mask_text(const Grid& grid, const CellSet& domain, const CellSet& members) {
  if (grid.dim() != 2) throw Error(ErrorKind::NotApplicable, "mask_text", "masks are drawn in 2D only");
  const ctlab::CellMask in_domain = ctlab::to_mask(domain, static_cast<std::size_t>(grid.cell_count()));
  const ctlab::CellMask in_mask = ctlab::to_mask(members, static_cast<std::size_t>(grid.cell_count()));
  const int nx = grid.resolution()[0], ny = grid.resolution()[1];
  std::string out;
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) {
      const auto c = static_cast<std::size_t>(grid.flat_index({i, j}));
      out += in_mask[c] ? '#' : in_domain[c] ? '.' : ' ';
    }
    out += '\n';
  }
  return out;
}

std::string mask_svg(const Grid& grid, const CellSet& domain, const CellSet& members, const std::string& title) {
  if (grid.dim() != 2) throw Error(ErrorKind::NotApplicable, "mask_svg", "masks are drawn in 2D only");
  const int nx = grid.resolution()[0], ny = grid.resolution()[1];
  const double size = 480.0, cw = size / nx, ch = size / ny;
  const ctlab::CellMask in_mask = ctlab::to_mask(members, static_cast<std::size_t>(grid.cell_count()));
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"520\" height=\"540\" viewBox=\"0 0 520 540\" "
       "font-family=\"sans-serif\" font-size=\"13\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"260\" y=\"24\" text-anchor=\"middle\">" << title << "</text>\n";
  o << "<g transform=\"translate(20 40)\" shape-rendering=\"crispEdges\">\n";
  o << "<rect width=\"" << size << "\" height=\"" << size << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto cell = [&](ctlab::CellIndex c, const char* fill) {
    const auto mi = grid.multi_index(c);
    o << "<rect x=\"" << format_number(mi[0] * cw) << "\" y=\"" << format_number((ny - 1 - mi[1]) * ch)
      << "\" width=\"" << format_number(cw) << "\" height=\"" << format_number(ch) << "\" fill=\"" << fill
      << "\"/>\n";
  };
  for (ctlab::CellIndex c : domain)
    if (!in_mask[static_cast<std::size_t>(c)]) cell(c, "#dde6f0");
  for (ctlab::CellIndex c : members) cell(c, "#c0392b");
  o << "</g>\n</svg>\n";
  return o.str();
}

RunArtifact run_scenario(const ScenarioConfig& cfg, Command command, const RunOptions& options) {
  Stopwatch clock;
  RunArtifact art;
  art.command = to_string(command);
  art.scenario_hash = scenario_hash(cfg);
  art.run_dir = options.out_dir;
  fs::create_directories(options.out_dir);
  write_json(options.out_dir / "config.json", to_json(cfg));

  switch (command) {
    case Command::CheckCost: do_check_cost(cfg, art); break;
    case Command::Solve: do_solve(cfg, options, art); break;
    case Command::Sections: do_sections(cfg, options, art); break;
    case Command::Engulf: do_engulf(cfg, options, art); break;
    case Command::Decay: do_decay(cfg, options, art); break;
    case Command::W2p: do_w2p(cfg, options, art); break;
    case Command::Singular: do_singular(cfg, options, art); break;
    case Command::Boundary: do_boundary(cfg, options, art); break;
  }
  if (command != Command::Solve)
    for (const ScenarioConfig& v : solve_variants(cfg)) {
      art.potential_paths.push_back(fs::relative(cache_dir(v, options.out_dir) / "potential.json", options.out_dir).string());
      art.plan_paths.push_back(fs::relative(cache_dir(v, options.out_dir) / "plan.json", options.out_dir).string());
    }
  art.seconds["total"] = clock.seconds();
  write_json(options.out_dir / ("run_" + art.command + ".json"), art.to_json());
  return art;
}

}  // namespace lab
