#include "config.hpp"

#include "ctlab/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace lab {

using nlohmann::json;
using ctlab::Error;
using ctlab::ErrorKind;

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Validation, "config", path + ": " + what);
}

// Typed access to one JSON object; every key must be consumed or declared.
class Reader {
 public:
  Reader(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) invalid(path_, "expected an object");
    for (const auto& item : j.items())
      if (!allowed.count(item.key())) invalid(path_ + "." + item.key(), "unknown key");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const {
    if (!has(key)) invalid(path_ + "." + key, "missing");
    return j_.at(key);
  }
  std::string where(const std::string& key) const { return path_ + "." + key; }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) invalid(where(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) invalid(where(key), "not finite");
    return d;
  }
  int integer(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) invalid(where(key), "expected an integer");
    return v.get<int>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      invalid(where(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) invalid(where(key), "expected true or false");
    return j_.at(key).get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) invalid(where(key), "expected a string");
    return j_.at(key).get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array()) invalid(where(key), "expected an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) invalid(where(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<int> integers(const std::string& key, std::vector<int> fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array()) invalid(where(key), "expected an array of integers");
    std::vector<int> out;
    for (const json& e : v) {
      if (!e.is_number_integer()) invalid(where(key), "expected an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

ctlab::Vector point(const json& j, const std::string& path, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    invalid(path, "expected " + std::to_string(dim) + " coordinates");
  ctlab::Vector v(dim);
  for (int a = 0; a < dim; ++a) {
    if (!j[static_cast<std::size_t>(a)].is_number()) invalid(path, "coordinates must be numbers");
    v[a] = j[static_cast<std::size_t>(a)].get<double>();
  }
  return v;
}

json point_json(const ctlab::Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ctlab::Box read_box(const json& j, const std::string& path, int dim) {
  Reader r(j, path, {"lo", "hi", "type"});
  ctlab::Box b(point(r.at("lo"), r.where("lo"), dim), point(r.at("hi"), r.where("hi"), dim));
  if (!((b.hi - b.lo).array() > 0.0).all()) invalid(path, "box must have hi > lo on every axis");
  return b;
}

ctlab::Ball read_ball(const json& j, const std::string& path, int dim, bool typed) {
  Reader r(j, path, typed ? std::set<std::string>{"type", "center", "radius"} : std::set<std::string>{"center", "radius"});
  ctlab::Ball b{point(r.at("center"), r.where("center"), dim), r.number("radius", 1.0)};
  if (!(b.radius > 0.0)) invalid(r.where("radius"), "must be positive");
  return b;
}

DomainSpec read_domain(const json& j, const std::string& path, int dim) {
  if (!j.is_object()) invalid(path, "expected an object");
  DomainSpec d;
  d.type = j.value("type", std::string("box"));
  if (d.type == "box") {
    d.box = read_box(j, path, dim);
  } else if (d.type == "ball") {
    d.balls = {read_ball(j, path, dim, true)};
  } else if (d.type == "balls") {
    Reader r(j, path, {"type", "balls"});
    const json& list = r.at("balls");
    if (!list.is_array() || list.empty()) invalid(r.where("balls"), "expected a nonempty array");
    for (std::size_t i = 0; i < list.size(); ++i)
      d.balls.push_back(read_ball(list[i], r.where("balls") + "[" + std::to_string(i) + "]", dim, false));
  } else {
    invalid(path + ".type", "unknown domain type '" + d.type + "'");
  }
  if (d.type != "box") d.box = d.bounding_box();
  return d;
}

json domain_json(const DomainSpec& d) {
  if (d.type == "box") return {{"type", "box"}, {"lo", point_json(d.box.lo)}, {"hi", point_json(d.box.hi)}};
  if (d.type == "ball")
    return {{"type", "ball"}, {"center", point_json(d.balls[0].center)}, {"radius", d.balls[0].radius}};
  json list = json::array();
  for (const auto& b : d.balls) list.push_back({{"center", point_json(b.center)}, {"radius", b.radius}});
  return {{"type", "balls"}, {"balls", list}};
}

MeasureSpec read_measure(const json& j, const std::string& path, int dim) {
  Reader r(j, path, {"domain", "density"});
  MeasureSpec m;
  m.domain = read_domain(r.at("domain"), r.where("domain"), dim);
  if (r.has("density")) {
    Reader d(r.at("density"), r.where("density"), {"type", "components", "path", "jitter"});
    m.density = d.string("type", "uniform");
    m.jitter = d.boolean("jitter", false);
    if (m.density == "gaussian-mixture") {
      if (m.domain.type != "box") invalid(d.where("type"), "gaussian mixtures need a box domain");
      const json& comps = d.at("components");
      if (!comps.is_array() || comps.empty()) invalid(d.where("components"), "expected a nonempty array");
      for (std::size_t i = 0; i < comps.size(); ++i) {
        const std::string p = d.where("components") + "[" + std::to_string(i) + "]";
        Reader c(comps[i], p, {"mean", "sigma", "weight"});
        ctlab::GaussianComponent g{point(c.at("mean"), c.where("mean"), dim), c.number("sigma", 1.0),
                                   c.number("weight", 1.0)};
        if (!(g.sigma > 0.0)) invalid(c.where("sigma"), "must be positive");
        if (!(g.weight > 0.0)) invalid(c.where("weight"), "must be positive");
        m.components.push_back(g);
      }
    } else if (m.density == "csv-grid") {
      m.csv_path = d.string("path", "");
      if (m.csv_path.empty()) invalid(d.where("path"), "missing");
    } else if (m.density != "uniform") {
      invalid(d.where("type"), "unknown density '" + m.density + "'");
    }
  }
  return m;
}

json measure_json(const MeasureSpec& m) {
  json d = {{"type", m.density}, {"jitter", m.jitter}};
  if (m.density == "gaussian-mixture") {
    json comps = json::array();
    for (const auto& c : m.components)
      comps.push_back({{"mean", point_json(c.mean)}, {"sigma", c.sigma}, {"weight", c.weight}});
    d["components"] = comps;
  }
  if (m.density == "csv-grid") d["path"] = m.csv_path;
  return {{"domain", domain_json(m.domain)}, {"density", d}};
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) invalid(path, what);
}

// Checks B_{1/K}(c) ⊂ domain ⊂ B_K(c), c the bounding-box centre, on a sample
// of directions.
void check_domain_bound(const DomainSpec& d, double K, const std::string& path) {
  const ctlab::Box bb = d.bounding_box();
  const ctlab::Point c = bb.center();
  const double outer = 0.5 * bb.diameter();
  require(outer <= K + 1e-12, path, "domain is not inside B_K");
  const int dim = bb.dim();
  for (int i = 0; i < 256; ++i) {
    ctlab::Vector dir = 2.0 * ctlab::halton_point(static_cast<std::uint64_t>(i + 1), dim).array() - 1.0;
    if (dir.norm() < 1e-9) continue;
    dir.normalize();
    require(d.contains(c + dir / K), path, "domain does not contain B_{1/K}");
  }
}

}  // namespace

ctlab::Box DomainSpec::bounding_box() const {
  if (type == "box") return box;
  ctlab::Vector lo = balls.front().center.array() - balls.front().radius;
  ctlab::Vector hi = balls.front().center.array() + balls.front().radius;
  for (const auto& b : balls) {
    lo = lo.cwiseMin((b.center.array() - b.radius).matrix());
    hi = hi.cwiseMax((b.center.array() + b.radius).matrix());
  }
  return ctlab::Box(lo, hi);
}

bool DomainSpec::contains(ctlab::PointRef x) const {
  if (type == "box") return box.contains(x);
  for (const auto& b : balls)
    if ((x - b.center).norm() <= b.radius) return true;
  return false;
}

ctlab::DensitySpec MeasureSpec::to_density() const {
  ctlab::DensitySpec s;
  if (density == "gaussian-mixture") {
    s = ctlab::DensitySpec::gaussian_mixture(components, domain.box);
  } else if (density == "csv-grid") {
    s = ctlab::DensitySpec::csv_grid_file(csv_path);
  } else if (domain.type == "box") {
    s = ctlab::DensitySpec::uniform_box(domain.box);
  } else if (domain.type == "ball") {
    s = ctlab::DensitySpec::uniform_ball(domain.balls[0].center, domain.balls[0].radius);
  } else {
    s = ctlab::DensitySpec::union_of_balls(domain.balls);
  }
  s.jitter = jitter;
  return s;
}

ScenarioConfig parse_config(const json& j) {
  Reader r(j, "config",
           {"schema", "name", "dimension", "source", "target", "cost", "grid", "solver", "experiment", "output"});
  ScenarioConfig cfg;
  cfg.schema = r.integer("schema", -1);
  require(cfg.schema == kSchemaVersion, "config.schema", "expected schema " + std::to_string(kSchemaVersion));
  cfg.name = r.string("name", cfg.name);
  cfg.dimension = r.integer("dimension", 2);
  require(cfg.dimension >= 1 && cfg.dimension <= 3, "config.dimension", "must be 1, 2 or 3");
  const int n = cfg.dimension;
  cfg.source = read_measure(r.at("source"), "config.source", n);
  cfg.target = read_measure(r.at("target"), "config.target", n);

  if (r.has("cost")) {
    Reader c(r.at("cost"), "config.cost", {"kind", "exponent", "delta", "bump"});
    try {
      cfg.cost.kind = ctlab::cost_kind_from_string(c.string("kind", "quadratic-bilinear"));
      cfg.cost.bump = ctlab::bump_from_string(c.string("bump", "phi1"));
    } catch (const Error& e) {
      invalid("config.cost", e.what());
    }
    cfg.cost.exponent = c.number("exponent", 2.0);
    cfg.cost.delta = c.number("delta", 0.0);
    require(cfg.cost.exponent > 1.0, c.where("exponent"), "must exceed 1");
    require(cfg.cost.delta >= 0.0 && cfg.cost.delta <= 1.0, c.where("delta"), "must lie in [0, 1]");
  }

  if (r.has("grid")) {
    Reader g(r.at("grid"), "config.grid", {"n_atoms", "n_atoms_target", "eval_resolution", "eval_box", "margin"});
    cfg.grid.n_atoms = g.integer("n_atoms", cfg.grid.n_atoms);
    cfg.grid.n_atoms_target = g.integer("n_atoms_target", 0);
    cfg.grid.eval_resolution = g.integer("eval_resolution", cfg.grid.eval_resolution);
    cfg.grid.margin = g.number("margin", cfg.grid.margin);
    if (g.has("eval_box")) cfg.grid.eval_box = read_box(g.at("eval_box"), g.where("eval_box"), n);
    require(cfg.grid.n_atoms >= 1 && cfg.grid.n_atoms <= 20000, g.where("n_atoms"), "must lie in [1, 20000]");
    require(cfg.grid.n_atoms_target >= 0 && cfg.grid.n_atoms_target <= 20000, g.where("n_atoms_target"),
            "must lie in [0, 20000]");
    require(cfg.grid.eval_resolution >= 4 && cfg.grid.eval_resolution <= 2048, g.where("eval_resolution"),
            "must lie in [4, 2048]");
    require(cfg.grid.margin >= 0.0, g.where("margin"), "must be nonnegative");
  }

  if (r.has("solver")) {
    Reader s(r.at("solver"), "config.solver", {"method", "epsilon", "max_iter", "tol"});
    try {
      cfg.solver.method = ctlab::solver_method_from_string(s.string("method", "exact"));
    } catch (const Error& e) {
      invalid(s.where("method"), e.what());
    }
    cfg.solver.epsilon = s.number("epsilon", cfg.solver.epsilon);
    cfg.solver.max_iter = s.integer("max_iter", cfg.solver.max_iter);
    cfg.solver.tol = s.number("tol", cfg.solver.tol);
    require(cfg.solver.epsilon > 0.0, s.where("epsilon"), "must be positive");
    require(cfg.solver.max_iter >= 1, s.where("max_iter"), "must be at least 1");
    require(cfg.solver.tol > 0.0, s.where("tol"), "must be positive");
  }

  if (r.has("experiment")) {
    Reader e(r.at("experiment"), "config.experiment",
             {"M", "N", "p", "h0", "K_levels", "sigma", "c_prime", "ratio_cap", "seed", "rho0", "step_multiplier",
              "engulf_samples", "engulf_heights", "section_heights", "delta_sweep", "resolution_sweep",
              "boundary_h0", "boundary_families", "exclude_singular", "closeness_check", "domain_bound"});
    ExperimentSpec& x = cfg.experiment;
    x.M = e.number("M", x.M);
    x.N = e.number("N", x.N);
    x.p = e.numbers("p", x.p);
    x.h0 = e.number("h0", x.h0);
    x.K_levels = e.integer("K_levels", x.K_levels);
    x.sigma = e.number("sigma", x.sigma);
    x.c_prime = e.number("c_prime", x.c_prime);
    x.ratio_cap = e.number("ratio_cap", x.ratio_cap);
    x.seed = e.unsigned_integer("seed", x.seed);
    x.rho0 = e.number("rho0", x.rho0);
    x.step_multiplier = e.integer("step_multiplier", x.step_multiplier);
    x.engulf_samples = e.integer("engulf_samples", x.engulf_samples);
    x.engulf_heights = e.numbers("engulf_heights", x.engulf_heights);
    x.section_heights = e.numbers("section_heights", x.section_heights);
    x.delta_sweep = e.numbers("delta_sweep", x.delta_sweep);
    x.resolution_sweep = e.integers("resolution_sweep", x.resolution_sweep);
    x.boundary_h0 = e.number("boundary_h0", x.boundary_h0);
    x.boundary_families = e.integer("boundary_families", x.boundary_families);
    x.exclude_singular = e.boolean("exclude_singular", x.exclude_singular);
    x.closeness_check = e.boolean("closeness_check", x.closeness_check);
    x.domain_bound = e.number("domain_bound", x.domain_bound);
    require(x.M > 1.0 && x.N > 1.0, e.where("M"), "M and N must exceed 1");
    require(x.M >= x.N * x.N, e.where("M"), "must be at least N^2");
    require(!x.p.empty(), e.where("p"), "needs at least one exponent");
    for (double p : x.p) require(p >= 1.0 && p <= 16.0, e.where("p"), "exponents must lie in [1, 16]");
    require(x.h0 > 0.0 && x.h0 <= 1.0, e.where("h0"), "must lie in (0, 1]");
    require(x.K_levels >= 1 && x.K_levels <= 12, e.where("K_levels"), "must lie in [1, 12]");
    require(x.sigma > 0.0 && x.sigma < 1.0, e.where("sigma"), "must lie in (0, 1)");
    require(x.c_prime >= 1.0, e.where("c_prime"), "must be at least 1");
    require(x.ratio_cap > 1.0, e.where("ratio_cap"), "must exceed 1");
    require(x.rho0 > 0.0, e.where("rho0"), "must be positive");
    require(x.step_multiplier >= 1 && x.step_multiplier <= 64, e.where("step_multiplier"), "must lie in [1, 64]");
    require(x.engulf_samples >= 1 && x.engulf_samples <= 100000, e.where("engulf_samples"),
            "must lie in [1, 100000]");
    for (double h : x.engulf_heights) require(h > 0.0 && h <= 1.0, e.where("engulf_heights"), "must lie in (0, 1]");
    for (double h : x.section_heights) require(h >= 0.0 && h <= 1.0, e.where("section_heights"), "must lie in [0, 1]");
    for (double d : x.delta_sweep) require(d >= 0.0 && d <= 1.0, e.where("delta_sweep"), "must lie in [0, 1]");
    for (int res : x.resolution_sweep)
      require(res >= 4 && res <= 2048, e.where("resolution_sweep"), "must lie in [4, 2048]");
    require(x.boundary_h0 > 0.0, e.where("boundary_h0"), "must be positive");
    require(x.boundary_families >= 1 && x.boundary_families <= 20, e.where("boundary_families"),
            "must lie in [1, 20]");
    require(x.domain_bound == 0.0 || x.domain_bound > 1.0, e.where("domain_bound"), "must be 0 or exceed 1");
  }
  cfg.output = r.string("output", cfg.output);

  if (cfg.experiment.domain_bound > 1.0) {
    check_domain_bound(cfg.source.domain, cfg.experiment.domain_bound, "config.source.domain");
    check_domain_bound(cfg.target.domain, cfg.experiment.domain_bound, "config.target.domain");
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Validation, "config", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, "config", path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ScenarioConfig& cfg) {
  json grid = {{"n_atoms", cfg.grid.n_atoms},
               {"n_atoms_target", cfg.grid.n_atoms_target},
               {"eval_resolution", cfg.grid.eval_resolution},
               {"margin", cfg.grid.margin}};
  if (cfg.grid.eval_box)
    grid["eval_box"] = {{"lo", point_json(cfg.grid.eval_box->lo)}, {"hi", point_json(cfg.grid.eval_box->hi)}};
  const ExperimentSpec& x = cfg.experiment;
  return {{"schema", cfg.schema},
          {"name", cfg.name},
          {"dimension", cfg.dimension},
          {"source", measure_json(cfg.source)},
          {"target", measure_json(cfg.target)},
          {"cost",
           {{"kind", ctlab::to_string(cfg.cost.kind)},
            {"exponent", cfg.cost.exponent},
            {"delta", cfg.cost.delta},
            {"bump", ctlab::to_string(cfg.cost.bump)}}},
          {"grid", grid},
          {"solver",
           {{"method", ctlab::to_string(cfg.solver.method)},
            {"epsilon", cfg.solver.epsilon},
            {"max_iter", cfg.solver.max_iter},
            {"tol", cfg.solver.tol}}},
          {"experiment",
           {{"M", x.M},
            {"N", x.N},
            {"p", x.p},
            {"h0", x.h0},
            {"K_levels", x.K_levels},
            {"sigma", x.sigma},
            {"c_prime", x.c_prime},
            {"ratio_cap", x.ratio_cap},
            {"seed", x.seed},
            {"rho0", x.rho0},
            {"step_multiplier", x.step_multiplier},
            {"engulf_samples", x.engulf_samples},
            {"engulf_heights", x.engulf_heights},
            {"section_heights", x.section_heights},
            {"delta_sweep", x.delta_sweep},
            {"resolution_sweep", x.resolution_sweep},
            {"boundary_h0", x.boundary_h0},
            {"boundary_families", x.boundary_families},
            {"exclude_singular", x.exclude_singular},
            {"closeness_check", x.closeness_check},
            {"domain_bound", x.domain_bound}}},
          {"output", cfg.output}};
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {
std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}
}  // namespace

std::string canonical_string(const ScenarioConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output");
  return j.dump();
}

std::string scenario_hash(const ScenarioConfig& cfg) { return hex(fnv1a(canonical_string(cfg))); }

std::string solve_key(const ScenarioConfig& cfg) {
  const json full = to_json(cfg);
  json j = {{"dimension", full["dimension"]},
            {"source", full["source"]},
            {"target", full["target"]},
            {"cost", full["cost"]},
            {"n_atoms", full["grid"]["n_atoms"]},
            {"n_atoms_target", full["grid"]["n_atoms_target"]},
            {"solver", full["solver"]},
            {"seed", full["experiment"]["seed"]}};
  return hex(fnv1a(j.dump()));
}

ctlab::Box eval_box(const ScenarioConfig& cfg) {
  if (cfg.grid.eval_box) return *cfg.grid.eval_box;
  const ctlab::Box b = cfg.source.domain.bounding_box();
  return ctlab::Box(b.lo.array() - cfg.grid.margin, b.hi.array() + cfg.grid.margin);
}

ctlab::Grid eval_grid(const ScenarioConfig& cfg) { return ctlab::Grid(eval_box(cfg), cfg.grid.eval_resolution); }

ctlab::CostModel make_cost_model(const ScenarioConfig& cfg) {
  const ctlab::Box src = eval_box(cfg).hull_with(cfg.source.domain.bounding_box());
  return ctlab::make_cost(cfg.cost.kind, src, cfg.target.domain.bounding_box(), cfg.cost.exponent, cfg.cost.delta,
                          cfg.cost.bump);
}

ctlab::CellSet source_cells(const ScenarioConfig& cfg, const ctlab::Grid& grid) {
  ctlab::CellSet cells;
  for (ctlab::CellIndex c = 0; c < grid.cell_count(); ++c)
    if (cfg.source.domain.contains(grid.center(c))) cells.push_back(c);
  return cells;
}

ScenarioConfig with_delta(const ScenarioConfig& cfg, double delta) {
  ScenarioConfig out = cfg;
  out.cost.delta = delta;
  if (delta > 0.0 && out.cost.kind == ctlab::CostKind::QuadraticBilinear)
    out.cost.kind = ctlab::CostKind::PerturbedBilinear;
  out.experiment.delta_sweep.clear();
  out.experiment.resolution_sweep.clear();
  return out;
}

ScenarioConfig with_resolution(const ScenarioConfig& cfg, int resolution) {
  ScenarioConfig out = cfg;
  const double scale = static_cast<double>(resolution) / cfg.grid.eval_resolution;
  out.grid.eval_resolution = resolution;
  out.experiment.step_multiplier =
      std::max(1, static_cast<int>(std::lround(cfg.experiment.step_multiplier * scale)));
  out.experiment.delta_sweep.clear();
  out.experiment.resolution_sweep.clear();
  return out;
}

namespace {

// Unit-ball identity case: 40 strata per axis give atoms at spacing 1/20,
// and the 128-cell evaluation grid over [-16/15, 16/15] puts three cells
// between neighbouring atoms, so a three-cell Hessian step is a lattice
// translation.
const char* kE1 = R"({
  "schema": 1, "name": "E1-identity", "dimension": 2,
  "source": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "target": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "cost": {"kind": "quadratic-bilinear"},
  "grid": {"n_atoms": 1257, "eval_resolution": 128,
           "eval_box": {"lo": [-1.0666666666666667, -1.0666666666666667], "hi": [1.0666666666666667, 1.0666666666666667]}},
  "experiment": {"p": [1, 2, 4], "step_multiplier": 3, "h0": 0.02, "rho0": 0.5, "closeness_check": true,
                 "section_heights": [0.01, 0.05, 0.1]}
})";

const char* kE2 = R"({
  "schema": 1, "name": "E2-delta-sweep", "dimension": 2,
  "source": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "target": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "cost": {"kind": "perturbed-bilinear", "delta": 0.05, "bump": "phi1"},
  "grid": {"n_atoms": 1960, "eval_resolution": 128,
           "eval_box": {"lo": [-1.0666666666666667, -1.0666666666666667], "hi": [1.0666666666666667, 1.0666666666666667]}},
  "experiment": {"M": 4, "N": 2, "K_levels": 3, "step_multiplier": 3, "h0": 0.02, "rho0": 0.5,
                 "delta_sweep": [0, 0.02, 0.05], "engulf_samples": 100, "engulf_heights": [0.001, 0.003, 0.01]}
})";

const char* kE3 = R"({
  "schema": 1, "name": "E3-p-sweep", "dimension": 2,
  "source": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "target": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "cost": {"kind": "quadratic-bilinear"},
  "grid": {"n_atoms": 1257, "eval_resolution": 128,
           "eval_box": {"lo": [-1.0666666666666667, -1.0666666666666667], "hi": [1.0666666666666667, 1.0666666666666667]}},
  "experiment": {"p": [1, 2, 4, 8], "step_multiplier": 3, "resolution_sweep": [32, 64, 128]}
})";

const char* kE4 = R"({
  "schema": 1, "name": "E4-two-ball", "dimension": 2,
  "source": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "target": {"domain": {"type": "balls", "balls": [{"center": [-2, 0], "radius": 1}, {"center": [2, 0], "radius": 1}]}},
  "cost": {"kind": "quadratic-bilinear"},
  "grid": {"n_atoms": 1000, "n_atoms_target": 2000, "eval_resolution": 64,
           "eval_box": {"lo": [-1.25, -1.25], "hi": [1.25, 1.25]}},
  "experiment": {"p": [2], "step_multiplier": 2, "h0": 0.02, "ratio_cap": 9, "resolution_sweep": [64, 128],
                 "exclude_singular": true}
})";

// Boundary study: 48 strata per axis over [-1, 1] and a 54-cell grid over
// [-1.125, 1.125] make every grid centre inside the ball an atom.
const char* kE5 = R"({
  "schema": 1, "name": "E5-boundary", "dimension": 2,
  "source": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "target": {"domain": {"type": "ball", "center": [0, 0], "radius": 1}},
  "cost": {"kind": "quadratic-bilinear"},
  "grid": {"n_atoms": 1810, "eval_resolution": 54, "eval_box": {"lo": [-1.125, -1.125], "hi": [1.125, 1.125]}},
  "experiment": {"p": [2], "boundary_h0": 0.125, "boundary_families": 6, "sigma": 0.5, "domain_bound": 1.5}
})";

}  // namespace

std::vector<std::string> preset_names() { return {"E1", "E2", "E3", "E4", "E5"}; }

ScenarioConfig preset(const std::string& name) {
  const char* text = name == "E1"   ? kE1
                     : name == "E2" ? kE2
                     : name == "E3" ? kE3
                     : name == "E4" ? kE4
                     : name == "E5" ? kE5
                                    : nullptr;
  if (!text) throw Error(ErrorKind::Validation, "preset", "unknown preset '" + name + "' (E1 to E5)");
  return parse_config(json::parse(text));
}

}  // namespace lab
