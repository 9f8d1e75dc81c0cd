#include "ctlab/regularity.hpp"

#include "ctlab/error.hpp"
#include "ctlab/geometry.hpp"
#include "ctlab/parallel.hpp"
#include "stencil.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <random>

namespace ctlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const SectionOptions kLocal{SectionScan::Component, -1.0, false};

// Largest one-cell forward minus backward slope over the axes; NaN when a
// neighbour is missing.
double slope_gap(const Grid& grid, const Vector& v, CellIndex c) {
  double gap = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid.dim(); ++a) {
    const CellIndex p = grid.shifted(c, a, 1), q = grid.shifted(c, a, -1);
    if (p < 0 || q < 0) return kNaN;
    const double s = grid.spacing()[a];
    gap = std::max(gap, (v[p] - v[c]) / s - (v[c] - v[q]) / s);
  }
  return gap;
}

double kink_tolerance(const PotentialField& u) { return 10.0 * u.grid().max_spacing() * (1.0 + u.semiconvexity()); }

Point resolve_center(const Grid& grid, const Point& center) {
  return center.size() == grid.dim() ? center : grid.box().center();
}

std::optional<Normalization> try_normalize(const Grid& grid, const CellSet& cells) {
  try {
    return john_normalize(grid, cells);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Degenerate) return std::nullopt;
    throw;
  }
}

double hull_diameter(const Grid& grid, const Polytope& hull) {
  double d = 0.0;
  for (int i : hull.vertices)
    for (int j : hull.vertices) d = std::max(d, (grid.center(i) - grid.center(j)).norm());
  return d;
}

}  // namespace

Matrix HessianField::at(CellIndex cell) const {
  const int n = grid.dim();
  return Eigen::Map<const Matrix>(entries.col(cell).data(), n, n);
}

CellSet HessianField::valid_cells() const { return to_cells(valid); }
CellSet HessianField::kink_cells() const { return to_cells(kink); }

HessianField hessian_field(const PotentialField& u, int step_multiplier) {
  if (step_multiplier < 1)
    throw Error(ErrorKind::InvalidParameter, "hessian_field", "step multiplier must be at least 1");
  const Grid& grid = u.grid();
  const int n = grid.dim();
  const CellIndex cells = grid.cell_count();
  HessianField f;
  f.grid = grid;
  f.step_multiplier = step_multiplier;
  f.step = step_multiplier * grid.max_spacing();
  f.entries = Matrix::Zero(n * n, cells);
  f.norm = Vector::Zero(cells);
  f.frobenius = Vector::Zero(cells);
  f.min_quotient = Vector::Constant(cells, std::numeric_limits<double>::infinity());
  f.valid.assign(static_cast<std::size_t>(cells), 0);
  f.kink.assign(static_cast<std::size_t>(cells), 0);
  f.semiconvexity = semiconvexity_from_values(grid, u.values(), step_multiplier);
  const double kink_tol = kink_tolerance(u);

  parallel_for(0, cells, [&](std::ptrdiff_t i) {
    const auto c = static_cast<CellIndex>(i);
    const double gap = slope_gap(grid, u.values(), c);
    if (gap > kink_tol) f.kink[static_cast<std::size_t>(c)] = 1;
    Matrix h;
    if (!detail::hessian_at(grid, u.values(), c, step_multiplier, h)) return;
    const double q = detail::min_second_difference(grid, u.values(), c, step_multiplier);
    if (!std::isfinite(q)) return;
    f.valid[static_cast<std::size_t>(c)] = 1;
    f.min_quotient[c] = q;
    Eigen::Map<Matrix>(f.entries.col(c).data(), n, n) = h;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
    f.norm[c] = eig.eigenvalues().cwiseAbs().maxCoeff();
    f.frobenius[c] = h.norm();
  });
  return f;
}

double engulfing_constant(const PotentialField& u, const CostModel& cost, PointRef x0, PointRef y0, PointRef x1,
                          PointRef y1, double h, double c_max, double resolution) {
  const Grid& grid = u.grid();
  const Section s0 = section_extract(u, cost, x0, y0, h);
  const double u1 = u(x1);
  const double c1 = cost.value(x1, y1);
  CellIndex center1 = grid.locate(x1);
  if (center1 < 0) center1 = grid.nearest(x1);
  double worst = 0.0;
  for (CellIndex c : s0.cells)
    if (c != center1) worst = std::max(worst, u.value(c) + cost.value(grid.centers().col(c), y1) - c1 - u1);
  auto contains = [&](double C) { return worst <= C * h + 1e-9; };
  if (contains(1.0)) return 1.0;
  if (!contains(c_max)) return c_max + resolution;
  double lo = 1.0, hi = c_max;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (contains(mid) ? hi : lo) = mid;
  }
  return hi;
}

std::vector<EngulfingRow> engulfing_estimate(const PotentialField& u, const CostModel& cost, int samples,
                                             const std::vector<double>& heights, std::uint64_t seed,
                                             const EngulfingOptions& options) {
  const Grid& grid = u.grid();
  if (samples < 1) throw Error(ErrorKind::InvalidParameter, "engulfing_estimate", "need at least one sample");
  for (double h : heights)
    if (!(h > 0.0 && h <= options.h_cap))
      throw Error(ErrorKind::InvalidParameter, "engulfing_estimate", "heights must lie in (0, h_cap]");
  const Point center = resolve_center(grid, options.center);
  const double radius =
      options.radius > 0.0 ? options.radius : 0.25 * (grid.box().hi - grid.box().lo).minCoeff();
  const CellSet pool = ball_cells(grid, center, radius);
  if (pool.empty()) throw Error(ErrorKind::InvalidParameter, "engulfing_estimate", "sample ball has no cells");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_cell(0, pool.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<CellIndex, double>> draws(static_cast<std::size_t>(samples));
  for (auto& d : draws) {
    d.first = pool[pick_cell(rng)];
    d.second = unit(rng);
  }

  std::vector<EngulfingRow> rows;
  for (double h : heights) {
    EngulfingRow row;
    row.h = h;
    std::vector<double> cs(draws.size(), kNaN);
    parallel_for(0, static_cast<std::ptrdiff_t>(draws.size()), [&](std::ptrdiff_t i) {
      const auto& [cell, r] = draws[static_cast<std::size_t>(i)];
      const Point x0 = grid.center(cell);
      try {
        const Point y0 = supporting_target(u, x0);
        const Section s0 = section_extract(u, cost, x0, y0, h);
        if (s0.cells.empty()) return;
        const auto k = std::min(s0.cells.size() - 1, static_cast<std::size_t>(r * static_cast<double>(s0.cells.size())));
        const Point x1 = grid.center(s0.cells[k]);
        const Point y1 = supporting_target(u, x1);
        cs[static_cast<std::size_t>(i)] =
            engulfing_constant(u, cost, x0, y0, x1, y1, h, options.c_max, options.resolution);
      } catch (const Error&) {
        // counted as skipped below
      }
    });
    for (double c : cs) {
      if (std::isnan(c)) {
        ++row.skipped;
        continue;
      }
      if (c > options.c_max) ++row.capped;
      row.constants.push_back(c);
    }
    row.samples = static_cast<int>(row.constants.size());
    if (!row.constants.empty()) {
      std::vector<double> sorted = row.constants;
      std::sort(sorted.begin(), sorted.end());
      auto quantile = [&](double q) { return sorted[static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1))]; };
      row.max_c = sorted.back();
      row.q50 = quantile(0.5);
      row.q90 = quantile(0.9);
      row.c_prime = row.max_c * row.max_c;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

DensityEstimate section_density_estimate(const HessianField& hess, const Section& section, double N) {
  if (!section.affine)
    throw Error(ErrorKind::InvalidParameter, "section_density_estimate", "section is not normalized");
  if (!(N > 1.0)) throw Error(ErrorKind::InvalidParameter, "section_density_estimate", "N must exceed 1");
  DensityEstimate d;
  d.a = section.norm_size;
  int bad = 0, band = 0;
  for (CellIndex c : section.cells) {
    if (!hess.valid[static_cast<std::size_t>(c)]) continue;
    ++d.cells;
    const double v = hess.norm[c];
    if (v >= N * d.a) ++bad;
    if (v >= d.a / N && v <= N * d.a) ++band;
  }
  if (d.cells < 10)
    throw Error(ErrorKind::InsufficientResolution, "section_density_estimate",
                "section has " + std::to_string(d.cells) + " valid cells, need 10");
  d.bad_fraction = static_cast<double>(bad) / d.cells;
  d.band_fraction = static_cast<double>(band) / d.cells;
  return d;
}

namespace {

struct Probe {
  double h = 0.0;
  double a = kNaN;
};

// Height whose section has a(S_h) within [target / tau, target * tau]: scan
// the ladder downwards, then bisect in log h inside the first bracket.
std::optional<double> find_height(const PotentialField& u, const CostModel& cost, PointRef x, PointRef y,
                                  double target, const DecayOptions& opt) {
  const Grid& grid = u.grid();
  auto size_at = [&](double h) {
    const Section s = section_extract(u, cost, x, y, h, kLocal);
    const auto nz = try_normalize(grid, s.cells);
    return nz ? nz->norm_size : kNaN;
  };
  const double lo_band = target / opt.tau, hi_band = target * opt.tau;
  Probe prev;
  for (int i = 0; i < opt.ladder; ++i) {
    const double h = opt.h0 * std::ldexp(1.0, -i);
    const double a = size_at(h);
    if (std::isnan(a)) break;  // sections below this height are too small
    if (a >= lo_band && a <= hi_band) return h;
    if (a > hi_band && !std::isnan(prev.a) && prev.a < lo_band) {
      double h_hi = prev.h, h_lo = h;  // a(h_hi) below band, a(h_lo) above
      for (int b = 0; b < opt.bisection_steps; ++b) {
        const double mid = std::sqrt(h_hi * h_lo);
        const double am = size_at(mid);
        if (std::isnan(am)) return std::nullopt;
        if (am >= lo_band && am <= hi_band) return mid;
        (am < lo_band ? h_hi : h_lo) = mid;
      }
      return std::nullopt;
    }
    prev = {h, a};
  }
  return std::nullopt;
}

}  // namespace

LevelSetTable levelset_decay(const PotentialField& u, const CostModel& cost, const HessianField& hess,
                             const DecayOptions& opt) {
  if (!(opt.M > 1.0 && opt.N > 1.0))
    throw Error(ErrorKind::InvalidParameter, "levelset_decay", "M and N must exceed 1");
  if (opt.M < opt.N * opt.N)
    throw Error(ErrorKind::InvalidParameter, "levelset_decay", "M must be at least N^2");
  if (opt.levels < 1) throw Error(ErrorKind::InvalidParameter, "levelset_decay", "need at least one level");
  const Grid& grid = u.grid();
  const Point center = resolve_center(grid, opt.center);
  const double cell_vol = grid.cell_volume();

  LevelSetTable t;
  t.M = opt.M;
  t.N = opt.N;
  t.rho0 = opt.rho0;

  // Measured theta from diam(S_h) <= C h^{1/2} ||A|| <= C h^{1/2 - theta}.
  std::vector<std::pair<double, double>> size_diam;  // (a, diam)
  t.theta = 0.0;
  for (int i = 0; i < opt.theta_samples; ++i) {
    const Vector q = halton_point(static_cast<std::uint64_t>(i + 1), grid.dim());
    // Map [0,1)^n to the ball by rejection-free radial scaling.
    const Vector dir = 2.0 * q.array() - 1.0;
    const Point x = grid.center(grid.nearest(center + opt.rho0 * dir / std::max(1.0, dir.norm())));
    const Point y = supporting_target(u, x);
    for (double f : {1.0, 0.25, 0.0625}) {
      const double h = opt.h0 * f;
      const Section s = section_extract(u, cost, x, y, h, kLocal);
      const auto nz = try_normalize(grid, s.cells);
      if (!nz) continue;
      if (h < 1.0) t.theta = std::max(t.theta, std::log(std::max(1.0, nz->map.norm_A)) / std::log(1.0 / h));
      size_diam.emplace_back(nz->norm_size, hull_diameter(grid, nz->hull));
    }
  }
  t.theta = std::clamp(t.theta, 1e-3, 0.49);
  t.beta = 1.0 / (4.0 * t.theta) - 0.5;
  t.log_c_hat = -std::numeric_limits<double>::infinity();
  for (const auto& [a, d] : size_diam)
    if (d > 0.0) t.log_c_hat = std::max(t.log_c_hat, std::log(d) + t.beta * std::log(a));

  std::vector<double> rho{opt.rho0};
  for (int k = 1; k <= opt.levels; ++k) {
    const double next = rho.back() - std::exp(t.log_c_hat - k * t.beta * std::log(opt.M));
    if (next < 0.5 * opt.rho0) {
      t.collapsed = true;
      break;
    }
    rho.push_back(next);
  }

  double domain = 0.0;
  for (CellIndex c = 0; c < grid.cell_count(); ++c)
    if (hess.valid[static_cast<std::size_t>(c)] && (grid.center(c) - center).norm() <= opt.rho0) domain += cell_vol;

  for (std::size_t k = 0; k < rho.size(); ++k) {
    const double level = std::pow(opt.M, static_cast<double>(k));
    CellSet d;
    for (CellIndex c = 0; c < grid.cell_count(); ++c)
      if (hess.valid[static_cast<std::size_t>(c)] && hess.norm[c] >= level &&
          (grid.center(c) - center).norm() <= rho[k])
        d.push_back(c);
    LevelRow row;
    row.k = static_cast<int>(k);
    row.rho = rho[k];
    row.cells = static_cast<int>(d.size());
    row.measure = static_cast<double>(d.size()) * cell_vol;
    row.fraction = domain > 0.0 ? row.measure / domain : 0.0;
    t.rows.push_back(row);
    t.level_cells.push_back(std::move(d));
  }

  for (std::size_t k = 0; k + 1 < t.rows.size(); ++k) {
    LevelRow& row = t.rows[k];
    if (row.cells > 0) row.ratio = static_cast<double>(t.rows[k + 1].cells) / row.cells;

    // Cover D_{k+1} by sections of normalized size about N M^k.
    const CellSet& next = t.level_cells[k + 1];
    if (next.empty()) continue;
    const std::size_t stride =
        std::max<std::size_t>(1, (next.size() + static_cast<std::size_t>(opt.max_candidates) - 1) /
                                     static_cast<std::size_t>(opt.max_candidates));
    std::vector<CellIndex> cand_cells;
    for (std::size_t i = 0; i < next.size(); i += stride) cand_cells.push_back(next[i]);
    row.candidates = static_cast<int>(cand_cells.size());
    const double target = opt.N * std::pow(opt.M, static_cast<double>(k));
    std::vector<Point> ys(cand_cells.size());
    std::vector<double> hs(cand_cells.size(), kNaN);
    parallel_for(0, static_cast<std::ptrdiff_t>(cand_cells.size()), [&](std::ptrdiff_t i) {
      const Point x = grid.center(cand_cells[static_cast<std::size_t>(i)]);
      ys[static_cast<std::size_t>(i)] = supporting_target(u, x);
      if (auto h = find_height(u, cost, x, ys[static_cast<std::size_t>(i)], target, opt))
        hs[static_cast<std::size_t>(i)] = *h;
    });
    std::vector<CoverCandidate> cands;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < cand_cells.size(); ++i) {
      if (std::isnan(hs[i])) {
        ++row.bisection_failures;
        continue;
      }
      cands.push_back({cand_cells[i], hs[i]});
      origin.push_back(i);
    }
    if (cands.empty()) continue;
    std::map<std::pair<int, double>, CellSet> cache;
    auto provider = [&](int i, double height) -> CellSet {
      auto key = std::make_pair(i, height);
      auto it = cache.find(key);
      if (it != cache.end()) return it->second;
      const std::size_t o = origin[static_cast<std::size_t>(i)];
      CellSet cells = section_extract(u, cost, grid.center(cand_cells[o]), ys[o], height, kLocal).cells;
      cache.emplace(key, cells);
      return cells;
    };
    const CoverReport cover = vitali_cover(cands, provider, opt.sigma, opt.c_prime, grid.cell_count());
    row.sections_selected = static_cast<int>(cover.selected.size());
    const double hi = opt.N * opt.N * std::pow(opt.M, static_cast<double>(k));
    const double lo = std::pow(opt.M, static_cast<double>(k));
    double bad_sum = 0.0;
    for (int sel : cover.selected) {
      const CoverCandidate& cand = cands[static_cast<std::size_t>(sel)];
      const std::size_t o = origin[static_cast<std::size_t>(sel)];
      Section s = section_extract(u, cost, grid.center(cand_cells[o]), ys[o], cand.h, kLocal);
      for (CellIndex c : s.cells)
        if (hess.valid[static_cast<std::size_t>(c)] && hess.norm[c] >= hi) row.covering_bound += cell_vol;
      for (CellIndex c : provider(sel, opt.sigma * cand.h))
        if (hess.valid[static_cast<std::size_t>(c)] && hess.norm[c] >= lo && hess.norm[c] <= hi)
          row.band_mass += cell_vol;
      double bad = kNaN;
      if (const auto nz = try_normalize(grid, s.cells)) {
        s.affine = nz->map;
        s.sandwich_ratio = nz->sandwich_ratio;
        s.norm_size = nz->norm_size;
        try {
          bad = section_density_estimate(hess, s, opt.N).bad_fraction;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::InsufficientResolution) throw;
        }
      }
      row.bad_fractions.push_back(bad);
      if (!std::isnan(bad)) bad_sum += bad;
    }
    const auto counted = std::count_if(row.bad_fractions.begin(), row.bad_fractions.end(),
                                       [](double b) { return !std::isnan(b); });
    row.mean_bad_fraction = counted > 0 ? bad_sum / static_cast<double>(counted) : 0.0;
  }
  return t;
}

double max_ratio(const LevelSetTable& table) {
  double m = 0.0;
  for (const LevelRow& r : table.rows)
    if (!std::isnan(r.ratio)) m = std::max(m, r.ratio);
  return m;
}

W2pResult w2p_norm(const HessianField& hess, const CellSet& region, double p, const SingularMask* exclude, double M) {
  if (!(p >= 1.0)) throw Error(ErrorKind::InvalidParameter, "w2p_norm", "p must be at least 1");
  if (!(M > 1.0)) throw Error(ErrorKind::InvalidParameter, "w2p_norm", "M must exceed 1");
  const double vol = hess.grid.cell_volume();
  CellSet cells;
  for (CellIndex c : region)
    if (hess.valid[static_cast<std::size_t>(c)]) cells.push_back(c);
  if (exclude) cells = set_difference(cells, exclude->cells);

  W2pResult r;
  r.cells = static_cast<int>(cells.size());
  r.region_measure = static_cast<double>(cells.size()) * vol;
  double top = 0.0;
  for (CellIndex c : cells) {
    r.direct += std::pow(hess.norm[c], p) * vol;
    top = std::max(top, hess.norm[c]);
  }
  r.layer_cake = r.region_measure;
  for (int k = 0; std::pow(M, k) <= top; ++k) {
    const double level = std::pow(M, k);
    const auto count = std::count_if(cells.begin(), cells.end(), [&](CellIndex c) { return hess.norm[c] >= level; });
    r.layer_cake += p * std::pow(M, (k + 1) * p) * static_cast<double>(count) * vol;
  }
  return r;
}

SingularMask singular_detect(const PotentialField& u, const CostModel& cost, double h0, double ratio_cap,
                             const CellSet& domain, int ladder) {
  if (!(h0 > 0.0)) throw Error(ErrorKind::InvalidParameter, "singular_detect", "h0 must be positive");
  if (!(ratio_cap > 1.0)) throw Error(ErrorKind::InvalidParameter, "singular_detect", "ratio cap must exceed 1");
  const Grid& grid = u.grid();
  CellSet cells = domain;
  if (cells.empty()) {
    cells.resize(static_cast<std::size_t>(grid.cell_count()));
    std::iota(cells.begin(), cells.end(), 0);
  }
  SingularMask mask;
  mask.grid = grid;
  mask.ratio_cap = ratio_cap;
  mask.h0 = h0;
  mask.ladder = ladder;
  const double kink_tol = kink_tolerance(u);

  std::vector<std::uint8_t> flag(cells.size(), 0);  // 1 kink, 2 section failure
  parallel_for(0, static_cast<std::ptrdiff_t>(cells.size()), [&](std::ptrdiff_t i) {
    const CellIndex c = cells[static_cast<std::size_t>(i)];
    if (slope_gap(grid, u.values(), c) > kink_tol) {
      flag[static_cast<std::size_t>(i)] = 1;
      return;
    }
    const Point x = grid.center(c);
    const Point y = supporting_target(u, x);
    for (int l = 0; l < ladder; ++l) {
      const Section s = section_extract(u, cost, x, y, h0 * std::ldexp(1.0, -l), kLocal);
      const auto nz = try_normalize(grid, s.cells);
      if (nz && nz->sandwich_ratio <= ratio_cap) return;
    }
    flag[static_cast<std::size_t>(i)] = 2;
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (flag[i] == 1) mask.kink_cells.push_back(cells[i]);
    if (flag[i] == 2) mask.section_cells.push_back(cells[i]);
  }
  CellSet raw;
  std::set_union(mask.kink_cells.begin(), mask.kink_cells.end(), mask.section_cells.begin(),
                 mask.section_cells.end(), std::back_inserter(raw));
  mask.cells = dilate(grid, raw, 1);
  mask.measure = static_cast<double>(mask.cells.size()) * grid.cell_volume();
  return mask;
}

BoundaryProfile boundary_heights(const PotentialField& u, const CostModel& cost, const CellSet& domain, double h0,
                                 const HessianField& hess, const BoundaryOptions& opt) {
  if (!(h0 > 0.0)) throw Error(ErrorKind::InvalidParameter, "boundary_heights", "h0 must be positive");
  if (!(opt.p >= 1.0)) throw Error(ErrorKind::InvalidParameter, "boundary_heights", "p must be at least 1");
  if (domain.empty()) throw Error(ErrorKind::InvalidParameter, "boundary_heights", "empty domain");
  const Grid& grid = u.grid();
  const auto count = static_cast<std::size_t>(grid.cell_count());
  const CellMask inside = to_mask(domain, count);
  std::vector<CellIndex> outside;
  for (CellIndex c = 0; c < grid.cell_count(); ++c)
    if (!inside[static_cast<std::size_t>(c)]) outside.push_back(c);

  BoundaryProfile prof;
  prof.h0 = h0;
  prof.h_bar = Vector::Constant(grid.cell_count(), kNaN);
  prof.interior.assign(count, 0);
  prof.boundary = boundary_cells(grid, domain);
  const CellMask on_boundary = to_mask(prof.boundary, count);

  // Convexity flag: no outside centre strictly inside the hull of the domain.
  {
    Matrix pts(grid.dim(), static_cast<Eigen::Index>(domain.size()));
    for (std::size_t i = 0; i < domain.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = grid.center(domain[i]);
    try {
      const Polytope hull = convex_hull(pts);
      if (!hull.degenerate)
        for (CellIndex c : outside)
          if (hull_excess(hull, grid.center(c)) < -1e-9 * grid.max_spacing()) {
            prof.domain_convex = false;
            break;
          }
    } catch (const Error&) {
      prof.domain_convex = false;
    }
  }

  std::vector<Point> ys(domain.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(domain.size()), [&](std::ptrdiff_t i) {
    const CellIndex c = domain[static_cast<std::size_t>(i)];
    if (on_boundary[static_cast<std::size_t>(c)]) {
      prof.h_bar[c] = 0.0;
      return;
    }
    const Point x = grid.center(c);
    const Point y = supporting_target(u, x);
    ys[static_cast<std::size_t>(i)] = y;
    const double base = cost.value(x, y) + u.value(c);
    double lowest = std::numeric_limits<double>::infinity();
    for (CellIndex z : outside) lowest = std::min(lowest, u.value(z) + cost.value(grid.centers().col(z), y) - base);
    const double h = std::max(0.0, lowest - 1e-9);
    if (h >= h0) {
      prof.h_bar[c] = h0;
      prof.interior[static_cast<std::size_t>(c)] = 1;
    } else {
      prof.h_bar[c] = h;
    }
  });

  std::vector<double> ks, logs;
  for (int k = 0; k < opt.families; ++k) {
    BoundaryFamily fam;
    fam.k = k;
    fam.h_hi = h0 * std::ldexp(1.0, -k);
    fam.h_lo = 0.5 * fam.h_hi;
    std::vector<CoverCandidate> cands;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < domain.size(); ++i) {
      const CellIndex c = domain[i];
      const double h = prof.h_bar[c];
      if (prof.interior[static_cast<std::size_t>(c)] || on_boundary[static_cast<std::size_t>(c)]) continue;
      if (h >= fam.h_lo && h <= fam.h_hi) {
        cands.push_back({c, h});
        origin.push_back(i);
      }
    }
    fam.candidates = static_cast<int>(cands.size());
    if (!cands.empty()) {
      auto provider = [&](int i, double height) {
        const std::size_t o = origin[static_cast<std::size_t>(i)];
        return section_extract(u, cost, grid.center(domain[o]), ys[o], height, kLocal).cells;
      };
      const CoverReport cover = vitali_cover(cands, provider, opt.sigma, opt.c_prime, grid.cell_count());
      fam.n_sections = static_cast<int>(cover.selected.size());
      for (int sel : cover.selected)
        for (CellIndex c : provider(sel, cands[static_cast<std::size_t>(sel)].h))
          if (hess.valid[static_cast<std::size_t>(c)]) fam.power_sum += std::pow(hess.norm[c], opt.p) * grid.cell_volume();
    }
    if (fam.power_sum > 0.0) {
      ks.push_back(k);
      logs.push_back(std::log(fam.power_sum));
    }
    prof.families.push_back(fam);
  }
  if (ks.size() >= 2) {
    const double n = static_cast<double>(ks.size());
    double sk = 0, sl = 0, skk = 0, skl = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      sk += ks[i];
      sl += logs[i];
      skk += ks[i] * ks[i];
      skl += ks[i] * logs[i];
    }
    prof.fitted_rate = std::exp((n * skl - sk * sl) / (n * skk - sk * sk));
  }
  return prof;
}

}  // namespace ctlab
