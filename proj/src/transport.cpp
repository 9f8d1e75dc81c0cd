#include "ctlab/transport.hpp"

#include "ctlab/error.hpp"
#include "ctlab/parallel.hpp"
#include "stencil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ctlab {

namespace {

constexpr double kMaxCells = 4e6;

double dual_objective(const Vector& a, const Vector& b, const Vector& psi, const Vector& lambda) {
  double d = 0.0;
  for (Eigen::Index j = 0; j < b.size(); ++j)
    if (b[j] > 0.0) d += b[j] * lambda[j];
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] > 0.0) d -= a[i] * psi[i];
  return d;
}

void validate_weights(const Matrix& cost, const Vector& a, const Vector& b) {
  if (a.size() != cost.rows() || b.size() != cost.cols())
    throw Error(ErrorKind::InvalidSpec, "solve_discrete", "weights do not match the cost matrix");
  if (a.size() == 0 || b.size() == 0) throw Error(ErrorKind::InvalidSpec, "solve_discrete", "empty atom cloud");
  if ((a.array() < 0.0).any() || (b.array() < 0.0).any())
    throw Error(ErrorKind::InvalidSpec, "solve_discrete", "negative weight");
  if (std::abs(a.sum() - b.sum()) > 1e-9)
    throw Error(ErrorKind::InvalidSpec, "solve_discrete", "source and target masses differ");
  if (!cost.allFinite()) throw Error(ErrorKind::InvalidSpec, "solve_discrete", "non-finite cost entry");
}

TransportPlan finish_plan(const Matrix& cost, const Vector& a, const Vector& b, std::vector<Coupling> couplings,
                          Vector lambda) {
  TransportPlan plan;
  plan.couplings = std::move(couplings);
  plan.target_duals = std::move(lambda);
  complete_duals(cost, b, plan.target_duals, plan.source_duals);
  for (const Coupling& c : plan.couplings) plan.objective += c.mass * cost(c.i, c.j);
  plan.gap = plan.objective - dual_objective(a, b, plan.source_duals, plan.target_duals);
  return plan;
}

TransportPlan solve_exact(const Matrix& cost, const Vector& a, const Vector& b, bool center, int anchor) {
  TransportSimplex simplex(cost, a, b);
  SimplexResult raw = simplex.solve();
  Vector lambda = raw.target_duals;
  Vector psi;
  complete_duals(cost, b, lambda, psi);
  if (center) {
    lambda = center_target_duals(cost, raw.couplings, b, lambda, anchor);
  }
  TransportPlan plan = finish_plan(cost, a, b, std::move(raw.couplings), std::move(lambda));
  plan.method = SolverMethod::Exact;
  plan.iterations = raw.pivots;
  return plan;
}

double log_sum_exp(const double* terms, Eigen::Index count, Eigen::Index stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < count; ++k) mx = std::max(mx, terms[k * stride]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (Eigen::Index k = 0; k < count; ++k) s += std::exp(terms[k * stride] - mx);
  return mx + std::log(s);
}

TransportPlan solve_entropic(const Matrix& cost, const Vector& a, const Vector& b, const SolverOptions& opt) {
  const double eps = opt.epsilon;
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParameter, "solve_discrete", "epsilon must be positive");
  const Eigen::Index m = cost.rows(), n = cost.cols();
  const Vector log_a = a.array().log();
  const Vector log_b = b.array().log();
  Vector f = Vector::Zero(m), g = Vector::Zero(n);
  Matrix work(m, n);
  double err = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (a[i] <= 0.0) {
        f[i] = -std::numeric_limits<double>::infinity();
        continue;
      }
      for (Eigen::Index j = 0; j < n; ++j) work(i, j) = (g[j] - cost(i, j)) / eps;
      f[i] = eps * (log_a[i] - log_sum_exp(&work(i, 0), n, m));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (b[j] <= 0.0) {
        g[j] = -std::numeric_limits<double>::infinity();
        continue;
      }
      for (Eigen::Index i = 0; i < m; ++i) work(i, j) = (f[i] - cost(i, j)) / eps;
      g[j] = eps * (log_b[j] - log_sum_exp(&work(0, j), m, 1));
    }
    // Columns are exact after the g update; measure the row residual.
    err = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (a[i] <= 0.0) continue;
      double r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (b[j] > 0.0) r += std::exp((f[i] + g[j] - cost(i, j)) / eps);
      err += std::abs(r - a[i]);
    }
    if (err <= opt.tol) break;
  }
  if (err > opt.tol) {
    std::ostringstream msg;
    msg << "no convergence after " << opt.max_iter << " iterations, marginal gap " << err;
    throw Error(ErrorKind::IterationLimit, "solve_discrete", msg.str());
  }

  Matrix p(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      p(i, j) = (a[i] > 0.0 && b[j] > 0.0) ? std::exp((f[i] + g[j] - cost(i, j)) / eps) : 0.0;
  // Marginal rounding: scale down overfull rows and columns, then spread the
  // remaining deficit as a rank-one correction.
  Vector r = p.rowwise().sum();
  for (Eigen::Index i = 0; i < m; ++i)
    if (r[i] > a[i]) p.row(i) *= a[i] / r[i];
  Vector c = p.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < n; ++j)
    if (c[j] > b[j]) p.col(j) *= b[j] / c[j];
  const Vector err_r = a - p.rowwise().sum();
  const Vector err_c = b - p.colwise().sum().transpose();
  const double total = err_r.sum();
  if (total > 0.0) p += err_r * err_c.transpose() / total;

  std::vector<Coupling> couplings;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (p(i, j) > 0.0) couplings.push_back({static_cast<int>(i), static_cast<int>(j), p(i, j)});
  Vector lambda = g;
  for (Eigen::Index j = 0; j < n; ++j)
    if (b[j] <= 0.0) lambda[j] = 0.0;
  TransportPlan plan = finish_plan(cost, a, b, std::move(couplings), std::move(lambda));
  plan.method = SolverMethod::Entropic;
  plan.epsilon = eps;
  plan.iterations = it + 1;
  return plan;
}

TransportPlan solve_dispatch(const Matrix& cost, const Vector& a, const Vector& b, const SolverOptions& opt,
                             int anchor) {
  if (static_cast<double>(cost.rows()) * static_cast<double>(cost.cols()) > kMaxCells)
    throw Error(ErrorKind::TooLarge, "solve_discrete", "source x target exceeds 4e6 cells");
  validate_weights(cost, a, b);
  if (opt.method == SolverMethod::Exact) return solve_exact(cost, a, b, opt.center_duals, anchor);
  return solve_entropic(cost, a, b, opt);
}

}  // namespace

std::string to_string(SolverMethod method) { return method == SolverMethod::Exact ? "exact" : "entropic"; }

SolverMethod solver_method_from_string(const std::string& name) {
  if (name == "exact") return SolverMethod::Exact;
  if (name == "entropic") return SolverMethod::Entropic;
  throw Error(ErrorKind::InvalidSpec, "solver", "unknown method '" + name + "'");
}

Matrix cost_matrix(const CostModel& cost, const AtomCloud& source, const AtomCloud& target) {
  if (source.dim() != cost.dim() || target.dim() != cost.dim())
    throw Error(ErrorKind::InvalidSpec, "solve_discrete", "atom dimension does not match the cost");
  for (int i = 0; i < source.size(); ++i)
    if (!cost.source_box.contains(source.positions.col(i), 1e-9))
      throw Error(ErrorKind::Domain, "solve_discrete", "source atom outside the cost domain");
  for (int j = 0; j < target.size(); ++j)
    if (!cost.target_box.contains(target.positions.col(j), 1e-9))
      throw Error(ErrorKind::Domain, "solve_discrete", "target atom outside the cost domain");
  Matrix c(source.size(), target.size());
  parallel_for(0, source.size(), [&](std::ptrdiff_t i) {
    for (int j = 0; j < target.size(); ++j)
      c(i, j) = cost.value(source.positions.col(i), target.positions.col(j));
  });
  return c;
}

TransportPlan solve_discrete(const CostModel& cost, const AtomCloud& source, const AtomCloud& target,
                             const SolverOptions& options) {
  if (static_cast<double>(source.size()) * static_cast<double>(target.size()) > kMaxCells)
    throw Error(ErrorKind::TooLarge, "solve_discrete", "source x target exceeds 4e6 cells");
  const Matrix c = cost_matrix(cost, source, target);
  // Anchor the dual centering at the target atom nearest the barycentre.
  const Point bary = target.positions * target.weights;
  int anchor = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < target.size(); ++j) {
    const double d = (target.positions.col(j) - bary).squaredNorm();
    if (d < best && target.weights[j] > 0.0) {
      best = d;
      anchor = j;
    }
  }
  return solve_dispatch(c, source.weights, target.weights, options, anchor);
}

TransportPlan solve_matrix(const Matrix& cost, const Vector& source_weights, const Vector& target_weights,
                           const SolverOptions& options) {
  return solve_dispatch(cost, source_weights, target_weights, options, 0);
}

TransportPlan oracle_1d(const CostModel& cost, const AtomCloud& source, const AtomCloud& target) {
  if (cost.dim() != 1 || source.dim() != 1 || target.dim() != 1)
    throw Error(ErrorKind::NotApplicable, "oracle_1d", "requires dimension 1");
  // Sign of c_xy on a 64 x 64 sample of the product box.
  constexpr int kS = 64;
  bool neg = false, pos = false;
  const double scale = std::max(1.0, cost.scale());
  for (int a = 0; a < kS; ++a)
    for (int b = 0; b < kS; ++b) {
      Point x(1), y(1);
      x[0] = cost.source_box.lo[0] + (a + 0.5) / kS * (cost.source_box.hi[0] - cost.source_box.lo[0]);
      y[0] = cost.target_box.lo[0] + (b + 0.5) / kS * (cost.target_box.hi[0] - cost.target_box.lo[0]);
      double cxy;
      try {
        cxy = cost.derivatives(x, y).dxy(0, 0);
      } catch (const Error&) {
        continue;
      }
      if (cxy < -1e-12 * scale) neg = true;
      if (cxy > 1e-12 * scale) pos = true;
    }
  if (neg && pos) throw Error(ErrorKind::NotApplicable, "oracle_1d", "mixed partial changes sign");
  const bool antitone = pos;

  const Matrix c = cost_matrix(cost, source, target);
  validate_weights(c, source.weights, target.weights);
  std::vector<int> si(static_cast<std::size_t>(source.size())), tj(static_cast<std::size_t>(target.size()));
  std::iota(si.begin(), si.end(), 0);
  std::iota(tj.begin(), tj.end(), 0);
  std::stable_sort(si.begin(), si.end(),
                   [&](int p, int q) { return source.positions(0, p) < source.positions(0, q); });
  std::stable_sort(tj.begin(), tj.end(), [&](int p, int q) {
    return antitone ? target.positions(0, p) > target.positions(0, q)
                    : target.positions(0, p) < target.positions(0, q);
  });

  // North-west corner on the sorted orders; residues below 1e-15 count as
  // exhausted so ties advance both sides together.
  std::vector<Coupling> couplings;
  std::size_t ii = 0, jj = 0;
  double ra = source.weights[si[0]], rb = target.weights[tj[0]];
  while (ii < si.size() && jj < tj.size()) {
    const double mass = std::min(ra, rb);
    if (mass > 0.0) couplings.push_back({si[ii], tj[jj], mass});
    ra -= mass;
    rb -= mass;
    const bool done_i = ra <= 1e-15, done_j = rb <= 1e-15;
    if (done_i && ++ii < si.size()) ra = source.weights[si[ii]];
    if (done_j && ++jj < tj.size()) rb = target.weights[tj[jj]];
    if (!done_i && !done_j) break;
  }

  // Duals along the staircase: it is connected, so one pass fixes every
  // supported atom.
  Vector lambda = Vector::Zero(target.size());
  Vector psi = Vector::Zero(source.size());
  std::vector<char> has_l(static_cast<std::size_t>(target.size()), 0), has_p(static_cast<std::size_t>(source.size()), 0);
  if (!couplings.empty()) {
    has_l[static_cast<std::size_t>(couplings[0].j)] = 1;
    for (const Coupling& k : couplings) {
      if (has_l[static_cast<std::size_t>(k.j)] && !has_p[static_cast<std::size_t>(k.i)]) {
        psi[k.i] = lambda[k.j] - c(k.i, k.j);
        has_p[static_cast<std::size_t>(k.i)] = 1;
      } else if (has_p[static_cast<std::size_t>(k.i)] && !has_l[static_cast<std::size_t>(k.j)]) {
        lambda[k.j] = psi[k.i] + c(k.i, k.j);
        has_l[static_cast<std::size_t>(k.j)] = 1;
      }
    }
  }
  TransportPlan plan = finish_plan(c, source.weights, target.weights, std::move(couplings), std::move(lambda));
  plan.method = SolverMethod::Exact;
  return plan;
}

PlanCheck check_plan(const TransportPlan& plan, const Matrix& cost, const Vector& a, const Vector& b) {
  PlanCheck out;
  Vector rows = Vector::Zero(a.size()), cols = Vector::Zero(b.size());
  for (const Coupling& c : plan.couplings) {
    rows[c.i] += c.mass;
    cols[c.j] += c.mass;
    out.support_slack = std::max(
        out.support_slack, std::abs(plan.target_duals[c.j] - cost(c.i, c.j) - plan.source_duals[c.i]));
  }
  out.row_error = (rows - a).cwiseAbs().maxCoeff();
  out.column_error = (cols - b).cwiseAbs().maxCoeff();
  out.dual_violation = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < cost.rows(); ++i)
    for (Eigen::Index j = 0; j < cost.cols(); ++j)
      if (b[j] > 0.0)
        out.dual_violation =
            std::max(out.dual_violation, plan.target_duals[j] - cost(i, j) - plan.source_duals[i]);
  return out;
}

PotentialField reconstruct_potential(const TransportPlan& plan, const CostModel& cost, const AtomCloud& target,
                                     const Grid& grid, PointRef anchor) {
  if (plan.target_duals.size() != target.size())
    throw Error(ErrorKind::InvalidSpec, "reconstruct_potential", "plan duals do not match the target cloud");
  if (plan.method == SolverMethod::Entropic && plan.epsilon > 1e-3 * cost.scale())
    throw Error(ErrorKind::InvalidParameter, "reconstruct_potential",
                "entropic duals with epsilon above 1e-3 of the cost scale are too coarse");
  return PotentialField::from_atoms(cost, target.positions, plan.target_duals, grid, Point(anchor));
}

SlopeBox slope_box(const PotentialField& u, PointRef x, double step) {
  const int n = u.grid().dim();
  SlopeBox box;
  box.backward.resize(n);
  box.forward.resize(n);
  box.centered.resize(n);
  const double u0 = u(x);
  double max_step = 0.0;
  Point xp = x;
  for (int a = 0; a < n; ++a) {
    const double h = step > 0.0 ? step : u.grid().spacing()[a];
    max_step = std::max(max_step, h);
    xp[a] = x[a] + h;
    const double up = u(xp);
    xp[a] = x[a] - h;
    const double um = u(xp);
    xp[a] = x[a];
    box.forward[a] = (up - u0) / h;
    box.backward[a] = (u0 - um) / h;
    box.centered[a] = (up - um) / (2.0 * h);
  }
  box.max_gap = n > 0 ? (box.forward - box.backward).maxCoeff() : 0.0;
  box.gap_tol = 10.0 * max_step * (1.0 + u.semiconvexity());
  box.single_valued = box.max_gap <= box.gap_tol;
  return box;
}

Point transport_map(const PotentialField& u, PointRef x) {
  const SlopeBox box = slope_box(u, x);
  if (!box.single_valued) {
    std::ostringstream msg;
    msg << "one-sided slopes differ by " << box.max_gap << " > " << box.gap_tol;
    throw Error(ErrorKind::Nondifferentiable, "transport_map", msg.str());
  }
  return c_exp(u.cost(), x, box.centered);
}

ScalarField ma_residual(const PotentialField& u, const CostModel& cost, const DensityFn& f, const DensityFn& g,
                        const CellSet& region, int step_multiplier) {
  const Grid& grid = u.grid();
  ScalarField out{grid, Vector::Zero(grid.cell_count()), CellMask(static_cast<std::size_t>(grid.cell_count()), 0)};
  parallel_for(0, static_cast<std::ptrdiff_t>(region.size()), [&](std::ptrdiff_t k) {
    const CellIndex c = region[static_cast<std::size_t>(k)];
    Matrix h;
    if (!detail::hessian_at(grid, u.values(), c, step_multiplier, h)) return;
    const Point x = grid.center(c);
    Point t;
    try {
      t = transport_map(u, x);
    } catch (const Error&) {
      return;
    }
    const double gt = g(t);
    if (!(gt >= 1e-12)) return;
    CostDerivatives d;
    try {
      d = cost.derivatives(x, t);
    } catch (const Error&) {
      return;
    }
    out.values[c] = (h + d.dxx).determinant() - std::abs(d.dxy.determinant()) * f(x) / gt;
    out.valid[static_cast<std::size_t>(c)] = 1;
  });
  return out;
}

}  // namespace ctlab
