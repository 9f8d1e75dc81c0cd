#pragma once

#include "ctlab/cost.hpp"
#include "ctlab/density.hpp"
#include "ctlab/grid.hpp"
#include "ctlab/network_simplex.hpp"
#include "ctlab/potential.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ctlab {

enum class SolverMethod { Exact, Entropic };

std::string to_string(SolverMethod method);
SolverMethod solver_method_from_string(const std::string& name);

struct SolverOptions {
  SolverMethod method = SolverMethod::Exact;
  double epsilon = 1e-3;  // entropic regularization, in cost units
  int max_iter = 20000;
  double tol = 1e-9;      // entropic marginal tolerance
  bool center_duals = true;
};

/// Optimal coupling with duals. u(x_i) = source_duals[i] = max_j (lambda_j - c(x_i, y_j)).
struct TransportPlan {
  std::vector<Coupling> couplings;
  Vector source_duals;  // psi_i
  Vector target_duals;  // lambda_j
  double objective = 0.0;
  double gap = 0.0;     // primal minus dual objective
  SolverMethod method = SolverMethod::Exact;
  double epsilon = 0.0;
  long iterations = 0;
};

/// Dense cost matrix c(x_i, y_j).
Matrix cost_matrix(const CostModel& cost, const AtomCloud& source, const AtomCloud& target);

TransportPlan solve_discrete(const CostModel& cost, const AtomCloud& source, const AtomCloud& target,
                             const SolverOptions& options = {});
/// Same solve on an explicit cost matrix.
TransportPlan solve_matrix(const Matrix& cost, const Vector& source_weights, const Vector& target_weights,
                           const SolverOptions& options = {});

/// Monotone (or antitone) rearrangement in one dimension.
TransportPlan oracle_1d(const CostModel& cost, const AtomCloud& source, const AtomCloud& target);

/// Worst violations of the plan invariants.
struct PlanCheck {
  double row_error = 0.0;
  double column_error = 0.0;
  double dual_violation = 0.0;   // max (lambda_j - c_ij - u_i), should be <= 0
  double support_slack = 0.0;    // max |lambda_j - c_ij - u_i| on the support
};
PlanCheck check_plan(const TransportPlan& plan, const Matrix& cost, const Vector& source_weights,
                     const Vector& target_weights);

/// u(x) = max_j (-c(x, y_j) + lambda_j) - (same at anchor), cached on grid.
PotentialField reconstruct_potential(const TransportPlan& plan, const CostModel& cost, const AtomCloud& target,
                                     const Grid& grid, PointRef anchor);

/// One-sided and centred difference quotients of u at x.
struct SlopeBox {
  Vector backward;
  Vector forward;
  Vector centered;
  double max_gap = 0.0;
  double gap_tol = 0.0;
  bool single_valued = true;
};
/// Per-axis difference quotients at step (default: the grid spacing per axis).
/// Single-valued when every forward - backward gap is at most
/// 10 * step * (1 + K), K the semiconvexity constant of u.
SlopeBox slope_box(const PotentialField& u, PointRef x, double step = 0.0);

/// T_u(x) = c_exp(x, grad u(x)). Throws Nondifferentiable at a kink.
Point transport_map(const PotentialField& u, PointRef x);

using DensityFn = std::function<double(PointRef)>;

/// Per-cell det(D^2 u + D_xx c(x, T)) - |det D_xy c(x, T)| f(x) / g(T) on
/// region, Hessian at a step of step_multiplier cells. Cells with kinks,
/// missing stencils or g(T) < 1e-12 are masked out.
ScalarField ma_residual(const PotentialField& u, const CostModel& cost, const DensityFn& f, const DensityFn& g,
                        const CellSet& region, int step_multiplier = 1);

}  // namespace ctlab
