#pragma once

#include "ctlab/cost.hpp"
#include "ctlab/grid.hpp"

#include <functional>
#include <optional>

namespace ctlab {

/// A potential u with values cached on an evaluation grid.
///
/// Three representations share the interface:
///  - atoms: u(x) = max_j (-c(x, y_j) + lambda_j), c-convex by construction;
///  - function: an analytic callable, exact off the grid;
///  - values: grid samples only, multilinear interpolation in between.
class PotentialField {
 public:
  enum class Form { Atoms, Function, Values };

  /// Builds the atom form. With an anchor, lambda is shifted so that u(anchor) = 0.
  static PotentialField from_atoms(CostModel cost, Matrix targets, Vector lambda, Grid grid,
                                   std::optional<Point> anchor = std::nullopt);
  /// Atom form with grid values already computed by the caller.
  static PotentialField from_atoms_cached(CostModel cost, Matrix targets, Vector lambda, Grid grid, Vector values);
  static PotentialField from_function(CostModel cost, std::function<double(PointRef)> fn, Grid grid);
  static PotentialField from_values(CostModel cost, Grid grid, Vector values);

  Form form() const { return form_; }
  bool has_atoms() const { return form_ == Form::Atoms; }
  const CostModel& cost() const { return cost_; }
  const Grid& grid() const { return grid_; }
  /// Cached u at every cell centre.
  const Vector& values() const { return values_; }
  double value(CellIndex idx) const { return values_[idx]; }

  /// Target atoms (dim x count) and their duals; empty unless has_atoms().
  const Matrix& targets() const { return targets_; }
  const Vector& lambda() const { return lambda_; }
  const std::optional<Point>& anchor() const { return anchor_; }

  /// u at an arbitrary point.
  double operator()(PointRef x) const;
  /// Index of the maximizing atom at x (lowest index on ties); atom form only.
  int argmax(PointRef x) const;

  /// Semiconvexity constant measured from the grid values at a one-cell step.
  double semiconvexity() const { return semiconvexity_; }

 private:
  PotentialField() = default;
  void fill_cache();

  Form form_ = Form::Values;
  CostModel cost_;
  Grid grid_;
  Vector values_;
  Matrix targets_;
  Vector lambda_;
  std::optional<Point> anchor_;
  std::function<double(PointRef)> fn_;
  double semiconvexity_ = 0.0;
};

/// max(0, -1/2 min second-difference quotient) over interior cells, axis and
/// diagonal directions, at a step of `step_multiplier` cells.
double semiconvexity_from_values(const Grid& grid, const Vector& values, int step_multiplier);

/// Multilinear interpolation of cell-centre values, clamped to the outermost centres.
double interpolate(const Grid& grid, const Vector& values, PointRef x);

}  // namespace ctlab
