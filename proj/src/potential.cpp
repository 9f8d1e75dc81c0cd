#include "ctlab/potential.hpp"

#include "ctlab/error.hpp"
#include "ctlab/parallel.hpp"
#include "stencil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctlab {

PotentialField PotentialField::from_atoms(CostModel cost, Matrix targets, Vector lambda, Grid grid,
                                          std::optional<Point> anchor) {
  if (targets.cols() != lambda.size() || targets.cols() == 0)
    throw Error(ErrorKind::InvalidSpec, "reconstruct_potential", "atom and dual counts differ or are empty");
  if (targets.rows() != grid.dim() || cost.dim() != grid.dim())
    throw Error(ErrorKind::InvalidSpec, "reconstruct_potential", "dimension mismatch");
  PotentialField u;
  u.form_ = Form::Atoms;
  u.cost_ = std::move(cost);
  u.grid_ = std::move(grid);
  u.targets_ = std::move(targets);
  u.lambda_ = std::move(lambda);
  if (anchor) {
    const double offset = u(*anchor);
    u.lambda_.array() -= offset;
    u.anchor_ = std::move(anchor);
  }
  u.fill_cache();
  return u;
}

PotentialField PotentialField::from_atoms_cached(CostModel cost, Matrix targets, Vector lambda, Grid grid,
                                                 Vector values) {
  if (targets.cols() != lambda.size() || values.size() != grid.cell_count())
    throw Error(ErrorKind::InvalidSpec, "potential", "atom, dual or value counts differ");
  PotentialField u;
  u.form_ = Form::Atoms;
  u.cost_ = std::move(cost);
  u.grid_ = std::move(grid);
  u.targets_ = std::move(targets);
  u.lambda_ = std::move(lambda);
  u.values_ = std::move(values);
  u.semiconvexity_ = semiconvexity_from_values(u.grid_, u.values_, 1);
  return u;
}

PotentialField PotentialField::from_function(CostModel cost, std::function<double(PointRef)> fn, Grid grid) {
  PotentialField u;
  u.form_ = Form::Function;
  u.cost_ = std::move(cost);
  u.grid_ = std::move(grid);
  u.fn_ = std::move(fn);
  u.fill_cache();
  return u;
}

PotentialField PotentialField::from_values(CostModel cost, Grid grid, Vector values) {
  if (values.size() != grid.cell_count())
    throw Error(ErrorKind::InvalidSpec, "potential", "value count does not match the grid");
  PotentialField u;
  u.form_ = Form::Values;
  u.cost_ = std::move(cost);
  u.grid_ = std::move(grid);
  u.values_ = std::move(values);
  u.semiconvexity_ = semiconvexity_from_values(u.grid_, u.values_, 1);
  return u;
}

void PotentialField::fill_cache() {
  values_.resize(grid_.cell_count());
  parallel_for(0, grid_.cell_count(), [&](std::ptrdiff_t c) {
    values_[c] = (*this)(grid_.centers().col(c));
  });
  semiconvexity_ = semiconvexity_from_values(grid_, values_, 1);
}

double PotentialField::operator()(PointRef x) const {
  switch (form_) {
    case Form::Atoms: {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < targets_.cols(); ++j)
        best = std::max(best, lambda_[j] - cost_.value(x, targets_.col(j)));
      return best;
    }
    case Form::Function:
      return fn_(x);
    case Form::Values:
      return interpolate(grid_, values_, x);
  }
  return 0.0;
}

int PotentialField::argmax(PointRef x) const {
  if (form_ != Form::Atoms) throw Error(ErrorKind::NotApplicable, "argmax", "potential has no atoms");
  int best_j = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < targets_.cols(); ++j) {
    const double s = lambda_[j] - cost_.value(x, targets_.col(j));
    if (s > best) {
      best = s;
      best_j = static_cast<int>(j);
    }
  }
  return best_j;
}

double semiconvexity_from_values(const Grid& grid, const Vector& values, int step_multiplier) {
  double lo = std::numeric_limits<double>::infinity();
  for (CellIndex c = 0; c < grid.cell_count(); ++c)
    lo = std::min(lo, detail::min_second_difference(grid, values, c, step_multiplier));
  if (!std::isfinite(lo)) return 0.0;
  return std::max(0.0, -0.5 * lo);
}

double interpolate(const Grid& grid, const Vector& values, PointRef x) {
  const int n = grid.dim();
  std::vector<int> base(static_cast<std::size_t>(n));
  std::vector<double> frac(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const int res = grid.resolution()[static_cast<std::size_t>(a)];
    const double s = (x[a] - grid.box().lo[a]) / grid.spacing()[a] - 0.5;
    if (res == 1) {
      base[static_cast<std::size_t>(a)] = 0;
      frac[static_cast<std::size_t>(a)] = 0.0;
      continue;
    }
    const double clamped = std::clamp(s, 0.0, static_cast<double>(res - 1));
    int k = static_cast<int>(std::floor(clamped));
    if (k >= res - 1) k = res - 2;
    base[static_cast<std::size_t>(a)] = k;
    frac[static_cast<std::size_t>(a)] = clamped - k;
  }
  double sum = 0.0;
  std::vector<int> mi(static_cast<std::size_t>(n));
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      const bool up = (corner >> a) & 1;
      const auto aa = static_cast<std::size_t>(a);
      w *= up ? frac[aa] : 1.0 - frac[aa];
      mi[aa] = base[aa] + (up ? 1 : 0);
    }
    if (w == 0.0) continue;
    sum += w * values[grid.flat_index(mi)];
  }
  return sum;
}

}  // namespace ctlab
