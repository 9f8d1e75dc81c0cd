#pragma once

#include "ctlab/cost.hpp"
#include "ctlab/geometry.hpp"
#include "ctlab/potential.hpp"
#include "ctlab/transport.hpp"

#include <optional>
#include <vector>

namespace ctlab {

/// u^c(y) = max over source cells x of (-c(x, y) - u(x)) on target_grid.
/// The field is itself a potential for the transposed cost, with the source
/// cell centres as atoms and lambda = -u.
struct CTransform {
  PotentialField field;
  std::vector<CellIndex> argmax;  // maximizing source cell per target cell
};

CTransform c_transform(const PotentialField& u, const CostModel& cost, const Grid& target_grid);

/// u^c evaluated at arbitrary target points (columns of ys).
Vector c_transform_at(const PotentialField& u, const CostModel& cost, const Matrix& ys);

/// Rebuilds an atom-form potential from lambda'_j = min over grid x of
/// (c(x, y_j) + u(x)). On the grid the result equals u up to round-off.
PotentialField double_transform(const PotentialField& u);

/// Per-axis one-sided quotients; see slope_box.
SlopeBox frechet_subdiff(const PotentialField& u, PointRef x, double step = 0.0);

/// Atoms attaining max_j (-c(x, y_j) + lambda_j) within 1e-9 * max(1, cost scale).
std::vector<int> c_subdiff(const PotentialField& u, PointRef x);

/// A supporting target at x0: the maximizing atom for atom-form potentials,
/// c_exp of the centred gradient otherwise.
Point supporting_target(const PotentialField& u, PointRef x0);

struct Section {
  Point x0;
  Point y0;
  double h = 0.0;
  CellIndex center_cell = -1;
  CellSet cells;
  bool connected = true;
  std::optional<AffineMap> affine;
  double sandwich_ratio = 0.0;
  double norm_size = 0.0;

  double volume(const Grid& grid) const { return static_cast<double>(cells.size()) * grid.cell_volume(); }
};

enum class SectionScan {
  Full,       // every grid cell is tested
  Component,  // flood fill from the centre cell; only its component is kept
};

struct SectionOptions {
  SectionScan scan = SectionScan::Full;
  /// Slack for the c-subdifferential check; negative selects 1e-9 * max(1, scale).
  double subdiff_slack = -1.0;
  bool check_subdiff = true;
};

/// Defining expression E(x) = u(x) + c(x, y0) - c(x0, y0) - u(x0) at a cell.
double section_energy(const PotentialField& u, const CostModel& cost, PointRef x0, PointRef y0, double u_x0,
                      CellIndex cell);

/// S(x0, y0, u, h) = {cells with E <= h + 1e-9}; the cell containing x0 is
/// always included. Throws InvalidSection when y0 is not in the
/// c-subdifferential at x0.
Section section_extract(const PotentialField& u, const CostModel& cost, PointRef x0, PointRef y0, double h,
                        const SectionOptions& options = {});

/// Fills affine, sandwich_ratio and norm_size from john_normalize.
void normalize_section(const Grid& grid, Section& section);

/// max(0, -1/2 min second-difference quotient) at the given step length.
double semiconvexity_constant(const PotentialField& u, double step);

}  // namespace ctlab
