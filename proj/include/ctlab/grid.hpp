#pragma once

#include "ctlab/types.hpp"

#include <array>
#include <vector>

namespace ctlab {

/// Regular cell-centred lattice over a box. Cell k along axis a has centre
/// lo_a + (k + 1/2) * spacing_a; flat indices run with axis 0 fastest.
class Grid {
 public:
  Grid() = default;
  Grid(Box box, std::vector<int> resolution);
  Grid(Box box, int resolution);

  /// Grid whose cell centres are exactly the nodes lo, lo + h, ..., hi.
  static Grid nodal(const Box& nodes, int nodes_per_axis);

  int dim() const { return static_cast<int>(res_.size()); }
  const Box& box() const { return box_; }
  const std::vector<int>& resolution() const { return res_; }
  const Vector& spacing() const { return spacing_; }
  double max_spacing() const { return spacing_.maxCoeff(); }
  double cell_volume() const { return spacing_.prod(); }
  CellIndex cell_count() const { return count_; }

  Point center(CellIndex idx) const;
  /// dim x cell_count matrix of all cell centres.
  const Matrix& centers() const { return centers_; }

  std::vector<int> multi_index(CellIndex idx) const;
  CellIndex flat_index(const std::vector<int>& mi) const;
  /// Shifts idx by offset cells along axis; -1 when that leaves the grid.
  CellIndex shifted(CellIndex idx, int axis, int offset) const;
  /// Shifts idx by an integer vector of cell offsets; -1 outside.
  CellIndex shifted(CellIndex idx, const std::vector<int>& offsets) const;
  /// Cell containing x, or -1 when x is outside the box.
  CellIndex locate(PointRef x) const;
  /// Nearest cell to x, clamping to the box.
  CellIndex nearest(PointRef x) const;
  /// Number of cells between idx and the nearest grid face (0 on the rim).
  int margin(CellIndex idx) const;

  bool operator==(const Grid& other) const;

 private:
  Box box_;
  std::vector<int> res_;
  std::vector<CellIndex> stride_;
  Vector spacing_;
  CellIndex count_ = 0;
  Matrix centers_;
};

/// Per-cell scalar values with a validity mask.
struct ScalarField {
  Grid grid;
  Vector values;
  CellMask valid;
};

/// Cells of grid whose centres satisfy |x - center| <= radius.
CellSet ball_cells(const Grid& grid, PointRef center, double radius);
/// All cells reachable from cells by at most `layers` 2n-neighbour steps.
CellSet dilate(const Grid& grid, const CellSet& cells, int layers);
/// Members with at least one 2n-neighbour outside the set or the grid.
CellSet boundary_cells(const Grid& grid, const CellSet& cells);

}  // namespace ctlab
