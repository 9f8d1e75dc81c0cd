#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace ctlab {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
using Point = Vector;
using PointRef = Eigen::Ref<const Vector>;

using CellIndex = std::int32_t;
/// Sorted, duplicate-free list of flat grid cell indices.
using CellSet = std::vector<CellIndex>;
/// One byte per grid cell, nonzero = member.
using CellMask = std::vector<std::uint8_t>;

/// Axis-aligned box [lo, hi] in R^n.
struct Box {
  Vector lo;
  Vector hi;

  Box() = default;
  Box(Vector lo_, Vector hi_);

  static Box cube(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(PointRef x, double tol = 0.0) const;
  double diameter() const { return (hi - lo).norm(); }
  Vector center() const { return 0.5 * (lo + hi); }
  double volume() const { return (hi - lo).prod(); }
  Box hull_with(const Box& other) const;
};

CellMask to_mask(const CellSet& cells, std::size_t cell_count);
CellSet to_cells(const CellMask& mask);
bool is_subset(const CellSet& inner, const CellSet& outer);
CellSet set_intersection(const CellSet& a, const CellSet& b);
CellSet set_difference(const CellSet& a, const CellSet& b);

}  // namespace ctlab
