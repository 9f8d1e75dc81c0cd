#pragma once

#include "ctlab/grid.hpp"

#include <limits>
#include <vector>

namespace ctlab::detail {

// Grid-value second differences at a step of m cells.

inline double axis_second_difference(const Grid& grid, const Vector& v, CellIndex idx, int axis, int m,
                                     bool& ok) {
  const CellIndex p = grid.shifted(idx, axis, m);
  const CellIndex q = grid.shifted(idx, axis, -m);
  ok = p >= 0 && q >= 0;
  if (!ok) return 0.0;
  const double t = m * grid.spacing()[axis];
  return (v[p] - 2.0 * v[idx] + v[q]) / (t * t);
}

// Four-point cross stencil for d^2 u / dx_a dx_b.
inline double mixed_second_difference(const Grid& grid, const Vector& v, CellIndex idx, int a, int b, int m,
                                      bool& ok) {
  std::vector<int> off(static_cast<std::size_t>(grid.dim()), 0);
  auto at = [&](int sa, int sb) {
    off[static_cast<std::size_t>(a)] = sa * m;
    off[static_cast<std::size_t>(b)] = sb * m;
    return grid.shifted(idx, off);
  };
  const CellIndex pp = at(1, 1), pm = at(1, -1), mp = at(-1, 1), mm = at(-1, -1);
  ok = pp >= 0 && pm >= 0 && mp >= 0 && mm >= 0;
  if (!ok) return 0.0;
  const double ta = m * grid.spacing()[a], tb = m * grid.spacing()[b];
  return (v[pp] - v[pm] - v[mp] + v[mm]) / (4.0 * ta * tb);
}

// Second-difference quotient along the diagonal e_a + s e_b, divided by the
// squared length of the step vector.
inline double diagonal_second_difference(const Grid& grid, const Vector& v, CellIndex idx, int a, int b, int s,
                                         int m, bool& ok) {
  std::vector<int> off(static_cast<std::size_t>(grid.dim()), 0);
  off[static_cast<std::size_t>(a)] = m;
  off[static_cast<std::size_t>(b)] = s * m;
  const CellIndex p = grid.shifted(idx, off);
  off[static_cast<std::size_t>(a)] = -m;
  off[static_cast<std::size_t>(b)] = -s * m;
  const CellIndex q = grid.shifted(idx, off);
  ok = p >= 0 && q >= 0;
  if (!ok) return 0.0;
  const double ta = m * grid.spacing()[a], tb = m * grid.spacing()[b];
  return (v[p] - 2.0 * v[idx] + v[q]) / (ta * ta + tb * tb);
}

// Symmetric Hessian estimate from axis and cross stencils. False when any
// stencil point leaves the grid.
inline bool hessian_at(const Grid& grid, const Vector& v, CellIndex idx, int m, Matrix& h) {
  const int n = grid.dim();
  h.resize(n, n);
  bool ok = true;
  for (int a = 0; a < n && ok; ++a) {
    h(a, a) = axis_second_difference(grid, v, idx, a, m, ok);
    for (int b = a + 1; b < n && ok; ++b) {
      h(a, b) = h(b, a) = mixed_second_difference(grid, v, idx, a, b, m, ok);
    }
  }
  return ok;
}

// Smallest axis or diagonal second-difference quotient at idx; +inf when no
// stencil fits.
inline double min_second_difference(const Grid& grid, const Vector& v, CellIndex idx, int m) {
  double lo = std::numeric_limits<double>::infinity();
  const int n = grid.dim();
  bool ok = false;
  for (int a = 0; a < n; ++a) {
    const double d = axis_second_difference(grid, v, idx, a, m, ok);
    if (ok) lo = std::min(lo, d);
    for (int b = a + 1; b < n; ++b)
      for (int s : {1, -1}) {
        const double e = diagonal_second_difference(grid, v, idx, a, b, s, m, ok);
        if (ok) lo = std::min(lo, e);
      }
  }
  return lo;
}

}  // namespace ctlab::detail
