#pragma once

#include "ctlab/error.hpp"
#include "ctlab/grid.hpp"
#include "ctlab/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ctlab {

/// x = A z + t with det A = 1.
struct AffineMap {
  Matrix A;
  Vector t;
  Matrix A_inv;
  double norm_A = 1.0;
  double norm_A_inv = 1.0;

  /// Builds the map from any invertible matrix, rescaled to det 1.
  static AffineMap from_matrix(const Matrix& m, const Vector& t);
  Point apply(PointRef z) const { return A * z + t; }
  Point inverse(PointRef x) const { return A_inv * (x - t); }
};

struct Polytope {
  int dim = 0;            // ambient dimension
  int affine_dim = 0;     // dimension of the hull's affine span
  bool degenerate = false;
  std::vector<int> vertices;            // indices into the input, sorted
  std::vector<std::vector<int>> facets; // vertex indices per facet (dim 2 and 3)
  Matrix normals;                       // outward unit normals, one column per facet
  Vector offsets;                       // normal . x <= offset inside
};

/// Raised when a cell set does not span its ambient dimension.
class DegenerateSetError : public Error {
 public:
  DegenerateSetError(std::string op, const std::string& msg, Polytope hull)
      : Error(ErrorKind::Degenerate, std::move(op), msg), hull_(std::move(hull)) {}
  const Polytope& hull() const { return hull_; }

 private:
  Polytope hull_;
};

/// Convex hull of the columns of `points`, for dimensions 1 to 3.
Polytope convex_hull(const Matrix& points);

/// Signed distance of x outside the full-dimensional hull (<= 0 inside).
double hull_excess(const Polytope& hull, PointRef x);

struct Ellipsoid {
  Point center;
  Matrix shape;  // {x : (x - c)^T shape (x - c) <= 1}
};

/// Khachiyan's minimum-volume enclosing ellipsoid of the columns of points.
Ellipsoid mvee(const Matrix& points, double tol = 1e-6);

struct Normalization {
  AffineMap map;
  Ellipsoid ellipsoid;
  Polytope hull;
  double r_out = 0.0;  // smallest r with cells inside t + A(B_r)
  double r_in = 0.0;   // largest r with t + A(B_r) inside the cells
  double sandwich_ratio = 0.0;
  double norm_size = 0.0;  // ||A^{-1}||^2
};

/// Det-1 normalization of a cell set: A from the enclosing ellipsoid of the
/// hull of cell centres. Both radii include a half-cell-diagonal correction,
/// so r_out bounds every point of the member cells and r_in excludes every
/// point of non-member cells. Throws Degenerate when the cells do not span
/// the full dimension.
Normalization john_normalize(const Grid& grid, const CellSet& cells);

struct EnvelopeResult {
  Vector values;     // on the domain cells, indexed like the grid (NaN outside)
  CellSet contact;   // cells with envelope >= phi - tol
  double tol = 0.0;
};

/// Largest convex minorant of phi over a convex cell domain, from the lower
/// hull of the lifted points. Dimensions 1 and 2.
EnvelopeResult convex_envelope(const Grid& grid, const Vector& phi, const CellSet& domain);

struct CoverCandidate {
  CellIndex center_cell = -1;
  double h = 0.0;
};

/// Cells of candidate i's section at the given height.
using SectionProvider = std::function<CellSet(int candidate, double height)>;

struct CoverReport {
  std::vector<int> selected;
  double sigma = 0.0;
  double c_prime = 0.0;
  bool disjoint_ok = false;
  bool cover_ok = false;
  std::vector<int> uncovered;
};

/// Greedy Vitali selection by decreasing h (stable on ties): a candidate is
/// kept when its section at sigma * h misses every kept shrunk section. The
/// report re-checks disjointness and that each candidate centre lies in some
/// kept section at height c_prime * h.
CoverReport vitali_cover(const std::vector<CoverCandidate>& candidates, const SectionProvider& sections,
                         double sigma, double c_prime, CellIndex cell_count);

}  // namespace ctlab
