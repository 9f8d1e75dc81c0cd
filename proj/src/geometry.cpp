#include "ctlab/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace ctlab {

namespace {

double largest_singular_value(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double cross2(const Vector& o, const Vector& a, const Vector& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew's monotone chain on 2D points; returns hull vertex indices in
// counter-clockwise order without collinear points.
std::vector<int> monotone_chain(const Matrix& pts, double eps) {
  const int k = static_cast<int>(pts.cols());
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pts(0, a) != pts(0, b)) return pts(0, a) < pts(0, b);
    if (pts(1, a) != pts(1, b)) return pts(1, a) < pts(1, b);
    return a < b;
  });
  order.erase(std::unique(order.begin(), order.end(),
                          [&](int a, int b) { return pts(0, a) == pts(0, b) && pts(1, a) == pts(1, b); }),
              order.end());
  if (order.size() < 3) return order;
  std::vector<int> hull(2 * order.size());
  std::size_t h = 0;
  auto turn = [&](int o, int a, int b) { return cross2(pts.col(o), pts.col(a), pts.col(b)); };
  for (int idx : order) {
    while (h >= 2 && turn(hull[h - 2], hull[h - 1], idx) <= eps) --h;
    hull[h++] = idx;
  }
  const std::size_t lower = h + 1;
  for (auto it = order.rbegin() + 1; it != order.rend(); ++it) {
    while (h >= lower && turn(hull[h - 2], hull[h - 1], *it) <= eps) --h;
    hull[h++] = *it;
  }
  hull.resize(h - 1);
  return hull;
}

// ---------------------------------------------------------------------------
// Quickhull in three dimensions.

using V3 = Eigen::Vector3d;

struct Face {
  std::array<int, 3> v{};
  std::array<int, 3> adj{};  // adj[k] lies across edge (v[k], v[k+1])
  V3 n = V3::Zero();
  double d = 0.0;
  std::vector<int> outside;
  bool alive = true;
};

class QuickHull {
 public:
  QuickHull(std::vector<V3> pts, double eps) : p_(std::move(pts)), eps_(eps) {}

  // False when the points are coplanar (no initial tetrahedron).
  bool build() {
    if (!initial_simplex()) return false;
    std::vector<int> stack;
    for (int f = 0; f < 4; ++f)
      if (!faces_[static_cast<std::size_t>(f)].outside.empty()) stack.push_back(f);
    std::vector<int> stamp;
    int round = 0;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      Face& face = faces_[static_cast<std::size_t>(f)];
      if (!face.alive || face.outside.empty()) continue;
      int apex = face.outside.front();
      double far = -1.0;
      for (int q : face.outside) {
        const double dq = dist(face, q);
        if (dq > far) {
          far = dq;
          apex = q;
        }
      }
      ++round;
      stamp.resize(faces_.size(), 0);
      std::vector<int> visible{f};
      stamp[static_cast<std::size_t>(f)] = round;
      for (std::size_t k = 0; k < visible.size(); ++k) {
        const Face& vf = faces_[static_cast<std::size_t>(visible[k])];
        for (int nb : vf.adj) {
          if (stamp[static_cast<std::size_t>(nb)] == round || stamp[static_cast<std::size_t>(nb)] == -round) continue;
          if (dist(faces_[static_cast<std::size_t>(nb)], apex) > eps_) {
            stamp[static_cast<std::size_t>(nb)] = round;
            visible.push_back(nb);
          } else {
            stamp[static_cast<std::size_t>(nb)] = -round;
          }
        }
      }
      struct Horizon {
        int a, b, outer;
      };
      std::vector<Horizon> horizon;
      std::vector<int> orphans;
      for (int vf_idx : visible) {
        Face& vf = faces_[static_cast<std::size_t>(vf_idx)];
        for (int k = 0; k < 3; ++k) {
          const int nb = vf.adj[static_cast<std::size_t>(k)];
          if (stamp[static_cast<std::size_t>(nb)] != round)
            horizon.push_back({vf.v[static_cast<std::size_t>(k)], vf.v[static_cast<std::size_t>((k + 1) % 3)], nb});
        }
        for (int q : vf.outside)
          if (q != apex) orphans.push_back(q);
        vf.outside.clear();
        vf.alive = false;
      }
      std::unordered_map<int, int> by_start, by_end;
      const int first_new = static_cast<int>(faces_.size());
      for (const Horizon& e : horizon) {
        const int idx = static_cast<int>(faces_.size());
        faces_.push_back(make_face(e.a, e.b, apex));
        faces_.back().adj[0] = e.outer;
        by_start[e.a] = idx;
        by_end[e.b] = idx;
        Face& outer = faces_[static_cast<std::size_t>(e.outer)];
        for (int k = 0; k < 3; ++k)
          if (outer.v[static_cast<std::size_t>(k)] == e.b && outer.v[static_cast<std::size_t>((k + 1) % 3)] == e.a)
            outer.adj[static_cast<std::size_t>(k)] = idx;
      }
      for (int idx = first_new; idx < static_cast<int>(faces_.size()); ++idx) {
        Face& nf = faces_[static_cast<std::size_t>(idx)];
        nf.adj[1] = by_start.at(nf.v[1]);  // edge (b, apex)
        nf.adj[2] = by_end.at(nf.v[0]);    // edge (apex, a)
      }
      std::sort(orphans.begin(), orphans.end());
      for (int q : orphans) {
        for (int idx = first_new; idx < static_cast<int>(faces_.size()); ++idx) {
          Face& nf = faces_[static_cast<std::size_t>(idx)];
          if (dist(nf, q) > eps_) {
            nf.outside.push_back(q);
            break;
          }
        }
      }
      for (int idx = static_cast<int>(faces_.size()) - 1; idx >= first_new; --idx)
        if (!faces_[static_cast<std::size_t>(idx)].outside.empty()) stack.push_back(idx);
    }
    return true;
  }

  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<int>& simplex() const { return simplex_; }

 private:
  double dist(const Face& f, int q) const { return f.n.dot(p_[static_cast<std::size_t>(q)]) - f.d; }

  Face make_face(int a, int b, int c) const {
    Face f;
    f.v = {a, b, c};
    const V3& pa = p_[static_cast<std::size_t>(a)];
    V3 n = (p_[static_cast<std::size_t>(b)] - pa).cross(p_[static_cast<std::size_t>(c)] - pa);
    const double len = n.norm();
    if (len > 0.0) n /= len;
    f.n = n;
    f.d = n.dot(pa);
    return f;
  }

  bool initial_simplex() {
    const int k = static_cast<int>(p_.size());
    if (k < 4) return false;
    int i0 = 0, i1 = 0;
    double best_extent = -1.0;
    for (int axis = 0; axis < 3; ++axis) {
      int lo = 0, hi = 0;
      for (int q = 1; q < k; ++q) {
        if (p_[static_cast<std::size_t>(q)][axis] < p_[static_cast<std::size_t>(lo)][axis]) lo = q;
        if (p_[static_cast<std::size_t>(q)][axis] > p_[static_cast<std::size_t>(hi)][axis]) hi = q;
      }
      const double ext = p_[static_cast<std::size_t>(hi)][axis] - p_[static_cast<std::size_t>(lo)][axis];
      if (ext > best_extent) {
        best_extent = ext;
        i0 = lo;
        i1 = hi;
      }
    }
    if (best_extent <= eps_) return false;
    const V3 a = p_[static_cast<std::size_t>(i0)];
    const V3 dir = (p_[static_cast<std::size_t>(i1)] - a).normalized();
    int i2 = -1;
    double far = eps_;
    for (int q = 0; q < k; ++q) {
      const V3 w = p_[static_cast<std::size_t>(q)] - a;
      const double d = (w - w.dot(dir) * dir).norm();
      if (d > far) {
        far = d;
        i2 = q;
      }
    }
    if (i2 < 0) return false;
    const V3 n = (p_[static_cast<std::size_t>(i1)] - a).cross(p_[static_cast<std::size_t>(i2)] - a).normalized();
    int i3 = -1;
    far = eps_;
    for (int q = 0; q < k; ++q) {
      const double d = std::abs(n.dot(p_[static_cast<std::size_t>(q)] - a));
      if (d > far) {
        far = d;
        i3 = q;
      }
    }
    if (i3 < 0) return false;
    simplex_ = {i0, i1, i2, i3};
    const V3 centroid = (p_[static_cast<std::size_t>(i0)] + p_[static_cast<std::size_t>(i1)] +
                         p_[static_cast<std::size_t>(i2)] + p_[static_cast<std::size_t>(i3)]) /
                        4.0;
    const std::array<std::array<int, 3>, 4> tri{{{i0, i1, i2}, {i0, i3, i1}, {i1, i3, i2}, {i2, i3, i0}}};
    for (const auto& t : tri) {
      Face f = make_face(t[0], t[1], t[2]);
      if (f.n.dot(centroid) - f.d > 0.0) f = make_face(t[0], t[2], t[1]);
      faces_.push_back(f);
    }
    // Adjacency by matching reversed directed edges.
    for (int f = 0; f < 4; ++f)
      for (int e = 0; e < 3; ++e) {
        const int a0 = faces_[static_cast<std::size_t>(f)].v[static_cast<std::size_t>(e)];
        const int b0 = faces_[static_cast<std::size_t>(f)].v[static_cast<std::size_t>((e + 1) % 3)];
        for (int g = 0; g < 4; ++g)
          for (int e2 = 0; e2 < 3; ++e2)
            if (faces_[static_cast<std::size_t>(g)].v[static_cast<std::size_t>(e2)] == b0 &&
                faces_[static_cast<std::size_t>(g)].v[static_cast<std::size_t>((e2 + 1) % 3)] == a0)
              faces_[static_cast<std::size_t>(f)].adj[static_cast<std::size_t>(e)] = g;
      }
    for (int q = 0; q < k; ++q) {
      if (q == i0 || q == i1 || q == i2 || q == i3) continue;
      for (Face& f : faces_)
        if (dist(f, q) > eps_) {
          f.outside.push_back(q);
          break;
        }
    }
    return true;
  }

  std::vector<V3> p_;
  double eps_;
  std::vector<Face> faces_;
  std::vector<int> simplex_;
};

// Points rescaled to the unit cube so that one absolute tolerance fits.
struct Normalized3 {
  std::vector<V3> pts;
  V3 shift;
  V3 scale;
};

Normalized3 normalize3(const Matrix& points) {
  Normalized3 out;
  out.shift = points.rowwise().minCoeff();
  out.scale = (points.rowwise().maxCoeff() - points.rowwise().minCoeff()).cwiseMax(1e-300);
  out.pts.reserve(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index c = 0; c < points.cols(); ++c)
    out.pts.push_back(((points.col(c) - out.shift).array() / out.scale.array()).matrix());
  return out;
}

Polytope hull_1d(const Matrix& points) {
  Polytope p;
  p.dim = 1;
  Eigen::Index lo = 0, hi = 0;
  points.row(0).minCoeff(&lo);
  points.row(0).maxCoeff(&hi);
  if (points(0, lo) == points(0, hi)) {
    p.vertices = {static_cast<int>(lo)};
    p.affine_dim = 0;
    p.degenerate = true;
    return p;
  }
  p.vertices = {static_cast<int>(std::min(lo, hi)), static_cast<int>(std::max(lo, hi))};
  p.affine_dim = 1;
  p.facets = {{static_cast<int>(lo)}, {static_cast<int>(hi)}};
  p.normals.resize(1, 2);
  p.normals << -1.0, 1.0;
  p.offsets.resize(2);
  p.offsets << -points(0, lo), points(0, hi);
  return p;
}

Polytope hull_2d(const Matrix& points) {
  Polytope p;
  p.dim = 2;
  const double ext = (points.rowwise().maxCoeff() - points.rowwise().minCoeff()).maxCoeff();
  const double eps = 1e-12 * std::max(ext * ext, 1e-300);
  std::vector<int> ring = monotone_chain(points, eps);
  if (ring.size() < 3) {
    p.degenerate = true;
    p.affine_dim = ring.size() <= 1 ? 0 : 1;
    if (ring.size() == 2) {
      // Collinear input: keep the two extremes along the line.
      const Vector dir = points.col(ring[1]) - points.col(ring[0]);
      Eigen::Index lo = 0, hi = 0;
      const Eigen::RowVectorXd proj = dir.transpose() * points;
      proj.minCoeff(&lo);
      proj.maxCoeff(&hi);
      ring = {static_cast<int>(lo), static_cast<int>(hi)};
    }
    p.vertices = ring;
    std::sort(p.vertices.begin(), p.vertices.end());
    return p;
  }
  p.affine_dim = 2;
  const auto f = static_cast<Eigen::Index>(ring.size());
  p.normals.resize(2, f);
  p.offsets.resize(f);
  for (Eigen::Index k = 0; k < f; ++k) {
    const int a = ring[static_cast<std::size_t>(k)];
    const int b = ring[static_cast<std::size_t>((k + 1) % f)];
    p.facets.push_back({a, b});
    const Vector e = points.col(b) - points.col(a);
    Vector n(2);
    n << e[1], -e[0];
    n.normalize();
    p.normals.col(k) = n;
    p.offsets[k] = n.dot(points.col(a));
  }
  p.vertices = ring;
  std::sort(p.vertices.begin(), p.vertices.end());
  return p;
}

Polytope hull_3d(const Matrix& points) {
  const Normalized3 np = normalize3(points);
  QuickHull qh(np.pts, 1e-12);
  Polytope p;
  p.dim = 3;
  if (!qh.build()) {
    // Coplanar: hull within the best-fit plane.
    const Vector mean = points.rowwise().mean();
    const Matrix centered = points.colwise() - mean;
    Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeFullU);
    const Matrix basis = svd.matrixU().leftCols(2);
    const Polytope flat = hull_2d(basis.transpose() * centered);
    p.degenerate = true;
    p.affine_dim = flat.affine_dim;
    p.vertices = flat.vertices;
    return p;
  }
  std::vector<int> verts;
  for (const Face& f : qh.faces())
    if (f.alive) {
      p.facets.push_back({f.v[0], f.v[1], f.v[2]});
      verts.insert(verts.end(), f.v.begin(), f.v.end());
    }
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  p.vertices = verts;
  p.affine_dim = 3;
  const auto nf = static_cast<Eigen::Index>(p.facets.size());
  p.normals.resize(3, nf);
  p.offsets.resize(nf);
  for (Eigen::Index k = 0; k < nf; ++k) {
    const auto& t = p.facets[static_cast<std::size_t>(k)];
    const V3 a = points.col(t[0]), b = points.col(t[1]), c = points.col(t[2]);
    V3 n = (b - a).cross(c - a);
    n.normalize();
    p.normals.col(k) = n;
    p.offsets[k] = n.dot(a);
  }
  return p;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

AffineMap AffineMap::from_matrix(const Matrix& m, const Vector& t) {
  const int n = static_cast<int>(m.rows());
  const double det = m.determinant();
  if (!(det > 0.0) || !std::isfinite(det))
    throw Error(ErrorKind::Degenerate, "affine_map", "matrix must have positive determinant");
  AffineMap map;
  map.A = m / std::pow(det, 1.0 / n);
  map.t = t;
  map.A_inv = map.A.inverse();
  map.norm_A = largest_singular_value(map.A);
  map.norm_A_inv = largest_singular_value(map.A_inv);
  return map;
}

Polytope convex_hull(const Matrix& points) {
  if (points.cols() == 0) throw Error(ErrorKind::Degenerate, "convex_hull", "no points");
  switch (points.rows()) {
    case 1: return hull_1d(points);
    case 2: return hull_2d(points);
    case 3: return hull_3d(points);
    default: throw Error(ErrorKind::NotApplicable, "convex_hull", "dimensions 1 to 3 only");
  }
}

double hull_excess(const Polytope& hull, PointRef x) {
  if (hull.degenerate || hull.offsets.size() == 0) return std::numeric_limits<double>::infinity();
  return ((hull.normals.transpose() * x) - hull.offsets).maxCoeff();
}

Ellipsoid mvee(const Matrix& points, double tol) {
  const int d = static_cast<int>(points.rows());
  const Eigen::Index k = points.cols();
  if (k < d + 1) throw Error(ErrorKind::Degenerate, "mvee", "need at least dim + 1 points");
  Matrix q(d + 1, k);
  q.topRows(d) = points;
  q.row(d).setOnes();
  Vector u = Vector::Constant(k, 1.0 / static_cast<double>(k));
  const double target = d + 1.0;
  // Khachiyan's coordinate ascent with Wolfe-Atwood away steps.
  for (int it = 0; it < 100000; ++it) {
    const Matrix x = q * u.asDiagonal() * q.transpose();
    const Matrix xinv = x.inverse();
    const Vector m = (q.array() * (xinv * q).array()).colwise().sum().transpose();
    Eigen::Index j = 0;
    const double mj = m.maxCoeff(&j);
    Eigen::Index l = -1;
    double ml = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i)
      if (u[i] > 0.0 && m[i] < ml) {
        ml = m[i];
        l = i;
      }
    if (mj <= target * (1.0 + tol) && ml >= target * (1.0 - tol)) break;
    if (mj - target >= target - ml) {
      const double step = (mj - target) / (target * (mj - 1.0));
      u *= 1.0 - step;
      u[j] += step;
    } else {
      const double step = std::max(-u[l] / (1.0 - u[l]), (ml - target) / (target * (ml - 1.0)));
      u *= 1.0 - step;
      u[l] += step;
      if (u[l] < 0.0) u[l] = 0.0;
    }
  }
  Ellipsoid e;
  e.center = points * u;
  const Matrix cov = points * u.asDiagonal() * points.transpose() - e.center * e.center.transpose();
  e.shape = cov.inverse() / d;
  // Rescale so that every point lies inside (Khachiyan stops at a slightly
  // small ellipsoid).
  double worst = 0.0;
  for (Eigen::Index c = 0; c < k; ++c) {
    const Vector w = points.col(c) - e.center;
    worst = std::max(worst, w.dot(e.shape * w));
  }
  if (worst > 1.0) e.shape /= worst;
  return e;
}

Normalization john_normalize(const Grid& grid, const CellSet& cells) {
  const int n = grid.dim();
  Matrix pts(n, static_cast<Eigen::Index>(cells.size()));
  for (std::size_t k = 0; k < cells.size(); ++k) pts.col(static_cast<Eigen::Index>(k)) = grid.centers().col(cells[k]);
  if (static_cast<int>(cells.size()) < n + 1) {
    Polytope hull = cells.empty() ? Polytope{} : convex_hull(pts);
    throw DegenerateSetError("john_normalize", "section has fewer than dim + 1 cells", std::move(hull));
  }
  Normalization out;
  out.hull = convex_hull(pts);
  if (out.hull.degenerate || out.hull.affine_dim < n)
    throw DegenerateSetError("john_normalize", "section does not span the full dimension", out.hull);
  Matrix verts(n, static_cast<Eigen::Index>(out.hull.vertices.size()));
  for (std::size_t k = 0; k < out.hull.vertices.size(); ++k)
    verts.col(static_cast<Eigen::Index>(k)) = pts.col(out.hull.vertices[k]);
  out.ellipsoid = mvee(verts, 1e-6);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.ellipsoid.shape);
  const Matrix l = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                   eig.eigenvectors().transpose();
  out.map = AffineMap::from_matrix(l, out.ellipsoid.center);

  const double half_diag = 0.5 * grid.spacing().norm();
  const double slack = out.map.norm_A_inv * half_diag;
  double far = 0.0;
  for (CellIndex c : cells) far = std::max(far, (out.map.A_inv * (grid.centers().col(c) - out.map.t)).norm());
  out.r_out = far + slack;

  // Nearest non-member among the 3^n neighbours of members, counting virtual
  // cells beyond the grid as non-members.
  const CellMask member = to_mask(cells, static_cast<std::size_t>(grid.cell_count()));
  int stencil = 1;
  for (int a = 0; a < n; ++a) stencil *= 3;
  double near = std::numeric_limits<double>::infinity();
  std::vector<int> off(static_cast<std::size_t>(n));
  for (CellIndex c : cells) {
    for (int s = 0; s < stencil; ++s) {
      int rem = s;
      bool zero = true;
      for (int a = 0; a < n; ++a) {
        off[static_cast<std::size_t>(a)] = rem % 3 - 1;
        rem /= 3;
        zero = zero && off[static_cast<std::size_t>(a)] == 0;
      }
      if (zero) continue;
      const CellIndex nb = grid.shifted(c, off);
      if (nb >= 0 && member[static_cast<std::size_t>(nb)]) continue;
      Point x = grid.centers().col(c);
      for (int a = 0; a < n; ++a) x[a] += off[static_cast<std::size_t>(a)] * grid.spacing()[a];
      near = std::min(near, (out.map.A_inv * (x - out.map.t)).norm());
    }
  }
  out.r_in = std::max(0.0, near - slack);
  out.sandwich_ratio = out.r_in > 0.0 ? out.r_out / out.r_in : std::numeric_limits<double>::infinity();
  out.norm_size = out.map.norm_A_inv * out.map.norm_A_inv;
  return out;
}

EnvelopeResult convex_envelope(const Grid& grid, const Vector& phi, const CellSet& domain) {
  const int n = grid.dim();
  if (n > 2) throw Error(ErrorKind::NotApplicable, "convex_envelope", "dimensions 1 and 2 only");
  if (static_cast<int>(domain.size()) < n + 2)
    throw Error(ErrorKind::Degenerate, "convex_envelope", "fewer than dim + 2 cells");
  EnvelopeResult out;
  out.values = Vector::Constant(grid.cell_count(), std::numeric_limits<double>::quiet_NaN());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (CellIndex c : domain) {
    lo = std::min(lo, phi[c]);
    hi = std::max(hi, phi[c]);
  }
  const double range = hi - lo;
  double interp_err = 0.0;

  if (n == 1) {
    std::vector<CellIndex> cells = domain;
    std::sort(cells.begin(), cells.end(),
              [&](CellIndex a, CellIndex b) { return grid.centers()(0, a) < grid.centers()(0, b); });
    auto x = [&](CellIndex c) { return grid.centers()(0, c); };
    std::vector<CellIndex> chain;
    for (CellIndex c : cells) {
      while (chain.size() >= 2) {
        const CellIndex o = chain[chain.size() - 2], a = chain.back();
        const double turn = (x(a) - x(o)) * (phi[c] - phi[o]) - (phi[a] - phi[o]) * (x(c) - x(o));
        if (turn <= 0.0)
          chain.pop_back();
        else
          break;
      }
      chain.push_back(c);
    }
    std::size_t seg = 0;
    for (CellIndex c : cells) {
      while (seg + 2 < chain.size() && x(chain[seg + 1]) < x(c)) ++seg;
      const CellIndex a = chain[seg], b = chain[std::min(seg + 1, chain.size() - 1)];
      double v;
      if (a == b || x(a) == x(b)) {
        v = phi[a];
      } else {
        const double w = (x(c) - x(a)) / (x(b) - x(a));
        v = (1.0 - w) * phi[a] + w * phi[b];
      }
      out.values[c] = std::min(v, phi[c]);
    }
  } else {
    // Lift with a tiny deterministic height perturbation so that no four
    // lifted points are coplanar except on vertical boundary planes.
    const double bump = 1e-11 * std::max(range, 1e-300);
    Matrix lifted(3, static_cast<Eigen::Index>(domain.size()));
    for (std::size_t k = 0; k < domain.size(); ++k) {
      const CellIndex c = domain[k];
      const double r = static_cast<double>(splitmix64(static_cast<std::uint64_t>(c)) >> 11) * 0x1.0p-53;
      lifted.col(static_cast<Eigen::Index>(k)) << grid.centers()(0, c), grid.centers()(1, c),
          phi[c] + bump * (2.0 * r - 1.0);
    }
    const Normalized3 np = normalize3(lifted);
    QuickHull qh(np.pts, 1e-13);
    const CellMask in_domain = to_mask(domain, static_cast<std::size_t>(grid.cell_count()));
    if (!qh.build()) {
      // Lifted points coplanar: phi is affine on the domain.
      for (CellIndex c : domain) out.values[c] = phi[c];
    } else {
      Vector best = Vector::Constant(grid.cell_count(), -std::numeric_limits<double>::infinity());
      struct Plane {
        double a, b, c;  // z = a x + b y + c
      };
      std::vector<Plane> planes;
      for (const Face& f : qh.faces()) {
        if (!f.alive || f.n[2] > -1e-9) continue;
        std::array<Eigen::Vector3d, 3> v;
        for (int k = 0; k < 3; ++k) v[static_cast<std::size_t>(k)] = lifted.col(f.v[static_cast<std::size_t>(k)]);
        const Eigen::Vector3d nrm = (v[1] - v[0]).cross(v[2] - v[0]);
        if (std::abs(nrm[2]) < 1e-300) continue;
        const Plane pl{-nrm[0] / nrm[2], -nrm[1] / nrm[2],
                       (nrm[0] * v[0][0] + nrm[1] * v[0][1] + nrm[2] * v[0][2]) / nrm[2]};
        planes.push_back(pl);
        for (int k = 0; k < 3; ++k) {
          const CellIndex vc = domain[static_cast<std::size_t>(f.v[static_cast<std::size_t>(k)])];
          interp_err = std::max(interp_err, std::abs(pl.a * v[static_cast<std::size_t>(k)][0] +
                                                     pl.b * v[static_cast<std::size_t>(k)][1] + pl.c - phi[vc]));
        }
        // Rasterize the projected triangle over its index bounding box.
        std::array<std::vector<int>, 3> mi;
        for (int k = 0; k < 3; ++k)
          mi[static_cast<std::size_t>(k)] =
              grid.multi_index(domain[static_cast<std::size_t>(f.v[static_cast<std::size_t>(k)])]);
        const int i_lo = std::min({mi[0][0], mi[1][0], mi[2][0]}), i_hi = std::max({mi[0][0], mi[1][0], mi[2][0]});
        const int j_lo = std::min({mi[0][1], mi[1][1], mi[2][1]}), j_hi = std::max({mi[0][1], mi[1][1], mi[2][1]});
        const double det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        if (det == 0.0) continue;
        for (int j = j_lo; j <= j_hi; ++j)
          for (int i = i_lo; i <= i_hi; ++i) {
            const CellIndex c = grid.flat_index({i, j});
            if (c < 0 || !in_domain[static_cast<std::size_t>(c)]) continue;
            const double px = grid.centers()(0, c), py = grid.centers()(1, c);
            const double l1 = ((px - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (py - v[0][1])) / det;
            const double l2 = ((v[1][0] - v[0][0]) * (py - v[0][1]) - (px - v[0][0]) * (v[1][1] - v[0][1])) / det;
            if (l1 < -1e-9 || l2 < -1e-9 || l1 + l2 > 1.0 + 1e-9) continue;
            best[c] = std::max(best[c], pl.a * px + pl.b * py + pl.c);
          }
      }
      for (CellIndex c : domain) {
        double v = best[c];
        if (!std::isfinite(v)) {
          // Not covered by any projected facet (round-off at a seam): the
          // envelope is the max of the supporting planes.
          const double px = grid.centers()(0, c), py = grid.centers()(1, c);
          for (const Plane& pl : planes) v = std::max(v, pl.a * px + pl.b * py + pl.c);
        }
        out.values[c] = std::min(v, phi[c]);
      }
    }
  }
  out.tol = 1e-9 * range + interp_err;
  for (CellIndex c : domain)
    if (out.values[c] >= phi[c] - out.tol) out.contact.push_back(c);
  return out;
}

CoverReport vitali_cover(const std::vector<CoverCandidate>& candidates, const SectionProvider& sections,
                         double sigma, double c_prime, CellIndex cell_count) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw Error(ErrorKind::InvalidParameter, "vitali_cover", "sigma must lie in (0, 1)");
  if (!(c_prime >= 1.0)) throw Error(ErrorKind::InvalidParameter, "vitali_cover", "enlargement must be >= 1");
  CoverReport rep;
  rep.sigma = sigma;
  rep.c_prime = c_prime;
  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return candidates[static_cast<std::size_t>(a)].h > candidates[static_cast<std::size_t>(b)].h;
  });
  CellMask occupied(static_cast<std::size_t>(cell_count), 0);
  std::vector<CellSet> shrunk;
  for (int idx : order) {
    CellSet s = sections(idx, sigma * candidates[static_cast<std::size_t>(idx)].h);
    const bool free = std::none_of(s.begin(), s.end(), [&](CellIndex c) { return occupied[static_cast<std::size_t>(c)]; });
    if (!free) continue;
    for (CellIndex c : s) occupied[static_cast<std::size_t>(c)] = 1;
    rep.selected.push_back(idx);
    shrunk.push_back(std::move(s));
  }
  std::vector<int> count(static_cast<std::size_t>(cell_count), 0);
  rep.disjoint_ok = true;
  for (const CellSet& s : shrunk)
    for (CellIndex c : s)
      if (++count[static_cast<std::size_t>(c)] > 1) rep.disjoint_ok = false;
  CellMask covered(static_cast<std::size_t>(cell_count), 0);
  for (int idx : rep.selected)
    for (CellIndex c : sections(idx, c_prime * candidates[static_cast<std::size_t>(idx)].h))
      covered[static_cast<std::size_t>(c)] = 1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CellIndex c = candidates[i].center_cell;
    if (c < 0 || !covered[static_cast<std::size_t>(c)]) rep.uncovered.push_back(static_cast<int>(i));
  }
  rep.cover_ok = rep.uncovered.empty();
  return rep;
}

}  // namespace ctlab
