#include "ctlab/cost.hpp"

#include "ctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ctlab {

namespace {

constexpr double kPi = std::numbers::pi;

double bump_value(Bump bump, PointRef x, PointRef y) {
  switch (bump) {
    case Bump::Phi1: return std::sin(kPi * x[0]) * std::sin(kPi * y[0]);
    case Bump::Phi2: return std::exp(-(x - y).squaredNorm());
  }
  return 0.0;
}

// Adds delta * (derivatives of the bump) to d.
void add_bump(Bump bump, double delta, PointRef x, PointRef y, CostDerivatives& d) {
  const auto n = x.size();
  switch (bump) {
    case Bump::Phi1: {
      const double sx = std::sin(kPi * x[0]), cx = std::cos(kPi * x[0]);
      const double sy = std::sin(kPi * y[0]), cy = std::cos(kPi * y[0]);
      d.value += delta * sx * sy;
      d.dx[0] += delta * kPi * cx * sy;
      d.dy[0] += delta * kPi * sx * cy;
      d.dxx(0, 0) += -delta * kPi * kPi * sx * sy;
      d.dyy(0, 0) += -delta * kPi * kPi * sx * sy;
      d.dxy(0, 0) += delta * kPi * kPi * cx * cy;
      break;
    }
    case Bump::Phi2: {
      const Vector diff = x - y;
      const double phi = std::exp(-diff.squaredNorm());
      const Matrix h = (4.0 * diff * diff.transpose() - 2.0 * Matrix::Identity(n, n)) * phi;
      d.value += delta * phi;
      d.dx += -2.0 * delta * phi * diff;
      d.dy += 2.0 * delta * phi * diff;
      d.dxx += delta * h;
      d.dyy += delta * h;
      d.dxy += -delta * h;
      break;
    }
  }
}

double raw_value(const CostModel& c, PointRef x, PointRef y) {
  switch (c.kind) {
    case CostKind::QuadraticBilinear: return -x.dot(y);
    case CostKind::SquaredDistance: return 0.5 * (x - y).squaredNorm();
    case CostKind::Power: return std::pow((x - y).norm(), c.exponent) / c.exponent;
    case CostKind::PerturbedBilinear: return -x.dot(y) + c.delta * bump_value(c.bump, x, y);
    case CostKind::AntiBilinear: return x.dot(y);
    case CostKind::SquaredBilinear: {
      const double s = x.dot(y);
      return -0.5 * s * s;
    }
  }
  return 0.0;
}

CostDerivatives raw_derivatives(const CostModel& c, PointRef x, PointRef y) {
  const auto n = x.size();
  const Matrix id = Matrix::Identity(n, n);
  CostDerivatives d;
  d.value = raw_value(c, x, y);
  d.dxx = Matrix::Zero(n, n);
  d.dyy = Matrix::Zero(n, n);
  switch (c.kind) {
    case CostKind::QuadraticBilinear:
      d.dx = -y;
      d.dy = -x;
      d.dxy = -id;
      break;
    case CostKind::AntiBilinear:
      d.dx = y;
      d.dy = x;
      d.dxy = id;
      break;
    case CostKind::SquaredDistance:
      d.dx = x - y;
      d.dy = y - x;
      d.dxx = id;
      d.dyy = id;
      d.dxy = -id;
      break;
    case CostKind::Power: {
      const Vector diff = x - y;
      const double r = diff.norm();
      const double p = c.exponent;
      if (r == 0.0) {
        if (p < 2.0) throw Error(ErrorKind::Singularity, "cost_derivatives", "power cost with p < 2 is singular at x = y");
        d.dx = Vector::Zero(n);
        d.dy = Vector::Zero(n);
        d.dxx = (p == 2.0) ? id : Matrix::Zero(n, n);
      } else {
        const double rp2 = std::pow(r, p - 2.0);
        d.dx = rp2 * diff;
        d.dy = -rp2 * diff;
        d.dxx = rp2 * id + (p - 2.0) * std::pow(r, p - 4.0) * diff * diff.transpose();
      }
      d.dyy = d.dxx;
      d.dxy = -d.dxx;
      break;
    }
    case CostKind::PerturbedBilinear:
      d.value = -x.dot(y);
      d.dx = -y;
      d.dy = -x;
      d.dxy = -id;
      add_bump(c.bump, c.delta, x, y, d);
      break;
    case CostKind::SquaredBilinear: {
      const double s = x.dot(y);
      d.dx = -s * y;
      d.dy = -s * x;
      d.dxx = -y * y.transpose();
      d.dyy = -x * x.transpose();
      d.dxy = -(y * x.transpose() + s * id);
      break;
    }
  }
  return d;
}

CostDerivatives oriented_derivatives(const CostModel& c, PointRef x, PointRef y) {
  if (!c.transposed) return raw_derivatives(c, x, y);
  CostDerivatives r = raw_derivatives(c, y, x);
  CostDerivatives d;
  d.value = r.value;
  d.dx = std::move(r.dy);
  d.dy = std::move(r.dx);
  d.dxx = std::move(r.dyy);
  d.dyy = std::move(r.dxx);
  d.dxy = r.dxy.transpose();
  return d;
}

double oriented_value(const CostModel& c, PointRef x, PointRef y) {
  return c.transposed ? raw_value(c, y, x) : raw_value(c, x, y);
}

void check_domain(const CostModel& c, PointRef x, PointRef y, const char* op) {
  if (x.size() != c.dim() || y.size() != c.target_box.dim())
    throw Error(ErrorKind::Domain, op, "point dimension does not match the cost");
  if (!c.source_box.contains(x, 1e-9)) throw Error(ErrorKind::Domain, op, "x outside source box");
  if (!c.target_box.contains(y, 1e-9)) throw Error(ErrorKind::Domain, op, "y outside target box");
}

Vector box_point(const Box& box, const Vector& unit) {
  return box.lo + (box.hi - box.lo).cwiseProduct(unit);
}

}  // namespace

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::QuadraticBilinear: return "quadratic-bilinear";
    case CostKind::SquaredDistance: return "squared-distance";
    case CostKind::Power: return "power";
    case CostKind::PerturbedBilinear: return "perturbed-bilinear";
    case CostKind::AntiBilinear: return "anti-bilinear";
    case CostKind::SquaredBilinear: return "squared-bilinear";
  }
  return "unknown";
}

CostKind cost_kind_from_string(const std::string& name) {
  for (CostKind k : {CostKind::QuadraticBilinear, CostKind::SquaredDistance, CostKind::Power,
                     CostKind::PerturbedBilinear, CostKind::AntiBilinear, CostKind::SquaredBilinear})
    if (to_string(k) == name) return k;
  throw Error(ErrorKind::InvalidSpec, "cost", "unknown cost kind '" + name + "'");
}

std::string to_string(Bump bump) { return bump == Bump::Phi1 ? "phi1" : "phi2"; }

Bump bump_from_string(const std::string& name) {
  if (name == "phi1") return Bump::Phi1;
  if (name == "phi2") return Bump::Phi2;
  throw Error(ErrorKind::InvalidSpec, "cost", "unknown bump '" + name + "'");
}

double CostModel::value(PointRef x, PointRef y) const {
  double v = oriented_value(*this, x, y);
  if (normalization) {
    const auto& [x0, y0] = *normalization;
    v += -oriented_value(*this, x, y0) - oriented_value(*this, x0, y) + oriented_value(*this, x0, y0);
  }
  return v;
}

CostDerivatives CostModel::derivatives(PointRef x, PointRef y) const {
  CostDerivatives d = oriented_derivatives(*this, x, y);
  if (normalization) {
    const auto& [x0, y0] = *normalization;
    const CostDerivatives at_y0 = oriented_derivatives(*this, x, y0);
    const CostDerivatives at_x0 = oriented_derivatives(*this, x0, y);
    d.value += -at_y0.value - at_x0.value + oriented_value(*this, x0, y0);
    d.dx -= at_y0.dx;
    d.dxx -= at_y0.dxx;
    d.dy -= at_x0.dy;
    d.dyy -= at_x0.dyy;
  }
  return d;
}

Vector CostModel::grad_x(PointRef x, PointRef y) const {
  if (!transposed && !normalization) {
    switch (kind) {
      case CostKind::QuadraticBilinear: return -y;
      case CostKind::AntiBilinear: return y;
      case CostKind::SquaredDistance: return x - y;
      default: break;
    }
  }
  return derivatives(x, y).dx;
}

double CostModel::scale() const {
  double s = 0.0;
  for (std::uint64_t i = 0; i < 256; ++i) {
    const Vector u = halton_point(i, 2 * dim());
    const Vector x = box_point(source_box, u.head(dim()));
    const Vector y = box_point(target_box, u.tail(dim()));
    s = std::max(s, std::abs(value(x, y)));
  }
  return std::max(s, 1e-12);
}

double CostModel::lipschitz_y() const {
  double s = 0.0;
  for (std::uint64_t i = 0; i < 256; ++i) {
    const Vector u = halton_point(i, 2 * dim());
    const Vector x = box_point(source_box, u.head(dim()));
    const Vector y = box_point(target_box, u.tail(dim()));
    try {
      s = std::max(s, derivatives(x, y).dy.norm());
    } catch (const Error&) {
    }
  }
  return s;
}

double CostModel::lipschitz_x() const {
  double s = 0.0;
  for (std::uint64_t i = 0; i < 256; ++i) {
    const Vector u = halton_point(i, 2 * dim());
    const Vector x = box_point(source_box, u.head(dim()));
    const Vector y = box_point(target_box, u.tail(dim()));
    try {
      s = std::max(s, derivatives(x, y).dx.norm());
    } catch (const Error&) {
    }
  }
  return s;
}

CostModel make_cost(CostKind kind, const Box& source_box, const Box& target_box, double exponent, double delta,
                    Bump bump) {
  if (source_box.dim() != target_box.dim())
    throw Error(ErrorKind::InvalidSpec, "cost", "source and target boxes differ in dimension");
  if (kind == CostKind::Power && !(exponent > 1.0))
    throw Error(ErrorKind::InvalidSpec, "cost", "power cost needs exponent > 1");
  if (kind == CostKind::PerturbedBilinear && !(delta >= 0.0))
    throw Error(ErrorKind::InvalidSpec, "cost", "perturbation size must be nonnegative");
  CostModel c;
  c.kind = kind;
  c.exponent = exponent;
  c.delta = delta;
  c.bump = bump;
  c.source_box = source_box;
  c.target_box = target_box;
  return c;
}

CostModel transpose(const CostModel& cost) {
  if (cost.normalization)
    throw Error(ErrorKind::InvalidParameter, "transpose", "transpose the cost before normalizing it");
  CostModel t = cost;
  t.transposed = !cost.transposed;
  std::swap(t.source_box, t.target_box);
  return t;
}

CostModel normalize_at(const CostModel& cost, PointRef x0, PointRef y0) {
  CostModel c = cost;
  c.normalization = std::make_pair(Point(x0), Point(y0));
  return c;
}

double eval_cost(const CostModel& cost, PointRef x, PointRef y) {
  check_domain(cost, x, y, "eval_cost");
  return cost.value(x, y);
}

CostDerivatives cost_derivatives(const CostModel& cost, PointRef x, PointRef y) {
  check_domain(cost, x, y, "cost_derivatives");
  return cost.derivatives(x, y);
}

Point c_exp(const CostModel& cost, PointRef x, PointRef p) {
  const double tol = 1e-10 * (1.0 + p.norm());
  Point y = p;
  auto residual = [&](const Point& yy) -> Vector { return p + cost.grad_x(x, yy); };
  Vector r = residual(y);
  for (int iter = 0; iter < 50; ++iter) {
    if (r.norm() <= tol) return y;
    Matrix jac;
    try {
      jac = cost.derivatives(x, y).dxy;
    } catch (const Error&) {
      y += Vector::Constant(y.size(), 1e-7 * (1.0 + y.norm()));
      r = residual(y);
      continue;
    }
    Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible() || std::abs(jac.determinant()) < 1e-14 * std::max(1.0, jac.squaredNorm()))
      throw Error(ErrorKind::DegenerateCost, "c_exp", "D_xy c is singular at a Newton iterate");
    const Vector step = lu.solve(-r);
    double t = 1.0;
    Point trial = y + step;
    Vector rt;
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving) {
      try {
        rt = residual(trial);
        if (rt.norm() <= r.norm() || halving == 20) {
          accepted = true;
          break;
        }
      } catch (const Error&) {
      }
      t *= 0.5;
      trial = y + t * step;
    }
    if (!accepted) throw Error(ErrorKind::NoSolution, "c_exp", "damped Newton step failed");
    y = trial;
    r = rt;
  }
  if (r.norm() <= tol) return y;
  throw Error(ErrorKind::NoSolution, "c_exp", "Newton did not converge in 50 iterations");
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Vector halton_point(std::uint64_t index, int dim) {
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  Vector out(dim);
  for (int d = 0; d < dim; ++d) {
    const int base = kPrimes[d % 12];
    double f = 1.0, r = 0.0;
    std::uint64_t i = index + 1;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
      i /= static_cast<std::uint64_t>(base);
    }
    out[d] = r;
  }
  return out;
}

ConditionReport check_conditions(const CostModel& cost, int n_samples, std::uint64_t seed) {
  if (n_samples < 10) throw Error(ErrorKind::InvalidParameter, "check_conditions", "need at least 10 samples");
  const int n = cost.dim();
  const Matrix id = Matrix::Identity(n, n);
  ConditionReport rep;
  rep.c3_min_absdet = std::numeric_limits<double>::infinity();

  constexpr int kNormSamples = 10000;
  constexpr int kThirdOrderSamples = 1000;
  const double fd_step = 1e-4 * std::max(cost.source_box.diameter(), cost.target_box.diameter());
  for (int s = 0; s < kNormSamples; ++s) {
    const Vector u = halton_point(static_cast<std::uint64_t>(s), 2 * n);
    const Vector x = box_point(cost.source_box, u.head(n));
    const Vector y = box_point(cost.target_box, u.tail(n));
    CostDerivatives d;
    try {
      d = cost.derivatives(x, y);
    } catch (const Error&) {
      continue;
    }
    ++rep.sample_count;
    const double dev = std::max({std::abs(d.value + x.dot(y)), (d.dx + y).norm(), (d.dy + x).norm(),
                                 spectral_norm(d.dxx), spectral_norm(d.dxy + id), spectral_norm(d.dyy)});
    rep.delta_hat = std::max(rep.delta_hat, dev);
    const double absdet = std::abs(d.dxy.determinant());
    rep.c3_min_absdet = std::min(rep.c3_min_absdet, absdet);
    rep.c3_max_absdet = std::max(rep.c3_max_absdet, absdet);
    double c0 = std::max({std::abs(d.value), d.dx.norm(), d.dy.norm(), spectral_norm(d.dxx), spectral_norm(d.dxy),
                          spectral_norm(d.dyy)});
    if (s < kThirdOrderSamples) {
      // Third derivatives by centred differences of the analytic Hessian blocks.
      for (int k = 0; k < 2 * n; ++k) {
        Vector xp = x, xm = x, yp = y, ym = y;
        if (k < n) {
          xp[k] += fd_step;
          xm[k] -= fd_step;
        } else {
          yp[k - n] += fd_step;
          ym[k - n] -= fd_step;
        }
        try {
          const CostDerivatives a = cost.derivatives(xp, yp), b = cost.derivatives(xm, ym);
          const double third = std::max({spectral_norm(a.dxx - b.dxx), spectral_norm(a.dxy - b.dxy),
                                         spectral_norm(a.dyy - b.dyy)}) /
                               (2.0 * fd_step);
          c0 = std::max(c0, third);
        } catch (const Error&) {
        }
      }
    }
    rep.c0_norm = std::max(rep.c0_norm, c0);
  }

  // Twist injectivity on sampled fibres.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto random_in = [&](const Box& box) {
    Vector u(n);
    for (int k = 0; k < n; ++k) u[k] = unif(rng);
    return box_point(box, u);
  };
  const int fibres = std::min(n_samples, 64);
  const int per_fibre = std::min(n_samples, 48);
  constexpr double kCollisionRatio = 1e-6;
  rep.c1_worst_ratio = std::numeric_limits<double>::infinity();
  rep.c2_worst_ratio = std::numeric_limits<double>::infinity();
  for (int f = 0; f < fibres; ++f) {
    const Vector x = random_in(cost.source_box);
    const Vector yb = random_in(cost.target_box);
    std::vector<Vector> ys, xs, gx, gy;
    for (int k = 0; k < per_fibre; ++k) {
      ys.push_back(random_in(cost.target_box));
      xs.push_back(random_in(cost.source_box));
    }
    for (int k = 0; k < per_fibre; ++k) {
      try {
        gx.push_back(cost.derivatives(x, ys[static_cast<std::size_t>(k)]).dx);
      } catch (const Error&) {
        gx.push_back(Vector::Constant(n, std::numeric_limits<double>::quiet_NaN()));
      }
      try {
        gy.push_back(cost.derivatives(xs[static_cast<std::size_t>(k)], yb).dy);
      } catch (const Error&) {
        gy.push_back(Vector::Constant(n, std::numeric_limits<double>::quiet_NaN()));
      }
    }
    for (int a = 0; a < per_fibre; ++a) {
      for (int b = a + 1; b < per_fibre; ++b) {
        const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
        const double dy = (ys[ua] - ys[ub]).norm();
        if (dy > 0.0 && gx[ua].allFinite() && gx[ub].allFinite()) {
          const double ratio = (gx[ua] - gx[ub]).norm() / dy;
          if (ratio < rep.c1_worst_ratio) {
            rep.c1_worst_ratio = ratio;
            if (ratio < kCollisionRatio) rep.c1_witness = std::array<Point, 3>{x, ys[ua], ys[ub]};
          }
        }
        const double dx = (xs[ua] - xs[ub]).norm();
        if (dx > 0.0 && gy[ua].allFinite() && gy[ub].allFinite()) {
          const double ratio = (gy[ua] - gy[ub]).norm() / dx;
          if (ratio < rep.c2_worst_ratio) {
            rep.c2_worst_ratio = ratio;
            if (ratio < kCollisionRatio) rep.c2_witness = std::array<Point, 3>{yb, xs[ua], xs[ub]};
          }
        }
      }
    }
    // Fibre points also feed the non-degeneracy check.
    for (int k = 0; k < per_fibre; ++k) {
      try {
        const double absdet = std::abs(cost.derivatives(x, ys[static_cast<std::size_t>(k)]).dxy.determinant());
        rep.c3_min_absdet = std::min(rep.c3_min_absdet, absdet);
        rep.c3_max_absdet = std::max(rep.c3_max_absdet, absdet);
      } catch (const Error&) {
      }
    }
  }
  rep.c1_ok = !rep.c1_witness.has_value();
  rep.c2_ok = !rep.c2_witness.has_value();
  if (!std::isfinite(rep.c3_min_absdet)) rep.c3_min_absdet = 0.0;
  rep.c3_ok = rep.c3_min_absdet >= 1e-3 * rep.c3_max_absdet && rep.c3_max_absdet > 0.0;
  return rep;
}

}  // namespace ctlab
