#include "doctest.h"

#include "ctlab/cost.hpp"
#include "ctlab/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace ctlab;

namespace {

const Box kUnit2 = Box::cube(2, 0.0, 1.0);

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Direct transcription of the two bumps, kept separate from the library.
double phi1_oracle(const Vector& x, const Vector& y) {
  return std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * y[0]);
}
double phi2_oracle(const Vector& x, const Vector& y) {
  double s = 0.0;
  for (int k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::exp(-s);
}

Vector random_in(const Box& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(b.dim());
  for (int k = 0; k < b.dim(); ++k) v[k] = b.lo[k] + (b.hi[k] - b.lo[k]) * u(rng);
  return v;
}

struct FdErrors {
  double dx = 0, dy = 0, dxx = 0, dxy = 0, dyy = 0;
  double max() const { return std::max({dx, dy, dxx, dxy, dyy}); }
};

// Centred differences of the value (first order) and of the analytic
// gradients (second order), relative to max(1, |analytic|).
FdErrors fd_errors(const CostModel& c, const Vector& x, const Vector& y, double h) {
  const int n = static_cast<int>(x.size());
  const CostDerivatives d = c.derivatives(x, y);
  FdErrors e;
  for (int k = 0; k < n; ++k) {
    Vector xp = x, xm = x, yp = y, ym = y;
    xp[k] += h;
    xm[k] -= h;
    yp[k] += h;
    ym[k] -= h;
    const double fdx = (c.value(xp, y) - c.value(xm, y)) / (2 * h);
    const double fdy = (c.value(x, yp) - c.value(x, ym)) / (2 * h);
    e.dx = std::max(e.dx, std::abs(fdx - d.dx[k]) / std::max(1.0, std::abs(d.dx[k])));
    e.dy = std::max(e.dy, std::abs(fdy - d.dy[k]) / std::max(1.0, std::abs(d.dy[k])));
    const Vector col_xx = (c.derivatives(xp, y).dx - c.derivatives(xm, y).dx) / (2 * h);
    const Vector col_xy = (c.derivatives(x, yp).dx - c.derivatives(x, ym).dx) / (2 * h);
    const Vector col_yy = (c.derivatives(x, yp).dy - c.derivatives(x, ym).dy) / (2 * h);
    e.dxx = std::max(e.dxx, (col_xx - d.dxx.col(k)).norm() / std::max(1.0, d.dxx.col(k).norm()));
    e.dxy = std::max(e.dxy, (col_xy - d.dxy.col(k)).norm() / std::max(1.0, d.dxy.col(k).norm()));
    e.dyy = std::max(e.dyy, (col_yy - d.dyy.col(k)).norm() / std::max(1.0, d.dyy.col(k).norm()));
  }
  return e;
}

std::vector<CostModel> all_costs() {
  const Box src = kUnit2;
  const Box tgt = Box::cube(2, 1.5, 2.5);  // disjoint so the power costs stay smooth
  return {make_cost(CostKind::QuadraticBilinear, src, tgt),
          make_cost(CostKind::SquaredDistance, src, tgt),
          make_cost(CostKind::Power, src, tgt, 3.0),
          make_cost(CostKind::Power, src, tgt, 1.5),
          make_cost(CostKind::PerturbedBilinear, src, tgt, 2.0, 0.05, Bump::Phi1),
          make_cost(CostKind::PerturbedBilinear, src, tgt, 2.0, 0.05, Bump::Phi2),
          make_cost(CostKind::AntiBilinear, src, tgt),
          make_cost(CostKind::SquaredBilinear, src, tgt)};
}

}  // namespace

TEST_CASE("eval_cost closed forms") {
  const CostModel bil = make_cost(CostKind::QuadraticBilinear, kUnit2, kUnit2);
  CHECK(eval_cost(bil, v2(1, 0), v2(0, 1)) == 0.0);
  const CostModel sq = make_cost(CostKind::SquaredDistance, Box::cube(2, -5, 5), Box::cube(2, -5, 5));
  CHECK(eval_cost(sq, v2(0, 0), v2(3, 4)) == doctest::Approx(12.5).epsilon(1e-15));
}

TEST_CASE("eval_cost rejects points outside the boxes") {
  const CostModel bil = make_cost(CostKind::QuadraticBilinear, kUnit2, kUnit2);
  CHECK_THROWS_AS(eval_cost(bil, v2(2, 0), v2(0, 0)), Error);
  try {
    eval_cost(bil, v2(0, 0), v2(0, -1));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

TEST_CASE("perturbed-bilinear matches a direct transcription") {
  std::mt19937_64 rng(7);
  for (Bump bump : {Bump::Phi1, Bump::Phi2}) {
    const CostModel c = make_cost(CostKind::PerturbedBilinear, kUnit2, kUnit2, 2.0, 0.01, bump);
    for (int s = 0; s < 50; ++s) {
      const Vector x = random_in(kUnit2, rng), y = random_in(kUnit2, rng);
      const double phi = bump == Bump::Phi1 ? phi1_oracle(x, y) : phi2_oracle(x, y);
      CHECK(eval_cost(c, x, y) == doctest::Approx(-(x[0] * y[0] + x[1] * y[1]) + 0.01 * phi).epsilon(1e-14));
    }
  }
}

TEST_CASE("cost_derivatives closed forms") {
  const Box big = Box::cube(2, -3, 3);
  const Vector x = v2(0.3, -0.7), y = v2(1.1, 0.4);
  const CostDerivatives bil = cost_derivatives(make_cost(CostKind::QuadraticBilinear, big, big), x, y);
  CHECK((bil.dx + y).norm() == 0.0);
  CHECK((bil.dxy + Matrix::Identity(2, 2)).norm() == 0.0);
  const CostDerivatives sq = cost_derivatives(make_cost(CostKind::SquaredDistance, big, big), x, y);
  CHECK((sq.dxx - Matrix::Identity(2, 2)).norm() == 0.0);
  CHECK((sq.dxy + Matrix::Identity(2, 2)).norm() == 0.0);
  const CostDerivatives pw = cost_derivatives(make_cost(CostKind::Power, big, big, 3.0), v2(1, 0), v2(0, 0));
  CHECK((pw.dx - v2(1, 0)).norm() < 1e-15);
  CHECK((pw.dxx - pw.dxx.transpose()).norm() == 0.0);
}

TEST_CASE("power cost with p < 2 is singular on the diagonal") {
  const CostModel c = make_cost(CostKind::Power, kUnit2, kUnit2, 1.5);
  try {
    cost_derivatives(c, v2(0.5, 0.5), v2(0.5, 0.5));
    FAIL("expected a singularity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Singularity);
  }
}

TEST_CASE("analytic derivatives agree with centred differences") {
  std::mt19937_64 rng(11);
  for (const CostModel& c : all_costs()) {
    const double h = 1e-4 * std::max(c.source_box.diameter(), c.target_box.diameter());
    for (int s = 0; s < 100; ++s) {
      const Vector x = random_in(c.source_box, rng), y = random_in(c.target_box, rng);
      INFO(to_string(c.kind));
      CHECK(fd_errors(c, x, y, h).max() <= 1e-5);
    }
  }
}

TEST_CASE("centred differences converge at second order") {
  std::mt19937_64 rng(5);
  for (const CostModel& c : all_costs()) {
    const double h = 5e-2;
    for (int s = 0; s < 10; ++s) {
      const Vector x = random_in(c.source_box, rng), y = random_in(c.target_box, rng);
      const FdErrors a = fd_errors(c, x, y, h), b = fd_errors(c, x, y, h / 2);
      for (auto [ea, eb] : {std::pair{a.dx, b.dx}, {a.dy, b.dy}, {a.dxx, b.dxx}, {a.dxy, b.dxy}, {a.dyy, b.dyy}}) {
        if (ea < 1e-9) continue;  // exact for polynomial parts
        INFO(to_string(c.kind));
        CHECK(std::log2(ea / eb) >= 1.8);
      }
    }
  }
}

TEST_CASE("c_exp closed forms") {
  const Box big = Box::cube(2, -4, 4);
  const CostModel bil = make_cost(CostKind::QuadraticBilinear, big, big);
  const CostModel sq = make_cost(CostKind::SquaredDistance, big, big);
  const Vector x = v2(0.25, -0.5), p = v2(1.0, 0.75);
  CHECK((c_exp(bil, x, p) - p).norm() < 1e-12);
  CHECK((c_exp(sq, x, p) - (x + p)).norm() < 1e-12);
}

TEST_CASE("c_exp for a perturbed cost matches a grid search") {
  const CostModel c = make_cost(CostKind::PerturbedBilinear, kUnit2, kUnit2, 2.0, 0.05, Bump::Phi1);
  std::mt19937_64 rng(3);
  constexpr int kGrid = 400;
  const double cell = 1.0 / kGrid;
  for (int s = 0; s < 5; ++s) {
    const Vector x = random_in(kUnit2, rng);
    const Vector y_true = 0.1 * Vector::Ones(2) + 0.8 * random_in(kUnit2, rng);
    const Vector p = -c.derivatives(x, y_true).dx;
    const Vector y = c_exp(c, x, p);
    double best = std::numeric_limits<double>::infinity();
    Vector arg(2);
    for (int i = 0; i < kGrid; ++i) {
      for (int j = 0; j < kGrid; ++j) {
        const Vector yy = v2((i + 0.5) * cell, (j + 0.5) * cell);
        const double r = (p + c.derivatives(x, yy).dx).norm();
        if (r < best) {
          best = r;
          arg = yy;
        }
      }
    }
    CHECK((arg - y).cwiseAbs().maxCoeff() <= cell);
  }
}

TEST_CASE("c_exp inverts the twist on random pairs") {
  std::mt19937_64 rng(19);
  for (const CostModel& c : all_costs()) {
    if (c.kind == CostKind::SquaredBilinear) continue;  // twist not injective
    for (int s = 0; s < 1000; ++s) {
      const Vector x = random_in(c.source_box, rng), y = random_in(c.target_box, rng);
      const Vector p = -c.derivatives(x, y).dx;
      const Vector yy = c_exp(c, x, p);
      INFO(to_string(c.kind));
      CHECK((p + c.derivatives(x, yy).dx).norm() <= 1e-9);
    }
  }
}

TEST_CASE("c_exp reports degenerate Jacobians") {
  const CostModel c = make_cost(CostKind::SquaredBilinear, Box::cube(2, -1, 1), Box::cube(2, -1, 1));
  CHECK_THROWS_AS(c_exp(c, v2(0, 0), v2(0.5, 0.5)), Error);
}

TEST_CASE("check_conditions on the bilinear cost") {
  const ConditionReport r = check_conditions(make_cost(CostKind::QuadraticBilinear, kUnit2, kUnit2), 32, 1);
  CHECK(r.c1_ok);
  CHECK(r.c2_ok);
  CHECK(r.c3_min_absdet == doctest::Approx(1.0));
  CHECK(r.delta_hat == 0.0);
  CHECK(r.sample_count == 10000);
}

TEST_CASE("check_conditions bounds the perturbation by delta times the bump's C2 norm") {
  // phi1 = sin(pi x1) sin(pi y1): |phi| <= 1, |D phi| <= pi, |D^2 phi| <= pi^2.
  const double bound = 0.02 * std::numbers::pi * std::numbers::pi;
  const ConditionReport r =
      check_conditions(make_cost(CostKind::PerturbedBilinear, kUnit2, kUnit2, 2.0, 0.02, Bump::Phi1), 32, 1);
  CHECK(r.delta_hat > 0.0);
  CHECK(r.delta_hat <= bound);
  CHECK(r.c1_ok);
  CHECK(r.c3_ok);
}

TEST_CASE("check_conditions flags a vanishing mixed Hessian") {
  const Box b = Box::cube(2, -1, 1);
  const ConditionReport r = check_conditions(make_cost(CostKind::SquaredBilinear, b, b), 32, 1);
  CHECK(r.c3_min_absdet < 1e-4);
  CHECK_FALSE(r.c3_ok);
}

TEST_CASE("delta_hat is monotone in delta") {
  double last = -1.0;
  for (double delta : {0.0, 0.01, 0.02, 0.05, 0.1}) {
    const ConditionReport r =
        check_conditions(make_cost(CostKind::PerturbedBilinear, kUnit2, kUnit2, 2.0, delta, Bump::Phi2), 16, 4);
    CHECK(r.delta_hat >= last);
    last = r.delta_hat;
  }
}

TEST_CASE("transposed and normalized costs") {
  const CostModel c = make_cost(CostKind::PerturbedBilinear, kUnit2, Box::cube(2, 0, 2), 2.0, 0.05, Bump::Phi1);
  const CostModel t = transpose(c);
  const Vector x = v2(0.2, 0.9), y = v2(1.3, 0.4);
  CHECK(t.value(y, x) == c.value(x, y));
  CHECK((t.derivatives(y, x).dxy - c.derivatives(x, y).dxy.transpose()).norm() < 1e-15);
  const Vector x0 = v2(0.5, 0.5), y0 = v2(1, 1);
  const CostModel nc = normalize_at(c, x0, y0);
  CHECK(nc.value(x, y0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(nc.value(x0, y) == doctest::Approx(0.0).epsilon(1e-15));
  std::mt19937_64 rng(1);
  for (int s = 0; s < 20; ++s) {
    const Vector xx = random_in(nc.source_box, rng), yy = random_in(nc.target_box, rng);
    CHECK(fd_errors(nc, xx, yy, 1e-4).max() <= 1e-5);
    CHECK(fd_errors(t, yy, xx, 1e-4).max() <= 1e-5);
  }
}
