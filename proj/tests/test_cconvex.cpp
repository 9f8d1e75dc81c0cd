#include "doctest.h"

#include "ctlab/cconvex.hpp"
#include "ctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace ctlab;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

PotentialField quadratic(const Grid& g, const CostModel& c, double a = 1.0, double b = 1.0) {
  return PotentialField::from_function(c, [a, b](PointRef x) { return 0.5 * (a * x[0] * x[0] + b * x[1] * x[1]); }, g);
}

// Hausdorff distance between a cell set's centres and the closed ball.
double hausdorff_to_ball(const Grid& g, const CellSet& cells, const Point& c, double r) {
  double d = 0.0;
  for (CellIndex k : cells) d = std::max(d, std::max(0.0, (g.center(k) - c).norm() - r));
  // Points of the ball: distance to the nearest member centre, sampled on a fine lattice.
  for (int i = 0; i <= 60; ++i)
    for (int j = 0; j <= 60; ++j) {
      const Point p = c + r * v2(-1 + 2.0 * i / 60, -1 + 2.0 * j / 60);
      if ((p - c).norm() > r) continue;
      double best = 1e300;
      for (CellIndex k : cells) best = std::min(best, (g.center(k) - p).norm());
      d = std::max(d, best);
    }
  return d;
}

PotentialField random_atom_potential(std::mt19937_64& rng, const Grid& g, const CostModel& c, int atoms) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix y(2, atoms);
  Vector lambda(atoms);
  for (int j = 0; j < atoms; ++j) {
    y.col(j) << c.target_box.lo[0] + u(rng) * (c.target_box.hi[0] - c.target_box.lo[0]),
        c.target_box.lo[1] + u(rng) * (c.target_box.hi[1] - c.target_box.lo[1]);
    lambda[j] = 0.3 * u(rng);
  }
  return PotentialField::from_atoms(c, y, lambda, g, g.box().center());
}

}  // namespace

TEST_CASE("c-transform of the quadratic is the quadratic") {
  const CostModel c = make_cost(CostKind::QuadraticBilinear, Box::cube(2, -2.5, 2.5), Box::cube(2, -1.0, 1.0));
  const Grid src(Box::cube(2, -2.5, 2.5), 100);
  const Grid tgt(Box::cube(2, -1.0, 1.0), 20);
  const CTransform t = c_transform(quadratic(src, c), c, tgt);
  const double lip = 2.5 * std::sqrt(2.0);
  for (CellIndex k = 0; k < tgt.cell_count(); ++k) {
    const Point y = tgt.center(k);
    CHECK(std::abs(t.field.value(k) - 0.5 * y.squaredNorm()) <= lip * src.max_spacing());
    CHECK(t.field(y) == doctest::Approx(t.field.value(k)).epsilon(1e-12));
  }
}

TEST_CASE("c-transform of zero is the l1 norm") {
  const CostModel c = make_cost(CostKind::QuadraticBilinear, Box::cube(2, -1.0, 1.0), Box::cube(2, -1.0, 1.0));
  const Grid src(Box::cube(2, -1.0, 1.0), 64);
  const Grid tgt(Box::cube(2, -1.0, 1.0), 16);
  const PotentialField zero = PotentialField::from_values(c, src, Vector::Zero(src.cell_count()));
  const CTransform t = c_transform(zero, c, tgt);
  for (CellIndex k = 0; k < tgt.cell_count(); ++k)
    CHECK(std::abs(t.field.value(k) - tgt.center(k).lpNorm<1>()) <= src.max_spacing());
}

TEST_CASE("c-transform matches brute force for a perturbed cost") {
  const Box b = Box::cube(2, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::PerturbedBilinear, b, b, 2.0, 0.05, Bump::Phi1);
  const Grid src(b, 24), tgt(b, 12);
  std::mt19937_64 rng(1);
  const PotentialField u = random_atom_potential(rng, src, c, 30);
  const CTransform t = c_transform(u, c, tgt);
  for (CellIndex k = 0; k < tgt.cell_count(); ++k) {
    double best = -1e300;
    CellIndex arg = -1;
    for (CellIndex x = 0; x < src.cell_count(); ++x) {
      const Point px = src.center(x), py = tgt.center(k);
      const double s = (px[0] * py[0] + px[1] * py[1]) -
                       0.05 * std::sin(M_PI * px[0]) * std::sin(M_PI * py[0]) - u.value(x);
      if (s > best) {
        best = s;
        arg = x;
      }
    }
    CHECK(t.field.value(k) == doctest::Approx(best).epsilon(1e-13));
    CHECK(t.argmax[static_cast<std::size_t>(k)] == arg);
  }
}

TEST_CASE("c-transform reverses order") {
  const Box b = Box::cube(2, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::PerturbedBilinear, b, b, 2.0, 0.05, Bump::Phi2);
  const Grid src(b, 20), tgt(b, 10);
  std::mt19937_64 rng(2);
  const PotentialField u1 = random_atom_potential(rng, src, c, 20);
  std::uniform_real_distribution<double> bump(0.0, 0.2);
  Vector raised = u1.values();
  for (Eigen::Index k = 0; k < raised.size(); ++k) raised[k] += bump(rng);
  const PotentialField u2 = PotentialField::from_values(c, src, raised);
  const CTransform t1 = c_transform(u1, c, tgt), t2 = c_transform(u2, c, tgt);
  for (CellIndex k = 0; k < tgt.cell_count(); ++k) CHECK(t1.field.value(k) >= t2.field.value(k));
}

TEST_CASE("double transform restores atom potentials") {
  const Box b = Box::cube(2, 0.0, 1.0);
  std::mt19937_64 rng(3);
  for (double delta : {0.0, 0.05}) {
    const CostModel c = make_cost(delta > 0 ? CostKind::PerturbedBilinear : CostKind::QuadraticBilinear, b, b, 2.0,
                                  delta, Bump::Phi2);
    const Grid g(b, 32);
    const PotentialField u = random_atom_potential(rng, g, c, 40);
    const PotentialField w = double_transform(u);
    for (CellIndex k = 0; k < g.cell_count(); ++k) CHECK(std::abs(w.value(k) - u.value(k)) <= 1e-9);

    // Grid-to-grid double transform: below u, and within Lip * spacing.
    const CTransform uc = c_transform(u, c, Grid(b, 32));
    const CTransform ucc = c_transform(uc.field, transpose(c), g);
    const double lip = c.lipschitz_y();
    for (CellIndex k = 0; k < g.cell_count(); ++k) {
      CHECK(ucc.field.value(k) <= u.value(k) + 1e-9);
      CHECK(ucc.field.value(k) >= u.value(k) - 1e-9 - lip * g.max_spacing());
    }
  }
}

TEST_CASE("Frechet subdifferential") {
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const Grid g(b, 64);
  const double step = g.max_spacing();
  const SlopeBox smooth = frechet_subdiff(quadratic(g, c), Point::Zero(2), step);
  CHECK(smooth.single_valued);
  CHECK(smooth.centered.norm() <= 1e-12);
  CHECK(smooth.max_gap <= 2.0 * step);

  const PotentialField kink = PotentialField::from_function(c, [](PointRef x) { return std::abs(x[0]); }, g);
  const SlopeBox k = frechet_subdiff(kink, Point::Zero(2), step);
  CHECK_FALSE(k.single_valued);
  CHECK(k.backward[0] == doctest::Approx(-1.0));
  CHECK(k.forward[0] == doctest::Approx(1.0));
}

TEST_CASE("c-subdifferential of explicit atom potentials") {
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const Grid g(b, 16);
  const PotentialField one = PotentialField::from_atoms(c, v2(0.2, 0.4), Vector::Zero(1), g);
  CHECK(c_subdiff(one, v2(-0.7, 0.1)) == std::vector<int>{0});

  Matrix y(2, 2);
  y << 1, -1, 0, 0;
  const PotentialField two = PotentialField::from_atoms(c, y, Vector::Zero(2), g);
  CHECK(c_subdiff(two, v2(0.0, 0.37)) == std::vector<int>{0, 1});
  CHECK(c_subdiff(two, v2(0.3, 0.0)) == std::vector<int>{0});
  CHECK(c_subdiff(two, v2(-0.3, 0.5)) == std::vector<int>{1});
}

TEST_CASE("identity case: gradients, subdifferentials and the Frechet box") {
  const Box b = Box::cube(2, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const Grid atoms_grid(b, 24);
  const AtomCloud cloud = make_cloud(atoms_grid.centers(), Vector::Ones(atoms_grid.cell_count()), b);
  const TransportPlan plan = solve_discrete(c, cloud, cloud);
  const Grid g(b, 48);
  const PotentialField u = reconstruct_potential(plan, c, cloud, g, b.center());
  const double atom_spacing = atoms_grid.max_spacing();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> pick(0.1, 0.9);
  for (int trial = 0; trial < 100; ++trial) {
    const Point x = v2(pick(rng), pick(rng));
    const SlopeBox box = frechet_subdiff(u, x, g.max_spacing());
    CHECK((box.centered - x).norm() <= 2.0 * atom_spacing);
    const std::vector<int> sub = c_subdiff(u, x);
    for (int j : sub) {
      const Vector p = -c.grad_x(x, u.targets().col(j));
      for (int a = 0; a < 2; ++a) {
        CHECK(p[a] >= std::min(box.backward[a], box.forward[a]) - 10.0 * g.max_spacing());
        CHECK(p[a] <= std::max(box.backward[a], box.forward[a]) + 10.0 * g.max_spacing());
      }
    }
    if (sub.size() == 1 && box.single_valued)
      CHECK((u.targets().col(sub[0]) - transport_map(u, x)).norm() <= atom_spacing);
  }
}

TEST_CASE("quadratic sections are balls") {
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const Grid g(b, 128);
  const PotentialField u = quadratic(g, c);
  const Point x0 = v2(0.1, -0.2);
  for (double h : {0.01, 0.05, 0.1}) {
    const Section s = section_extract(u, c, x0, x0, h);
    CHECK(s.connected);
    CHECK(hausdorff_to_ball(g, s.cells, x0, std::sqrt(2 * h)) <= 2.0 * g.max_spacing());
    const Section comp = section_extract(u, c, x0, x0, h, {SectionScan::Component, -1.0, true});
    CHECK(comp.cells == s.cells);
  }
  const Section zero = section_extract(u, c, x0, x0, 0.0);
  CHECK(std::binary_search(zero.cells.begin(), zero.cells.end(), g.locate(x0)));
  for (CellIndex k : zero.cells)
    if (k != g.locate(x0)) CHECK(section_energy(u, c, x0, x0, u(x0), k) <= 1e-9);
}

TEST_CASE("anisotropic sections are ellipses") {
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, Box::cube(2, -4.0, 4.0));
  const Grid g(b, 96);
  const PotentialField u = quadratic(g, c, 4.0, 0.25);
  const double h = 0.05;
  const Section s = section_extract(u, c, Point::Zero(2), Point::Zero(2), h);
  for (CellIndex k = 0; k < g.cell_count(); ++k) {
    const Point x = g.center(k);
    const bool inside = 4 * x[0] * x[0] + 0.25 * x[1] * x[1] <= 2 * h + 2e-9;
    CHECK(std::binary_search(s.cells.begin(), s.cells.end(), k) == inside);
  }
  Section norm = s;
  normalize_section(g, norm);
  CHECK(norm.norm_size == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("sections nest and ignore constants and normalizations") {
  const Box b = Box::cube(2, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::PerturbedBilinear, b, b, 2.0, 0.05, Bump::Phi2);
  const Grid atoms_grid(b, 16);
  const AtomCloud cloud = make_cloud(atoms_grid.centers(), Vector::Ones(atoms_grid.cell_count()), b);
  const TransportPlan plan = solve_discrete(c, cloud, cloud);
  const Grid g(b, 64);
  const PotentialField u = reconstruct_potential(plan, c, cloud, g, b.center());
  const Point x0 = v2(0.45, 0.55);
  const Point y0 = supporting_target(u, x0);

  CellSet prev;
  for (double h : {0.0, 0.002, 0.005, 0.01, 0.02, 0.05}) {
    const Section s = section_extract(u, c, x0, y0, h);
    CHECK(is_subset(prev, s.cells));
    prev = s.cells;
  }

  const PotentialField shifted = PotentialField::from_atoms(c, u.targets(), u.lambda().array() + 3.7, g);
  const Section s0 = section_extract(u, c, x0, y0, 0.01);
  CHECK(section_extract(shifted, c, x0, y0, 0.01).cells == s0.cells);

  // c(x,y) -> c(x,y) - c(x,y1) - c(x1,y) + c(x1,y1), re-solved with the same plan.
  const CostModel cn = normalize_at(c, v2(0.5, 0.5), v2(0.5, 0.5));
  const TransportPlan plan_n = solve_discrete(cn, cloud, cloud);
  const PotentialField un = reconstruct_potential(plan_n, cn, cloud, g, b.center());
  CHECK(section_extract(un, cn, x0, y0, 0.01).cells == s0.cells);
}

TEST_CASE("a target outside the c-subdifferential is rejected") {
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const Grid g(b, 32);
  try {
    section_extract(quadratic(g, c), c, v2(0.1, 0.1), v2(0.5, 0.1), 0.01);
    FAIL("expected invalid section");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidSection);
  }
}

TEST_CASE("disconnected sections are flagged") {
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const Grid g(b, 64);
  // Double well: the sublevel set through one well also contains the other.
  const PotentialField u = PotentialField::from_function(
      c, [](PointRef x) { return std::min((x - v2(-0.5, 0)).squaredNorm(), (x - v2(0.5, 0)).squaredNorm()); }, g);
  SectionOptions opt;
  opt.check_subdiff = false;
  const Section s = section_extract(u, c, v2(-0.5, 0), Point::Zero(2), 0.02, opt);
  CHECK_FALSE(s.connected);
  opt.scan = SectionScan::Component;
  const Section comp = section_extract(u, c, v2(-0.5, 0), Point::Zero(2), 0.02, opt);
  CHECK(comp.cells.size() * 2 == s.cells.size());
}

TEST_CASE("semiconvexity constant") {
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const Grid g(b, 40);
  CHECK(semiconvexity_constant(quadratic(g, c), g.max_spacing()) == doctest::Approx(0.0));
  CHECK(semiconvexity_constant(quadratic(g, c, -1.0, -1.0), g.max_spacing()) == doctest::Approx(0.5).epsilon(1e-6));

  const Box unit = Box::cube(2, 0.0, 1.0);
  const CostModel pc = make_cost(CostKind::PerturbedBilinear, unit, unit, 2.0, 0.3, Bump::Phi2);
  double bound = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const Vector s = halton_point(static_cast<std::uint64_t>(k), 4);
    bound = std::max(bound, spectral_norm(pc.derivatives(s.head(2), s.tail(2)).dxx));
  }
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const PotentialField u = random_atom_potential(rng, Grid(unit, 40), pc, 25);
    for (int m : {1, 2, 4}) CHECK(semiconvexity_constant(u, m * u.grid().max_spacing()) <= bound + 1e-6);
  }
}
