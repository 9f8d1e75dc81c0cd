#include "doctest.h"

#include "ctlab/error.hpp"
#include "ctlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace ctlab;

namespace {

Vector v1(double a) {
  Vector v(1);
  v << a;
  return v;
}

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

AtomCloud line_cloud(double lo, double hi, int count) {
  Matrix pos(1, count);
  for (int k = 0; k < count; ++k) pos(0, k) = lo + (k + 0.5) * (hi - lo) / count;
  return make_cloud(pos, Vector::Ones(count), Box(v1(lo), v1(hi)));
}

// Cell centres of an r x r lattice on the box, equal weights.
AtomCloud lattice_cloud(const Box& box, int r) {
  Grid g(box, r);
  return make_cloud(g.centers(), Vector::Ones(g.cell_count()), box);
}

// Minimum over all permutations of sum_i c(i, sigma(i)) / n.
double brute_force_assignment(const Matrix& c, std::vector<int>* best_perm = nullptr) {
  const int n = static_cast<int>(c.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += c(i, perm[static_cast<std::size_t>(i)]);
    if (s < best) {
      best = s;
      if (best_perm) *best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

void require_invariants(const TransportPlan& plan, const Matrix& c, const Vector& a, const Vector& b) {
  const PlanCheck chk = check_plan(plan, c, a, b);
  CHECK(chk.row_error <= 1e-9);
  CHECK(chk.column_error <= 1e-9);
  CHECK(chk.dual_violation <= 1e-9);
  CHECK(chk.support_slack <= 1e-9);
}

}  // namespace

TEST_CASE("stratified sampling of a uniform box") {
  const AtomCloud cloud = sample_density(DensitySpec::uniform_box(Box::cube(2, 0.0, 1.0)), 4, 7);
  REQUIRE(cloud.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(cloud.weights[i] == doctest::Approx(0.25).epsilon(1e-14));
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 4; ++i) pts.emplace_back(cloud.positions(0, i), cloud.positions(1, i));
  std::sort(pts.begin(), pts.end());
  CHECK(pts[0] == std::make_pair(0.25, 0.25));
  CHECK(pts[3] == std::make_pair(0.75, 0.75));
}

TEST_CASE("union of balls keeps atoms inside the support") {
  const DensitySpec spec = DensitySpec::union_of_balls({{v2(-2, 0), 1.0}, {v2(2, 0), 1.0}});
  const AtomCloud cloud = sample_density(spec, 500, 3);
  CHECK(cloud.size() >= 400);
  for (int i = 0; i < cloud.size(); ++i) {
    const Point x = cloud.atom(i);
    CHECK(std::min((x - v2(-2, 0)).norm(), (x - v2(2, 0)).norm()) <= 1.0);
  }
  CHECK(cloud.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gaussian mixture first moment") {
  // Single component well inside the truncation box: the mean is analytic.
  const double sigma = 0.3;
  const DensitySpec spec = DensitySpec::gaussian_mixture({{v2(0.2, -0.1), sigma, 1.0}}, Box::cube(2, -2.0, 2.0));
  const int n = 900;
  const AtomCloud cloud = sample_density(spec, n, 11);
  const Point mean = cloud.positions * cloud.weights;
  CHECK((mean - v2(0.2, -0.1)).norm() <= 3.0 * sigma / std::sqrt(n));
}

TEST_CASE("empty support is rejected") {
  DensitySpec spec = DensitySpec::csv_grid(Matrix::Zero(2, 3), Vector::Zero(3));
  CHECK_THROWS_AS(sample_density(spec, 10, 1), Error);
}

TEST_CASE("single atom plan") {
  const Box b = Box::cube(2, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::SquaredDistance, b, b);
  const AtomCloud src = make_cloud(v2(0.1, 0.2), Vector::Ones(1), b);
  const AtomCloud tgt = make_cloud(v2(0.7, 0.9), Vector::Ones(1), b);
  const TransportPlan plan = solve_discrete(c, src, tgt);
  REQUIRE(plan.couplings.size() == 1);
  CHECK(plan.couplings[0].mass == doctest::Approx(1.0));
  CHECK(plan.objective == doctest::Approx(eval_cost(c, v2(0.1, 0.2), v2(0.7, 0.9))));
}

TEST_CASE("one dimensional shift is the monotone matching") {
  const AtomCloud src = line_cloud(0.0, 1.0, 200);
  const AtomCloud tgt = line_cloud(1.0, 2.0, 200);
  const CostModel c = make_cost(CostKind::SquaredDistance, src.domain_box, tgt.domain_box);
  const TransportPlan exact = solve_discrete(c, src, tgt);
  const TransportPlan oracle = oracle_1d(c, src, tgt);
  CHECK(std::abs(exact.objective - 0.5) <= 1e-9);
  CHECK(std::abs(oracle.objective - 0.5) <= 1e-9);
  CHECK(exact.gap <= 1e-8 * std::abs(exact.objective));
  REQUIRE(exact.couplings.size() == 200);
  for (const Coupling& k : exact.couplings) CHECK(k.i == k.j);
  require_invariants(exact, cost_matrix(c, src, tgt), src.weights, tgt.weights);
}

TEST_CASE("explicit two by two matrix") {
  Matrix c(2, 2);
  c << 0, 1, 1, 0;
  const Vector w = Vector::Constant(2, 0.5);
  const TransportPlan plan = solve_matrix(c, w, w);
  CHECK(plan.objective == doctest::Approx(0.0));
  REQUIRE(plan.couplings.size() == 2);
  for (const Coupling& k : plan.couplings) CHECK(k.i == k.j);
  require_invariants(plan, c, w, w);
}

TEST_CASE("oracle pairs sorted atoms") {
  Matrix pos(1, 2);
  pos << 0.2, 0.6;
  Matrix tpos(1, 2);
  tpos << 0.3, 0.9;
  const Box b(v1(0), v1(1));
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const TransportPlan plan = oracle_1d(c, make_cloud(pos, Vector::Ones(2), b), make_cloud(tpos, Vector::Ones(2), b));
  REQUIRE(plan.couplings.size() == 2);
  for (const Coupling& k : plan.couplings) CHECK(k.i == k.j);
}

TEST_CASE("antitone cost reverses the pairing") {
  const Box b(v1(0), v1(1));
  const CostModel c = make_cost(CostKind::AntiBilinear, b, b);
  Matrix pos(1, 3);
  pos << 0.1, 0.5, 0.8;
  Matrix tpos(1, 3);
  tpos << 0.2, 0.4, 0.95;
  const AtomCloud src = make_cloud(pos, Vector::Ones(3), b);
  const AtomCloud tgt = make_cloud(tpos, Vector::Ones(3), b);
  const Matrix cm = cost_matrix(c, src, tgt);
  std::vector<int> perm;
  const double best = brute_force_assignment(cm, &perm);
  CHECK(perm == std::vector<int>{2, 1, 0});
  const double identity = (cm(0, 0) + cm(1, 1) + cm(2, 2)) / 3.0;
  CHECK(best < identity);
  const TransportPlan plan = oracle_1d(c, src, tgt);
  CHECK(plan.objective == doctest::Approx(best).epsilon(1e-12));
  for (const Coupling& k : plan.couplings) CHECK(k.j == 2 - k.i);
  CHECK(solve_discrete(c, src, tgt).objective == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("oracle refuses a sign-changing mixed partial") {
  const Box b(v1(-1), v1(1));
  const CostModel c = make_cost(CostKind::SquaredBilinear, b, b);
  CHECK_THROWS_AS(oracle_1d(c, line_cloud(-1, 1, 4), line_cloud(-1, 1, 4)), Error);
}

TEST_CASE("exact solver matches brute force on random assignments") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 6;
    Matrix c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = u(rng);
    const Vector w = Vector::Constant(n, 1.0 / n);
    const TransportPlan plan = solve_matrix(c, w, w);
    CHECK(std::abs(plan.objective - brute_force_assignment(c)) <= 1e-12);
    CHECK(plan.gap <= 1e-8 * std::max(1.0, std::abs(plan.objective)));
    require_invariants(plan, c, w, w);
  }
}

TEST_CASE("unequal weights keep marginals and slackness") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 3 + trial % 9, n = 2 + (trial * 7) % 11;
    Matrix c(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = u(rng) * 3.0 - 1.0;
    Vector a(m), b(n);
    for (int i = 0; i < m; ++i) a[i] = u(rng);
    for (int j = 0; j < n; ++j) b[j] = u(rng);
    a /= a.sum();
    b /= b.sum();
    const TransportPlan plan = solve_matrix(c, a, b);
    require_invariants(plan, c, a, b);
    CHECK(plan.gap <= 1e-8 * std::max(1.0, std::abs(plan.objective)));
    CHECK(plan.gap >= -1e-12);
  }
}

TEST_CASE("bilinear cost on a shared cloud gives the identity coupling") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Box b = Box::cube(2, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  for (int n = 2; n <= 7; ++n) {
    Matrix pos(2, n);
    for (int k = 0; k < 2 * n; ++k) pos(k % 2, k / 2) = u(rng);
    const AtomCloud cloud = make_cloud(pos, Vector::Ones(n), b);
    const Matrix cm = cost_matrix(c, cloud, cloud);
    std::vector<int> perm;
    brute_force_assignment(cm, &perm);
    for (int i = 0; i < n; ++i) CHECK(perm[static_cast<std::size_t>(i)] == i);
    const TransportPlan plan = solve_discrete(c, cloud, cloud);
    for (const Coupling& k : plan.couplings) CHECK(k.i == k.j);
  }
}

TEST_CASE("entropic objective approaches the exact one") {
  const Box b = Box::cube(2, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::SquaredDistance, b, b);
  const AtomCloud src = sample_density(DensitySpec::uniform_box(b), 64, 1);
  const AtomCloud tgt = sample_density(DensitySpec::gaussian_mixture({{v2(0.5, 0.5), 0.3, 1.0}}, b), 64, 1);
  const TransportPlan exact = solve_discrete(c, src, tgt);
  for (double eps : {1e-2, 3e-3}) {
    SolverOptions opt;
    opt.method = SolverMethod::Entropic;
    opt.epsilon = eps;
    opt.max_iter = 200000;
    opt.tol = 1e-10;
    const TransportPlan ent = solve_discrete(c, src, tgt, opt);
    CHECK(std::abs(ent.objective - exact.objective) <= 10.0 * eps * std::log(64.0));
    const PlanCheck chk = check_plan(ent, cost_matrix(c, src, tgt), src.weights, tgt.weights);
    CHECK(chk.row_error <= 1e-12);
    CHECK(chk.column_error <= 1e-12);
  }
}

TEST_CASE("entropic iteration limit reports the gap") {
  const Box b = Box::cube(2, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::SquaredDistance, b, b);
  const AtomCloud src = sample_density(DensitySpec::uniform_box(b), 25, 1);
  const AtomCloud tgt = sample_density(DensitySpec::gaussian_mixture({{v2(0.3, 0.3), 0.2, 1.0}}, b), 25, 1);
  SolverOptions opt;
  opt.method = SolverMethod::Entropic;
  opt.epsilon = 1e-3;
  opt.max_iter = 2;
  opt.tol = 1e-14;
  try {
    solve_discrete(c, src, tgt, opt);
    FAIL("expected an iteration limit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IterationLimit);
    CHECK(std::string(e.what()).find("marginal gap") != std::string::npos);
  }
}

TEST_CASE("oversized problems are refused") {
  const Box b = Box::cube(1, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::SquaredDistance, b, b);
  try {
    solve_discrete(c, line_cloud(0, 1, 2001), line_cloud(0, 1, 2000));
    FAIL("expected too-large");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooLarge);
  }
}

TEST_CASE("potential of a single atom") {
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  TransportPlan plan;
  plan.target_duals = Vector::Zero(1);
  const AtomCloud tgt = make_cloud(v2(0.3, -0.4), Vector::Ones(1), b);
  const Point anchor = v2(0.1, 0.2);
  const PotentialField u = reconstruct_potential(plan, c, tgt, Grid(b, 16), anchor);
  for (CellIndex k = 0; k < u.grid().cell_count(); ++k) {
    const Point x = u.grid().center(k);
    CHECK(u.value(k) == doctest::Approx(x.dot(v2(0.3, -0.4)) - anchor.dot(v2(0.3, -0.4))).epsilon(1e-12));
    CHECK((transport_map(u, x) - v2(0.3, -0.4)).norm() <= 1e-9);
  }
}

TEST_CASE("identity case potential and map") {
  const Box b = Box::cube(2, 0.0, 1.0);
  const int r = 24;
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const AtomCloud cloud = lattice_cloud(b, r);
  const TransportPlan plan = solve_discrete(c, cloud, cloud);
  CHECK(plan.objective == doctest::Approx(-(cloud.positions.array().square().colwise().sum().mean())));
  const Grid grid(b, r);
  const PotentialField u = reconstruct_potential(plan, c, cloud, grid, b.center());
  const double s = grid.max_spacing();
  Vector diff(grid.cell_count());
  for (CellIndex k = 0; k < grid.cell_count(); ++k) diff[k] = u.value(k) - 0.5 * grid.center(k).squaredNorm();
  CHECK(diff.maxCoeff() - diff.minCoeff() <= 2.0 * s * s);
  for (CellIndex k = 0; k < grid.cell_count(); ++k) {
    if (grid.margin(k) < 1) continue;
    const Point x = grid.center(k);
    CHECK((transport_map(u, x) - x).norm() <= 2.0 * s);
  }
}

TEST_CASE("one dimensional shift potential") {
  const AtomCloud src = line_cloud(0.0, 1.0, 200);
  const AtomCloud tgt = line_cloud(1.0, 2.0, 200);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, src.domain_box, tgt.domain_box);
  const TransportPlan plan = solve_discrete(c, src, tgt);
  const Grid grid(src.domain_box, 200);
  const PotentialField u = reconstruct_potential(plan, c, tgt, grid, v1(0.5));
  const double s = grid.max_spacing();
  for (CellIndex k = 1; k + 1 < grid.cell_count(); ++k) {
    const double slope = (u.value(k + 1) - u.value(k - 1)) / (2.0 * s);
    const double x = grid.center(k)[0];
    CHECK(std::abs(slope - (x + 1.0)) <= 2.0 * s);
    CHECK(std::abs(transport_map(u, grid.center(k))[0] - (x + 1.0)) <= 2.0 * s);
  }
}

TEST_CASE("coarse entropic duals are refused") {
  const Box b = Box::cube(2, 0.0, 1.0);
  const CostModel c = make_cost(CostKind::SquaredDistance, b, b);
  const AtomCloud cloud = sample_density(DensitySpec::uniform_box(b), 16, 1);
  SolverOptions opt;
  opt.method = SolverMethod::Entropic;
  opt.epsilon = 0.05;
  const TransportPlan plan = solve_discrete(c, cloud, cloud, opt);
  CHECK_THROWS_AS(reconstruct_potential(plan, c, cloud, Grid(b, 8), b.center()), Error);
}

TEST_CASE("a kink is reported as nondifferentiable") {
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const PotentialField u =
      PotentialField::from_function(c, [](PointRef x) { return std::abs(x[0]); }, Grid::nodal(b, 41));
  try {
    transport_map(u, v2(0.0, 0.3));
    FAIL("expected a kink");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Nondifferentiable);
  }
  CHECK((transport_map(u, v2(0.5, 0.3)) - v2(1.0, 0.0)).norm() <= 1e-9);
}

TEST_CASE("Monge-Ampere residual of exact quadratics") {
  SUBCASE("two dimensions") {
    const Box b = Box::cube(2, -1.0, 1.0);
    const CostModel c = make_cost(CostKind::QuadraticBilinear, b, Box::cube(2, -2.0, 2.0));
    const Grid grid(b, 40);
    const PotentialField u =
        PotentialField::from_function(c, [](PointRef x) { return 0.5 * x.squaredNorm(); }, grid);
    CellSet region;
    for (CellIndex k = 0; k < grid.cell_count(); ++k)
      if (grid.margin(k) >= 2) region.push_back(k);
    const auto one = [](PointRef) { return 1.0; };
    const ScalarField r = ma_residual(u, c, one, one, region);
    for (CellIndex k : region) {
      REQUIRE(r.valid[static_cast<std::size_t>(k)]);
      CHECK(std::abs(r.values[k]) <= 1e-6);
    }
  }
  SUBCASE("one dimensional shift") {
    const Box b(v1(0), v1(1));
    const CostModel c = make_cost(CostKind::QuadraticBilinear, b, Box(v1(1), v1(2)));
    const Grid grid(b, 100);
    const PotentialField u =
        PotentialField::from_function(c, [](PointRef x) { return 0.5 * x[0] * x[0] + x[0]; }, grid);
    CellSet region;
    for (CellIndex k = 2; k < 98; ++k) region.push_back(k);
    const auto one = [](PointRef) { return 1.0; };
    const ScalarField r = ma_residual(u, c, one, one, region);
    for (CellIndex k : region) {
      REQUIRE(r.valid[static_cast<std::size_t>(k)]);
      CHECK(std::abs(r.values[k]) <= 1e-6);
    }
  }
}

TEST_CASE("Monge-Ampere residual self-convergence") {
  // Gaussian source onto the uniform square. The Hessian step scales like the
  // square root of the atom spacing, balancing the piecewise-affine error of
  // the discrete potential against stencil consistency.
  const Box b = Box::cube(2, -1.0, 1.0);
  const CostModel c = make_cost(CostKind::QuadraticBilinear, b, b);
  const DensitySpec fs = DensitySpec::gaussian_mixture({{v2(0, 0), 0.7, 1.0}}, b);
  const DensitySpec gs = DensitySpec::uniform_box(b);
  const double fm = fs.mass(), gm = gs.mass();
  const auto f = [&](PointRef x) { return fs(x) / fm; };
  const auto g = [&](PointRef x) { return gs(x) / gm; };
  auto median_residual = [&](int r) {
    const TransportPlan plan = solve_discrete(c, sample_density(fs, r * r, 1), sample_density(gs, r * r, 1));
    const Grid grid(b, r);
    const PotentialField u = reconstruct_potential(plan, c, sample_density(gs, r * r, 1), grid, b.center());
    const double s = grid.max_spacing();
    const int m = static_cast<int>(std::lround(1.4 * std::sqrt(s) / s));
    CellSet region;
    for (CellIndex k = 0; k < grid.cell_count(); ++k)
      if (grid.center(k).norm() <= 0.3) region.push_back(k);
    const ScalarField res = ma_residual(u, c, f, g, region, m);
    std::vector<double> v;
    for (CellIndex k : region)
      if (res.valid[static_cast<std::size_t>(k)]) v.push_back(std::abs(res.values[k]));
    REQUIRE(v.size() * 2 >= region.size());
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  const double coarse = median_residual(20);
  const double fine = median_residual(40);
  CHECK(coarse / fine >= 1.7);
}
