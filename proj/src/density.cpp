#include "ctlab/density.hpp"

#include "ctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace ctlab {

namespace {

double ball_volume(int dim, double radius) {
  return std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0) * std::pow(radius, dim);
}

// Midpoint-rule integral over the support box with `per_axis` points per axis.
double quadrature_mass(const DensitySpec& spec, int per_axis) {
  const Box b = spec.support_box();
  const int n = b.dim();
  const Vector h = (b.hi - b.lo) / per_axis;
  std::int64_t total = 1;
  for (int a = 0; a < n; ++a) total *= per_axis;
  double sum = 0.0;
  Vector x(n);
  for (std::int64_t k = 0; k < total; ++k) {
    std::int64_t rem = k;
    for (int a = 0; a < n; ++a) {
      x[a] = b.lo[a] + (static_cast<double>(rem % per_axis) + 0.5) * h[a];
      rem /= per_axis;
    }
    sum += spec(x);
  }
  return sum * h.prod();
}

}  // namespace

std::string to_string(DensityType type) {
  switch (type) {
    case DensityType::UniformBox: return "uniform-on-box";
    case DensityType::UniformBall: return "uniform-on-ball";
    case DensityType::GaussianMixture: return "gaussian-mixture";
    case DensityType::UnionOfBalls: return "union-of-balls";
    case DensityType::CsvGrid: return "csv-grid";
  }
  return "unknown";
}

DensityType density_type_from_string(const std::string& name) {
  for (DensityType t : {DensityType::UniformBox, DensityType::UniformBall, DensityType::GaussianMixture,
                        DensityType::UnionOfBalls, DensityType::CsvGrid})
    if (to_string(t) == name) return t;
  throw Error(ErrorKind::InvalidSpec, "sample_density", "unknown density type '" + name + "'");
}

DensitySpec DensitySpec::uniform_box(const Box& box) {
  DensitySpec s;
  s.type = DensityType::UniformBox;
  s.box = box;
  return s;
}

DensitySpec DensitySpec::uniform_ball(PointRef center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidSpec, "sample_density", "ball radius must be positive");
  DensitySpec s;
  s.type = DensityType::UniformBall;
  s.balls = {Ball{center, radius}};
  return s;
}

DensitySpec DensitySpec::union_of_balls(std::vector<Ball> balls) {
  if (balls.empty()) throw Error(ErrorKind::InvalidSpec, "sample_density", "union of balls is empty");
  for (const Ball& b : balls)
    if (!(b.radius > 0.0)) throw Error(ErrorKind::InvalidSpec, "sample_density", "ball radius must be positive");
  DensitySpec s;
  s.type = DensityType::UnionOfBalls;
  s.balls = std::move(balls);
  return s;
}

DensitySpec DensitySpec::gaussian_mixture(std::vector<GaussianComponent> components, const Box& truncation) {
  if (components.empty()) throw Error(ErrorKind::InvalidSpec, "sample_density", "mixture has no components");
  DensitySpec s;
  s.type = DensityType::GaussianMixture;
  s.components = std::move(components);
  s.box = truncation;
  return s;
}

DensitySpec DensitySpec::csv_grid(Matrix points, Vector values) {
  if (points.cols() != values.size() || points.cols() == 0)
    throw Error(ErrorKind::InvalidSpec, "sample_density", "csv grid needs one value per point");
  if ((values.array() < 0.0).any()) throw Error(ErrorKind::InvalidSpec, "sample_density", "negative density");
  DensitySpec s;
  s.type = DensityType::CsvGrid;
  s.grid_points = std::move(points);
  s.grid_values = std::move(values);
  s.box = Box(s.grid_points.rowwise().minCoeff(), s.grid_points.rowwise().maxCoeff() +
                                                      Vector::Constant(s.grid_points.rows(), 1e-12));
  return s;
}

DensitySpec DensitySpec::csv_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidSpec, "sample_density", "cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorKind::InvalidSpec, "sample_density", "ragged csv grid");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() < 2) throw Error(ErrorKind::InvalidSpec, "sample_density", "empty csv grid");
  const auto n = static_cast<Eigen::Index>(rows.front().size() - 1);
  Matrix pts(n, static_cast<Eigen::Index>(rows.size()));
  Vector vals(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index a = 0; a < n; ++a) pts(a, static_cast<Eigen::Index>(r)) = rows[r][static_cast<std::size_t>(a)];
    vals[static_cast<Eigen::Index>(r)] = rows[r].back();
  }
  return csv_grid(std::move(pts), std::move(vals));
}

int DensitySpec::dim() const {
  switch (type) {
    case DensityType::UniformBox:
    case DensityType::GaussianMixture: return box.dim();
    case DensityType::UniformBall:
    case DensityType::UnionOfBalls: return static_cast<int>(balls.front().center.size());
    case DensityType::CsvGrid: return static_cast<int>(grid_points.rows());
  }
  return 0;
}

Box DensitySpec::support_box() const {
  switch (type) {
    case DensityType::UniformBox:
    case DensityType::GaussianMixture:
    case DensityType::CsvGrid: return box;
    case DensityType::UniformBall:
    case DensityType::UnionOfBalls: {
      Vector lo = balls.front().center.array() - balls.front().radius;
      Vector hi = balls.front().center.array() + balls.front().radius;
      for (const Ball& b : balls) {
        lo = lo.cwiseMin((b.center.array() - b.radius).matrix());
        hi = hi.cwiseMax((b.center.array() + b.radius).matrix());
      }
      return Box(lo, hi);
    }
  }
  return box;
}

double DensitySpec::operator()(PointRef x) const {
  switch (type) {
    case DensityType::UniformBox: return box.contains(x) ? 1.0 : 0.0;
    case DensityType::UniformBall:
    case DensityType::UnionOfBalls:
      for (const Ball& b : balls)
        if ((x - b.center).norm() <= b.radius) return 1.0;
      return 0.0;
    case DensityType::GaussianMixture: {
      if (!box.contains(x)) return 0.0;
      const int n = dim();
      double v = 0.0;
      for (const GaussianComponent& g : components)
        v += g.weight * std::exp(-0.5 * (x - g.mean).squaredNorm() / (g.sigma * g.sigma)) /
             std::pow(std::sqrt(2.0 * std::numbers::pi) * g.sigma, n);
      return v;
    }
    case DensityType::CsvGrid: {
      // Nearest tabulated point.
      Eigen::Index best = 0;
      (grid_points.colwise() - x).colwise().squaredNorm().minCoeff(&best);
      return grid_values[best];
    }
  }
  return 0.0;
}

double DensitySpec::mass() const {
  switch (type) {
    case DensityType::UniformBox: return box.volume();
    case DensityType::UniformBall: return ball_volume(dim(), balls.front().radius);
    case DensityType::UnionOfBalls: {
      bool disjoint = true;
      for (std::size_t a = 0; a < balls.size(); ++a)
        for (std::size_t b = a + 1; b < balls.size(); ++b)
          if ((balls[a].center - balls[b].center).norm() < balls[a].radius + balls[b].radius) disjoint = false;
      if (disjoint) {
        double m = 0.0;
        for (const Ball& b : balls) m += ball_volume(dim(), b.radius);
        return m;
      }
      return quadrature_mass(*this, dim() == 1 ? 200000 : dim() == 2 ? 1000 : 100);
    }
    case DensityType::GaussianMixture:
    case DensityType::CsvGrid: return quadrature_mass(*this, dim() == 1 ? 200000 : dim() == 2 ? 1000 : 100);
  }
  return 1.0;
}

AtomCloud make_cloud(Matrix positions, Vector weights, const Box& domain_box) {
  if (positions.cols() != weights.size() || positions.cols() == 0)
    throw Error(ErrorKind::InvalidSpec, "atom_cloud", "need one weight per atom");
  if ((weights.array() < 0.0).any()) throw Error(ErrorKind::InvalidSpec, "atom_cloud", "negative weight");
  const double total = weights.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::InvalidSpec, "atom_cloud", "zero total mass");
  AtomCloud cloud;
  cloud.positions = std::move(positions);
  cloud.weights = weights / total;
  cloud.domain_box = domain_box;
  for (int i = 0; i < cloud.size(); ++i)
    if (!domain_box.contains(cloud.positions.col(i), 1e-12))
      throw Error(ErrorKind::InvalidSpec, "atom_cloud", "atom outside the domain box");
  return cloud;
}

AtomCloud sample_density(const DensitySpec& spec, int n_atoms, std::uint64_t seed) {
  if (n_atoms < 1) throw Error(ErrorKind::InvalidSpec, "sample_density", "need at least one atom");
  if (spec.type == DensityType::CsvGrid) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < spec.grid_values.size(); ++r)
      if (spec.grid_values[r] > 0.0) keep.push_back(r);
    if (keep.empty()) throw Error(ErrorKind::InvalidSpec, "sample_density", "empty support");
    Matrix pos(spec.dim(), static_cast<Eigen::Index>(keep.size()));
    Vector w(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      pos.col(static_cast<Eigen::Index>(k)) = spec.grid_points.col(keep[k]);
      w[static_cast<Eigen::Index>(k)] = spec.grid_values[keep[k]];
    }
    return make_cloud(std::move(pos), std::move(w), spec.support_box());
  }

  const Box box = spec.support_box();
  const int n = box.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto strata = [&](int per_axis, bool draw) {
    std::vector<std::pair<Point, double>> atoms;
    std::int64_t total = 1;
    for (int a = 0; a < n; ++a) total *= per_axis;
    const Vector h = (box.hi - box.lo) / per_axis;
    Vector x(n);
    for (std::int64_t k = 0; k < total; ++k) {
      std::int64_t rem = k;
      for (int a = 0; a < n; ++a) {
        const double offset = (draw && spec.jitter) ? unif(rng) : 0.5;
        x[a] = box.lo[a] + (static_cast<double>(rem % per_axis) + offset) * h[a];
        rem /= per_axis;
      }
      const double d = spec(x);
      if (d > 0.0) atoms.emplace_back(x, d);
    }
    return atoms;
  };

  int per_axis = std::max(1, static_cast<int>(std::lround(std::pow(n_atoms, 1.0 / n))));
  const auto probe = strata(per_axis, false);
  if (!probe.empty() && static_cast<int>(probe.size()) < n_atoms) {
    const double fill = static_cast<double>(probe.size()) / std::pow(per_axis, n);
    per_axis = std::max(per_axis, static_cast<int>(std::lround(std::pow(n_atoms / fill, 1.0 / n))));
  }
  const auto atoms = strata(per_axis, true);
  if (atoms.empty()) throw Error(ErrorKind::InvalidSpec, "sample_density", "empty support");
  Matrix pos(n, static_cast<Eigen::Index>(atoms.size()));
  Vector w(static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    pos.col(static_cast<Eigen::Index>(k)) = atoms[k].first;
    w[static_cast<Eigen::Index>(k)] = atoms[k].second;
  }
  return make_cloud(std::move(pos), std::move(w), box);
}

}  // namespace ctlab
