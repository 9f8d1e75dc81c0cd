#pragma once

#include "ctlab/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ctlab {

enum class DensityType { UniformBox, UniformBall, GaussianMixture, UnionOfBalls, CsvGrid };

std::string to_string(DensityType type);
DensityType density_type_from_string(const std::string& name);

struct Ball {
  Point center;
  double radius = 1.0;
};

struct GaussianComponent {
  Point mean;
  double sigma = 1.0;
  double weight = 1.0;
};

/// A density on R^n, known up to normalization.
struct DensitySpec {
  DensityType type = DensityType::UniformBox;
  Box box;                                   // uniform box; truncation box for mixtures
  std::vector<Ball> balls;                   // uniform ball (one entry) or union of balls
  std::vector<GaussianComponent> components;
  Matrix grid_points;                        // csv-grid: dim x rows
  Vector grid_values;                        // csv-grid: density per row
  bool jitter = false;                       // random offsets inside strata (uses the seed)

  static DensitySpec uniform_box(const Box& box);
  static DensitySpec uniform_ball(PointRef center, double radius);
  static DensitySpec union_of_balls(std::vector<Ball> balls);
  static DensitySpec gaussian_mixture(std::vector<GaussianComponent> components, const Box& truncation);
  static DensitySpec csv_grid(Matrix points, Vector values);
  /// Parses "x_1,...,x_n,density" rows (header row required).
  static DensitySpec csv_grid_file(const std::string& path);

  int dim() const;
  Box support_box() const;
  /// Unnormalized density value (0 outside the support).
  double operator()(PointRef x) const;
  /// Total mass of the unnormalized density (closed form where available,
  /// midpoint quadrature otherwise).
  double mass() const;
  /// Density scaled to unit mass.
  double normalized(PointRef x) const { return (*this)(x) / mass(); }
};

/// Discrete measure: positions (dim x size) with nonnegative weights summing to 1.
struct AtomCloud {
  Matrix positions;
  Vector weights;
  Box domain_box;

  int dim() const { return static_cast<int>(positions.rows()); }
  int size() const { return static_cast<int>(positions.cols()); }
  Point atom(int i) const { return positions.col(i); }
};

AtomCloud make_cloud(Matrix positions, Vector weights, const Box& domain_box);

/// Stratified sampling: strata are the cells of a regular lattice over the
/// support box, refined so that about n_atoms strata meet the support. Each
/// stratum contributes its centre, weighted by the density there.
AtomCloud sample_density(const DensitySpec& spec, int n_atoms, std::uint64_t seed);

}  // namespace ctlab
