#pragma once

#include "ctlab/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

namespace ctlab {

enum class CostKind {
  QuadraticBilinear,  // -x.y
  SquaredDistance,    // |x-y|^2 / 2
  Power,              // |x-y|^p / p, p > 1
  PerturbedBilinear,  // -x.y + delta * phi(x, y)
  AntiBilinear,       // +x.y
  SquaredBilinear,    // -(x.y)^2 / 2, degenerate where x.y = 0
};

/// Built-in smooth perturbations for PerturbedBilinear.
enum class Bump {
  Phi1,  // sin(pi x_1) sin(pi y_1)
  Phi2,  // exp(-|x-y|^2)
};

std::string to_string(CostKind kind);
CostKind cost_kind_from_string(const std::string& name);
std::string to_string(Bump bump);
Bump bump_from_string(const std::string& name);

/// Analytic value and derivatives of c at one (x, y). dxy(i, j) = d^2 c / dx_i dy_j.
struct CostDerivatives {
  double value = 0.0;
  Vector dx;
  Vector dy;
  Matrix dxx;
  Matrix dxy;
  Matrix dyy;
};

/// Evaluable cost c(x, y) on source_box x target_box.
///
/// `transposed` swaps the roles of the two arguments (the cost seen from the
/// target side). `normalization`, when set to (x0, y0), replaces c by
/// c(x,y) - c(x,y0) - c(x0,y) + c(x0,y0), which leaves optimal plans and
/// sections unchanged.
struct CostModel {
  CostKind kind = CostKind::QuadraticBilinear;
  double exponent = 2.0;
  double delta = 0.0;
  Bump bump = Bump::Phi1;
  Box source_box;
  Box target_box;
  bool transposed = false;
  std::optional<std::pair<Point, Point>> normalization;

  int dim() const { return source_box.dim(); }

  /// Unchecked value; hot loops call this directly.
  double value(PointRef x, PointRef y) const;
  /// Unchecked derivative bundle. Throws Singularity for power costs with
  /// p < 2 at x = y.
  CostDerivatives derivatives(PointRef x, PointRef y) const;
  /// Unchecked D_x c(x, y).
  Vector grad_x(PointRef x, PointRef y) const;

  /// Typical magnitude of |c| over the boxes (used for relative tolerances).
  double scale() const;
  /// Upper bound for |D_y c| over the boxes, sampled.
  double lipschitz_y() const;
  double lipschitz_x() const;
};

CostModel make_cost(CostKind kind, const Box& source_box, const Box& target_box, double exponent = 2.0,
                    double delta = 0.0, Bump bump = Bump::Phi1);
CostModel transpose(const CostModel& cost);
/// The normalization c(x,y) - c(x,y0) - c(x0,y) + c(x0,y0).
CostModel normalize_at(const CostModel& cost, PointRef x0, PointRef y0);

/// c(x, y) with a domain check on both points.
double eval_cost(const CostModel& cost, PointRef x, PointRef y);
/// Derivative bundle with a domain check.
CostDerivatives cost_derivatives(const CostModel& cost, PointRef x, PointRef y);

/// The y solving p = -D_x c(x, y), by damped Newton seeded at y = p.
Point c_exp(const CostModel& cost, PointRef x, PointRef p);

struct ConditionReport {
  double c0_norm = 0.0;  // sampled bound on the C^3 norm
  bool c1_ok = true;
  double c1_worst_ratio = 0.0;  // min |D_x c(x,y) - D_x c(x,y')| / |y - y'|
  std::optional<std::array<Point, 3>> c1_witness;  // x, y, y'
  bool c2_ok = true;
  double c2_worst_ratio = 0.0;
  std::optional<std::array<Point, 3>> c2_witness;  // y, x, x'
  double c3_min_absdet = 0.0;
  double c3_max_absdet = 0.0;
  bool c3_ok = true;
  double delta_hat = 0.0;  // sampled ||c + x.y||_{C^2}
  int sample_count = 0;
};

/// Sampled checks of smoothness, twist injectivity, non-degeneracy and the
/// C^2 distance to -x.y.
ConditionReport check_conditions(const CostModel& cost, int n_samples, std::uint64_t seed);

/// Largest singular value.
double spectral_norm(const Matrix& m);

/// Point i (0-based) of the Halton sequence in `dim` dimensions, in [0,1)^dim.
Vector halton_point(std::uint64_t index, int dim);

}  // namespace ctlab
