#pragma once

#include "ctlab/cconvex.hpp"
#include "ctlab/cost.hpp"
#include "ctlab/grid.hpp"
#include "ctlab/potential.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace ctlab {

/// Centred second differences of u at a step of t = step_multiplier cells.
struct HessianField {
  Grid grid;
  int step_multiplier = 1;
  double step = 0.0;         // t along the coarsest axis
  Matrix entries;            // n*n x cells, column-major per cell
  Vector norm;               // spectral norm per cell
  Vector frobenius;          // diagnostics only
  Vector min_quotient;       // smallest axis or diagonal quotient (+inf when invalid)
  CellMask valid;            // every stencil point inside the grid
  CellMask kink;             // one-sided slopes at one cell differ by more than 10 s (1 + K)
  double semiconvexity = 0.0;  // K at the same step

  Matrix at(CellIndex cell) const;
  CellSet valid_cells() const;
  CellSet kink_cells() const;
};

/// Hessian estimate from n axis and n(n-1)/2 pairs of diagonal stencils.
/// Cells too close to the rim are left invalid.
HessianField hessian_field(const PotentialField& u, int step_multiplier = 1);

struct EngulfingOptions {
  Point center;              // sample ball; defaults to the grid box centre
  double radius = -1.0;      // defaults to a quarter of the smallest box side
  double h_cap = 0.1;        // r0: largest admissible height
  double c_max = 64.0;
  double resolution = 0.05;  // bisection stop width in C
};

struct EngulfingRow {
  double h = 0.0;
  int samples = 0;
  int skipped = 0;   // empty or invalid sections
  int capped = 0;    // inclusion failed even at c_max
  double max_c = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double c_prime = 0.0;  // (max C)^2
  std::vector<double> constants;
};

/// Minimal C in [1, c_max] with S_h(x0, y0) inside S_{C h}(x1, y1), by
/// bisection to `resolution`. Returns c_max + resolution when even c_max fails.
double engulfing_constant(const PotentialField& u, const CostModel& cost, PointRef x0, PointRef y0, PointRef x1,
                          PointRef y1, double h, double c_max = 64.0, double resolution = 0.05);

/// Samples x0 in the configured ball and x1 uniformly in S_h(x0), for every h.
/// The same (x0, relative pick) stream is used at each height.
std::vector<EngulfingRow> engulfing_estimate(const PotentialField& u, const CostModel& cost, int samples,
                                             const std::vector<double>& heights, std::uint64_t seed,
                                             const EngulfingOptions& options = {});

struct DensityEstimate {
  double a = 0.0;              // normalized size ||A^{-1}||^2
  double bad_fraction = 0.0;   // |{||D^2 u|| >= N a}| / |S|
  double band_fraction = 0.0;  // |{a/N <= ||D^2 u|| <= N a}| / |S|
  int cells = 0;               // valid cells used
};

/// Fractions over the valid cells of a normalized section. Throws
/// InsufficientResolution below 10 cells and InvalidParameter when the
/// section carries no affine map.
DensityEstimate section_density_estimate(const HessianField& hess, const Section& section, double N);

struct DecayOptions {
  double M = 4.0;
  double N = 2.0;
  int levels = 3;
  double rho0 = 0.5;
  Point center;               // defaults to the grid box centre
  double h0 = 0.05;           // top of the height ladder
  int ladder = 12;            // heights h0, h0/2, ...
  int bisection_steps = 10;
  double tau = 2.0;           // multiplicative band for a(S_h)
  double sigma = 0.5;
  double c_prime = 4.0;
  int theta_samples = 16;
  int max_candidates = 4000;  // deterministic stride subsample above this
};

struct LevelRow {
  int k = 0;
  double rho = 0.0;
  double measure = 0.0;
  double fraction = 0.0;  // measure over |B_rho0 ∩ valid|
  double ratio = std::numeric_limits<double>::quiet_NaN();  // |D_{k+1}| / |D_k|, NaN when |D_k| = 0
  int cells = 0;
  int candidates = 0;
  int sections_selected = 0;
  int bisection_failures = 0;
  double mean_bad_fraction = 0.0;
  double covering_bound = 0.0;  // sum over selected of |S_h ∩ {||D^2 u|| >= N^2 M^k}|
  double band_mass = 0.0;       // sum over selected of |S_{sigma h} ∩ {M^k <= ||D^2 u|| <= N^2 M^k}|
  std::vector<double> bad_fractions;
};

struct LevelSetTable {
  double M = 0.0;
  double N = 0.0;
  double rho0 = 0.0;
  double theta = 0.0;
  double beta = 0.0;
  double log_c_hat = 0.0;
  bool collapsed = false;  // the radius ladder hit rho0 / 2 and was cut short
  std::vector<LevelRow> rows;
  std::vector<CellSet> level_cells;  // D_k
};

/// D_k = {x in B_{rho_k} : ||D^2 u|| >= M^k} with rho_k from the measured
/// theta, beta and C-hat, and the section covering of every D_{k+1}.
LevelSetTable levelset_decay(const PotentialField& u, const CostModel& cost, const HessianField& hess,
                             const DecayOptions& options = {});

/// Largest max_k ratio, treating undefined ratios as 0.
double max_ratio(const LevelSetTable& table);

struct SingularMask {
  Grid grid;
  CellSet cells;             // Σ_ε
  CellSet kink_cells;        // criterion (a) before dilation
  CellSet section_cells;     // criterion (b) before dilation
  double kink_tol_factor = 10.0;
  double ratio_cap = 0.0;
  double h0 = 0.0;
  int ladder = 9;
  double measure = 0.0;

  double fraction(double domain_measure) const { return measure / domain_measure; }
};

struct W2pResult {
  double direct = 0.0;
  double layer_cake = 0.0;
  double region_measure = 0.0;
  int cells = 0;
};

/// Sum of ||D^2 u||^p over the valid cells of region minus the mask, and the
/// bound |region| + p sum_k M^{(k+1)p} |{||D^2 u|| >= M^k} ∩ region| over
/// every nonempty level.
W2pResult w2p_norm(const HessianField& hess, const CellSet& region, double p, const SingularMask* exclude = nullptr,
                   double M = 4.0);

/// A domain cell is singular when its one-cell slope gap exceeds the kink
/// tolerance, or when no height in {h0, h0/2, ..., h0/2^(ladder-1)} gives a
/// normalizable section with sandwich ratio at most ratio_cap. The union is
/// dilated by one cell. An empty domain means every grid cell.
SingularMask singular_detect(const PotentialField& u, const CostModel& cost, double h0, double ratio_cap,
                             const CellSet& domain = {}, int ladder = 9);

struct BoundaryFamily {
  int k = 0;
  double h_lo = 0.0;
  double h_hi = 0.0;
  int candidates = 0;
  int n_sections = 0;
  double power_sum = 0.0;
};

struct BoundaryOptions {
  double p = 2.0;
  int families = 6;
  double sigma = 0.5;
  double c_prime = 1.0;
};

struct BoundaryProfile {
  Vector h_bar;          // NaN outside the domain
  CellMask interior;     // h_bar reached the cap h0
  CellSet boundary;      // domain cells touching the outside: h_bar = 0
  bool domain_convex = true;
  double h0 = 0.0;
  std::vector<BoundaryFamily> families;
  double fitted_rate = std::numeric_limits<double>::quiet_NaN();  // exp(slope of log power_sum vs k)
};

/// h_bar(x) = max{h : S_h(x) ⊆ domain}, computed as the smallest defining
/// expression over cells outside the domain, which is the limit of bisection
/// on the inclusion predicate.
BoundaryProfile boundary_heights(const PotentialField& u, const CostModel& cost, const CellSet& domain, double h0,
                                 const HessianField& hess, const BoundaryOptions& options = {});

}  // namespace ctlab
