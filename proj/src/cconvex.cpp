#include "ctlab/cconvex.hpp"

#include "ctlab/error.hpp"
#include "ctlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace ctlab {

namespace {

double slack_for(const CostModel& cost) { return 1e-9 * std::max(1.0, cost.scale()); }

// Cells of `members` reachable from start through 2n-neighbours.
std::size_t flood_count(const Grid& grid, const CellMask& members, CellIndex start) {
  if (start < 0 || !members[static_cast<std::size_t>(start)]) return 0;
  CellMask seen(members.size(), 0);
  std::deque<CellIndex> queue{start};
  seen[static_cast<std::size_t>(start)] = 1;
  std::size_t count = 0;
  while (!queue.empty()) {
    const CellIndex c = queue.front();
    queue.pop_front();
    ++count;
    for (int a = 0; a < grid.dim(); ++a)
      for (int s : {-1, 1}) {
        const CellIndex nb = grid.shifted(c, a, s);
        if (nb < 0 || seen[static_cast<std::size_t>(nb)] || !members[static_cast<std::size_t>(nb)]) continue;
        seen[static_cast<std::size_t>(nb)] = 1;
        queue.push_back(nb);
      }
  }
  return count;
}

}  // namespace

CTransform c_transform(const PotentialField& u, const CostModel& cost, const Grid& target_grid) {
  const Grid& src = u.grid();
  Vector values(target_grid.cell_count());
  std::vector<CellIndex> argmax(static_cast<std::size_t>(target_grid.cell_count()));
  parallel_for(0, target_grid.cell_count(), [&](std::ptrdiff_t t) {
    const Point y = target_grid.centers().col(t);
    double best = -std::numeric_limits<double>::infinity();
    CellIndex best_c = 0;
    for (CellIndex c = 0; c < src.cell_count(); ++c) {
      const double s = -cost.value(src.centers().col(c), y) - u.value(c);
      if (s > best) {
        best = s;
        best_c = c;
      }
    }
    values[t] = best;
    argmax[static_cast<std::size_t>(t)] = best_c;
  });
  return {PotentialField::from_atoms_cached(transpose(cost), src.centers(), -u.values(), target_grid,
                                            std::move(values)),
          std::move(argmax)};
}

Vector c_transform_at(const PotentialField& u, const CostModel& cost, const Matrix& ys) {
  const Grid& src = u.grid();
  Vector out(ys.cols());
  parallel_for(0, ys.cols(), [&](std::ptrdiff_t j) {
    double best = -std::numeric_limits<double>::infinity();
    for (CellIndex c = 0; c < src.cell_count(); ++c)
      best = std::max(best, -cost.value(src.centers().col(c), ys.col(j)) - u.value(c));
    out[j] = best;
  });
  return out;
}

PotentialField double_transform(const PotentialField& u) {
  if (!u.has_atoms()) throw Error(ErrorKind::NotApplicable, "double_transform", "potential has no atoms");
  const Vector lambda = -c_transform_at(u, u.cost(), u.targets());
  return PotentialField::from_atoms(u.cost(), u.targets(), lambda, u.grid());
}

SlopeBox frechet_subdiff(const PotentialField& u, PointRef x, double step) { return slope_box(u, x, step); }

std::vector<int> c_subdiff(const PotentialField& u, PointRef x) {
  if (!u.has_atoms()) throw Error(ErrorKind::NotApplicable, "c_subdiff", "potential has no atoms");
  const CostModel& cost = u.cost();
  const Eigen::Index m = u.targets().cols();
  Vector score(m);
  for (Eigen::Index j = 0; j < m; ++j) score[j] = u.lambda()[j] - cost.value(x, u.targets().col(j));
  const double top = score.maxCoeff();
  const double slack = slack_for(cost);
  std::vector<int> out;
  for (Eigen::Index j = 0; j < m; ++j)
    if (score[j] >= top - slack) out.push_back(static_cast<int>(j));
  return out;
}

Point supporting_target(const PotentialField& u, PointRef x0) {
  if (u.has_atoms()) return u.targets().col(u.argmax(x0));
  return c_exp(u.cost(), x0, slope_box(u, x0).centered);
}

double section_energy(const PotentialField& u, const CostModel& cost, PointRef x0, PointRef y0, double u_x0,
                      CellIndex cell) {
  return u.value(cell) + cost.value(u.grid().centers().col(cell), y0) - cost.value(x0, y0) - u_x0;
}

Section section_extract(const PotentialField& u, const CostModel& cost, PointRef x0, PointRef y0, double h,
                        const SectionOptions& options) {
  if (!(h >= 0.0)) throw Error(ErrorKind::InvalidParameter, "section_extract", "height must be nonnegative");
  const Grid& grid = u.grid();
  Section s;
  s.x0 = x0;
  s.y0 = y0;
  s.h = h;
  s.center_cell = grid.locate(x0);
  if (s.center_cell < 0) s.center_cell = grid.nearest(x0);
  const double u0 = u(x0);
  const double c0 = cost.value(x0, y0);
  const double slack = options.subdiff_slack >= 0.0 ? options.subdiff_slack : slack_for(cost);
  const double level = h + 1e-9;
  auto energy = [&](CellIndex c) { return u.value(c) + cost.value(grid.centers().col(c), y0) - c0 - u0; };
  double min_energy = std::numeric_limits<double>::infinity();

  if (options.scan == SectionScan::Full) {
    Vector e(grid.cell_count());
    parallel_for(0, grid.cell_count(), [&](std::ptrdiff_t c) { e[c] = energy(static_cast<CellIndex>(c)); });
    min_energy = e.minCoeff();
    for (CellIndex c = 0; c < grid.cell_count(); ++c)
      if (e[c] <= level || c == s.center_cell) s.cells.push_back(c);
    const CellMask mask = to_mask(s.cells, static_cast<std::size_t>(grid.cell_count()));
    s.connected = flood_count(grid, mask, s.center_cell) == s.cells.size();
  } else {
    // Breadth-first search from the centre; the subdifferential check covers
    // the visited cells and their neighbours.
    CellMask seen(static_cast<std::size_t>(grid.cell_count()), 0);
    std::deque<CellIndex> queue{s.center_cell};
    seen[static_cast<std::size_t>(s.center_cell)] = 1;
    while (!queue.empty()) {
      const CellIndex c = queue.front();
      queue.pop_front();
      const double ec = energy(c);
      min_energy = std::min(min_energy, ec);
      if (ec > level && c != s.center_cell) continue;
      s.cells.push_back(c);
      for (int a = 0; a < grid.dim(); ++a)
        for (int d : {-1, 1}) {
          const CellIndex nb = grid.shifted(c, a, d);
          if (nb < 0 || seen[static_cast<std::size_t>(nb)]) continue;
          seen[static_cast<std::size_t>(nb)] = 1;
          queue.push_back(nb);
        }
    }
    std::sort(s.cells.begin(), s.cells.end());
    s.connected = true;
  }
  if (options.check_subdiff && min_energy < -slack)
    throw Error(ErrorKind::InvalidSection, "section_extract",
                "y0 is not in the c-subdifferential at x0 (defining expression reaches " +
                    std::to_string(min_energy) + ")");
  return s;
}

void normalize_section(const Grid& grid, Section& section) {
  const Normalization nz = john_normalize(grid, section.cells);
  section.affine = nz.map;
  section.sandwich_ratio = nz.sandwich_ratio;
  section.norm_size = nz.norm_size;
}

double semiconvexity_constant(const PotentialField& u, double step) {
  const double h = u.grid().spacing().minCoeff();
  const int m = std::max(1, static_cast<int>(std::lround(step / h)));
  return semiconvexity_from_values(u.grid(), u.values(), m);
}

}  // namespace ctlab
