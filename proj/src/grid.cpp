#include "ctlab/grid.hpp"

#include "ctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace ctlab {

Grid::Grid(Box box, std::vector<int> resolution) : box_(std::move(box)), res_(std::move(resolution)) {
  if (static_cast<int>(res_.size()) != box_.dim())
    throw Error(ErrorKind::InvalidSpec, "grid", "resolution and box dimension differ");
  if (std::any_of(res_.begin(), res_.end(), [](int r) { return r < 1; }))
    throw Error(ErrorKind::InvalidSpec, "grid", "resolution must be positive");
  const int n = dim();
  spacing_.resize(n);
  stride_.resize(static_cast<std::size_t>(n));
  std::int64_t count = 1;
  for (int a = 0; a < n; ++a) {
    spacing_[a] = (box_.hi[a] - box_.lo[a]) / res_[static_cast<std::size_t>(a)];
    stride_[static_cast<std::size_t>(a)] = static_cast<CellIndex>(count);
    count *= res_[static_cast<std::size_t>(a)];
  }
  if (count > (std::int64_t{1} << 30))
    throw Error(ErrorKind::TooLarge, "grid", "too many cells");
  count_ = static_cast<CellIndex>(count);
  centers_.resize(n, count_);
  for (CellIndex c = 0; c < count_; ++c) {
    CellIndex rem = c;
    for (int a = 0; a < n; ++a) {
      const int k = rem % res_[static_cast<std::size_t>(a)];
      rem /= res_[static_cast<std::size_t>(a)];
      centers_(a, c) = box_.lo[a] + (k + 0.5) * spacing_[a];
    }
  }
}

Grid::Grid(Box box, int resolution) : Grid(box, std::vector<int>(static_cast<std::size_t>(box.dim()), resolution)) {}

Grid Grid::nodal(const Box& nodes, int nodes_per_axis) {
  if (nodes_per_axis < 2) throw Error(ErrorKind::InvalidSpec, "grid", "need at least two nodes per axis");
  const Vector h = (nodes.hi - nodes.lo) / (nodes_per_axis - 1);
  return Grid(Box(nodes.lo - 0.5 * h, nodes.hi + 0.5 * h), nodes_per_axis);
}

Point Grid::center(CellIndex idx) const { return centers_.col(idx); }

std::vector<int> Grid::multi_index(CellIndex idx) const {
  std::vector<int> mi(res_.size());
  for (std::size_t a = 0; a < res_.size(); ++a) {
    mi[a] = idx % res_[a];
    idx /= res_[a];
  }
  return mi;
}

CellIndex Grid::flat_index(const std::vector<int>& mi) const {
  CellIndex idx = 0;
  for (std::size_t a = 0; a < res_.size(); ++a) {
    if (mi[a] < 0 || mi[a] >= res_[a]) return -1;
    idx += mi[a] * stride_[a];
  }
  return idx;
}

CellIndex Grid::shifted(CellIndex idx, int axis, int offset) const {
  const auto a = static_cast<std::size_t>(axis);
  const int k = (idx / stride_[a]) % res_[a] + offset;
  if (k < 0 || k >= res_[a]) return -1;
  return idx + offset * stride_[a];
}

CellIndex Grid::shifted(CellIndex idx, const std::vector<int>& offsets) const {
  CellIndex out = idx;
  for (std::size_t a = 0; a < offsets.size(); ++a) {
    if (offsets[a] == 0) continue;
    out = shifted(out, static_cast<int>(a), offsets[a]);
    if (out < 0) return -1;
  }
  return out;
}

CellIndex Grid::locate(PointRef x) const {
  std::vector<int> mi(res_.size());
  for (std::size_t a = 0; a < res_.size(); ++a) {
    const auto ai = static_cast<Eigen::Index>(a);
    const double f = (x[ai] - box_.lo[ai]) / spacing_[ai];
    if (f < 0.0 || f > res_[a]) return -1;
    mi[a] = std::min(res_[a] - 1, static_cast<int>(std::floor(f)));
  }
  return flat_index(mi);
}

CellIndex Grid::nearest(PointRef x) const {
  std::vector<int> mi(res_.size());
  for (std::size_t a = 0; a < res_.size(); ++a) {
    const auto ai = static_cast<Eigen::Index>(a);
    const double f = (x[ai] - box_.lo[ai]) / spacing_[ai];
    mi[a] = std::clamp(static_cast<int>(std::floor(f)), 0, res_[a] - 1);
  }
  return flat_index(mi);
}

int Grid::margin(CellIndex idx) const {
  int m = 1 << 30;
  for (std::size_t a = 0; a < res_.size(); ++a) {
    const int k = (idx / stride_[a]) % res_[a];
    m = std::min({m, k, res_[a] - 1 - k});
  }
  return m;
}

bool Grid::operator==(const Grid& other) const {
  return res_ == other.res_ && box_.lo == other.box_.lo && box_.hi == other.box_.hi;
}

CellSet ball_cells(const Grid& grid, PointRef center, double radius) {
  CellSet out;
  const double r2 = radius * radius;
  for (CellIndex c = 0; c < grid.cell_count(); ++c)
    if ((grid.centers().col(c) - center).squaredNorm() <= r2) out.push_back(c);
  return out;
}

CellSet dilate(const Grid& grid, const CellSet& cells, int layers) {
  CellMask mask = to_mask(cells, static_cast<std::size_t>(grid.cell_count()));
  std::vector<CellIndex> frontier(cells.begin(), cells.end());
  for (int l = 0; l < layers; ++l) {
    std::vector<CellIndex> next;
    for (CellIndex c : frontier) {
      for (int a = 0; a < grid.dim(); ++a) {
        for (int s : {-1, 1}) {
          const CellIndex nb = grid.shifted(c, a, s);
          if (nb >= 0 && !mask[static_cast<std::size_t>(nb)]) {
            mask[static_cast<std::size_t>(nb)] = 1;
            next.push_back(nb);
          }
        }
      }
    }
    frontier = std::move(next);
  }
  return to_cells(mask);
}

CellSet boundary_cells(const Grid& grid, const CellSet& cells) {
  const CellMask mask = to_mask(cells, static_cast<std::size_t>(grid.cell_count()));
  CellSet out;
  for (CellIndex c : cells) {
    bool edge = false;
    for (int a = 0; a < grid.dim() && !edge; ++a) {
      for (int s : {-1, 1}) {
        const CellIndex nb = grid.shifted(c, a, s);
        if (nb < 0 || !mask[static_cast<std::size_t>(nb)]) {
          edge = true;
          break;
        }
      }
    }
    if (edge) out.push_back(c);
  }
  return out;
}

}  // namespace ctlab
