#include "ctlab/types.hpp"

#include "ctlab/error.hpp"

#include <algorithm>
#include <iterator>

namespace ctlab {

Box::Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw Error(ErrorKind::InvalidSpec, "box", "box corners must share a positive dimension");
  if ((hi.array() <= lo.array()).any())
    throw Error(ErrorKind::InvalidSpec, "box", "box must have hi > lo on every axis");
}

Box Box::cube(int dim, double lo, double hi) {
  return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

bool Box::contains(PointRef x, double tol) const {
  if (x.size() != lo.size()) return false;
  const double slack = tol * std::max(1.0, diameter());
  return ((x.array() >= lo.array() - slack) && (x.array() <= hi.array() + slack)).all();
}

Box Box::hull_with(const Box& other) const {
  return Box(lo.cwiseMin(other.lo), hi.cwiseMax(other.hi));
}

CellMask to_mask(const CellSet& cells, std::size_t cell_count) {
  CellMask mask(cell_count, 0);
  for (CellIndex c : cells) mask[static_cast<std::size_t>(c)] = 1;
  return mask;
}

CellSet to_cells(const CellMask& mask) {
  CellSet out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(static_cast<CellIndex>(i));
  return out;
}

bool is_subset(const CellSet& inner, const CellSet& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

CellSet set_intersection(const CellSet& a, const CellSet& b) {
  CellSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

CellSet set_difference(const CellSet& a, const CellSet& b) {
  CellSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace ctlab
