#include "ctlab/network_simplex.hpp"

#include "ctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctlab {

TransportSimplex::TransportSimplex(const Matrix& cost, const Vector& supply, const Vector& demand)
    : cost_(cost),
      m_(static_cast<int>(cost.rows())),
      n_(static_cast<int>(cost.cols())),
      root_(m_ + n_),
      real_arcs_(static_cast<long>(m_) * n_) {
  if (supply.size() != m_ || demand.size() != n_)
    throw Error(ErrorKind::InvalidSpec, "solve_discrete", "weights do not match the cost matrix");
  const double max_abs = cost.size() ? cost.cwiseAbs().maxCoeff() : 0.0;
  art_cost_ = (max_abs + 1.0) * (m_ + n_ + 1);
  eps_ = 1e-13 * art_cost_;

  const int nodes = m_ + n_ + 1;
  const long arcs = real_arcs_ + m_ + n_;
  flow_.assign(static_cast<std::size_t>(arcs), 0.0);
  state_.assign(static_cast<std::size_t>(arcs), kLower);
  parent_.assign(static_cast<std::size_t>(nodes), -1);
  depth_.assign(static_cast<std::size_t>(nodes), 0);
  first_child_.assign(static_cast<std::size_t>(nodes), -1);
  next_sib_.assign(static_cast<std::size_t>(nodes), -1);
  prev_sib_.assign(static_cast<std::size_t>(nodes), -1);
  pred_.assign(static_cast<std::size_t>(nodes), -1);
  pred_up_.assign(static_cast<std::size_t>(nodes), 0);
  pi_.assign(static_cast<std::size_t>(nodes), 0.0);

  for (int u = 0; u < m_ + n_; ++u) {
    const auto uu = static_cast<std::size_t>(u);
    const long e = real_arcs_ + u;
    parent_[uu] = root_;
    depth_[uu] = 1;
    pred_[uu] = e;
    state_[static_cast<std::size_t>(e)] = kTree;
    attach_child(root_, u);
    if (u < m_) {
      pred_up_[uu] = 1;  // u -> root, cost 0
      flow_[static_cast<std::size_t>(e)] = supply[u];
      pi_[uu] = 0.0;
    } else {
      pred_up_[uu] = 0;  // root -> u, artificial cost
      flow_[static_cast<std::size_t>(e)] = demand[u - m_];
      pi_[uu] = art_cost_;
    }
  }
  block_size_ = std::max<long>(10, static_cast<long>(std::sqrt(static_cast<double>(real_arcs_))));
}

int TransportSimplex::src_of(long arc) const {
  if (arc < real_arcs_) return static_cast<int>(arc / n_);
  const int u = static_cast<int>(arc - real_arcs_);
  return u < m_ ? u : root_;
}

int TransportSimplex::tgt_of(long arc) const {
  if (arc < real_arcs_) return m_ + static_cast<int>(arc % n_);
  const int u = static_cast<int>(arc - real_arcs_);
  return u < m_ ? root_ : u;
}

double TransportSimplex::arc_cost(long arc) const {
  if (arc < real_arcs_) return cost_(arc / n_, arc % n_);
  return arc - real_arcs_ < m_ ? 0.0 : art_cost_;
}

double TransportSimplex::reduced_cost(long arc) const {
  return arc_cost(arc) + pi_[static_cast<std::size_t>(src_of(arc))] - pi_[static_cast<std::size_t>(tgt_of(arc))];
}

void TransportSimplex::detach_child(int child) {
  const auto c = static_cast<std::size_t>(child);
  const int p = parent_[c];
  if (prev_sib_[c] >= 0)
    next_sib_[static_cast<std::size_t>(prev_sib_[c])] = next_sib_[c];
  else
    first_child_[static_cast<std::size_t>(p)] = next_sib_[c];
  if (next_sib_[c] >= 0) prev_sib_[static_cast<std::size_t>(next_sib_[c])] = prev_sib_[c];
  next_sib_[c] = prev_sib_[c] = -1;
}

void TransportSimplex::attach_child(int parent, int child) {
  const auto c = static_cast<std::size_t>(child);
  const auto p = static_cast<std::size_t>(parent);
  prev_sib_[c] = -1;
  next_sib_[c] = first_child_[p];
  if (first_child_[p] >= 0) prev_sib_[static_cast<std::size_t>(first_child_[p])] = child;
  first_child_[p] = child;
}

long TransportSimplex::find_entering() {
  long scanned = 0;
  long best = -1;
  double best_rc = -eps_;
  long e = next_arc_;
  long in_block = 0;
  while (scanned < real_arcs_) {
    if (state_[static_cast<std::size_t>(e)] == kLower) {
      const double rc = reduced_cost(e);
      if (rc < best_rc || (rc == best_rc && best >= 0 && e < best)) {
        best_rc = rc;
        best = e;
      }
    }
    ++scanned;
    ++in_block;
    e = (e + 1 == real_arcs_) ? 0 : e + 1;
    if (in_block == block_size_) {
      if (best >= 0) break;
      in_block = 0;
    }
  }
  next_arc_ = e;
  return best;
}

int TransportSimplex::find_join(int u, int v) const {
  while (u != v) {
    if (depth_[static_cast<std::size_t>(u)] >= depth_[static_cast<std::size_t>(v)])
      u = parent_[static_cast<std::size_t>(u)];
    else
      v = parent_[static_cast<std::size_t>(v)];
  }
  return u;
}

void TransportSimplex::pivot(long in_arc) {
  const int first = src_of(in_arc);
  const int second = tgt_of(in_arc);
  const int join = find_join(first, second);

  // Flow moves first -> second along in_arc and returns through the tree.
  double delta = std::numeric_limits<double>::infinity();
  int u_out = -1;
  int side = 0;
  for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
    const auto uu = static_cast<std::size_t>(u);
    if (pred_up_[uu]) {
      const double d = flow_[static_cast<std::size_t>(pred_[uu])];
      if (d < delta) {
        delta = d;
        u_out = u;
        side = 1;
      }
    }
  }
  for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
    const auto uu = static_cast<std::size_t>(u);
    if (!pred_up_[uu]) {
      const double d = flow_[static_cast<std::size_t>(pred_[uu])];
      if (d <= delta) {
        delta = d;
        u_out = u;
        side = 2;
      }
    }
  }
  if (u_out < 0) throw Error(ErrorKind::NoSolution, "solve_discrete", "unbounded pivot");

  for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
    const auto uu = static_cast<std::size_t>(u);
    flow_[static_cast<std::size_t>(pred_[uu])] += pred_up_[uu] ? -delta : delta;
  }
  for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
    const auto uu = static_cast<std::size_t>(u);
    flow_[static_cast<std::size_t>(pred_[uu])] += pred_up_[uu] ? delta : -delta;
  }
  flow_[static_cast<std::size_t>(in_arc)] += delta;

  const long out_arc = pred_[static_cast<std::size_t>(u_out)];
  flow_[static_cast<std::size_t>(out_arc)] = 0.0;
  state_[static_cast<std::size_t>(out_arc)] = kLower;
  state_[static_cast<std::size_t>(in_arc)] = kTree;

  const int u_in = side == 1 ? first : second;
  const int v_in = side == 1 ? second : first;

  // Re-root the detached subtree at u_in by reversing the path u_in .. u_out.
  std::vector<int> path;
  for (int u = u_in;; u = parent_[static_cast<std::size_t>(u)]) {
    path.push_back(u);
    if (u == u_out) break;
  }
  std::vector<long> old_pred(path.size());
  std::vector<char> old_up(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    old_pred[k] = pred_[static_cast<std::size_t>(path[k])];
    old_up[k] = pred_up_[static_cast<std::size_t>(path[k])];
    detach_child(path[k]);
  }
  for (std::size_t k = path.size() - 1; k > 0; --k) {
    const auto child = static_cast<std::size_t>(path[k]);
    parent_[child] = path[k - 1];
    pred_[child] = old_pred[k - 1];
    pred_up_[child] = !old_up[k - 1];
    attach_child(path[k - 1], path[k]);
  }
  const auto ui = static_cast<std::size_t>(u_in);
  parent_[ui] = v_in;
  pred_[ui] = in_arc;
  pred_up_[ui] = (u_in == first) ? 1 : 0;
  attach_child(v_in, u_in);

  // Uniform potential shift and fresh depths on the moved subtree.
  const double c = arc_cost(in_arc);
  const double new_pi =
      (u_in == first) ? pi_[static_cast<std::size_t>(v_in)] - c : pi_[static_cast<std::size_t>(v_in)] + c;
  const double shift = new_pi - pi_[ui];
  std::vector<int> stack{u_in};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    const auto uu = static_cast<std::size_t>(u);
    pi_[uu] += shift;
    depth_[uu] = depth_[static_cast<std::size_t>(parent_[uu])] + 1;
    for (int ch = first_child_[uu]; ch >= 0; ch = next_sib_[static_cast<std::size_t>(ch)]) stack.push_back(ch);
  }
}

SimplexResult TransportSimplex::solve() {
  SimplexResult res;
  for (;;) {
    const long in_arc = find_entering();
    if (in_arc < 0) break;
    pivot(in_arc);
    ++res.pivots;
  }
  for (int u = 0; u < m_ + n_; ++u) {
    const double f = flow_[static_cast<std::size_t>(real_arcs_ + u)];
    if (f > 1e-9) throw Error(ErrorKind::NoSolution, "solve_discrete", "artificial flow remains; masses unbalanced");
  }
  for (long e = 0; e < real_arcs_; ++e) {
    const double f = flow_[static_cast<std::size_t>(e)];
    if (f > 0.0) {
      const int i = static_cast<int>(e / n_), j = static_cast<int>(e % n_);
      res.couplings.push_back({i, j, f});
      res.objective += f * cost_(i, j);
    }
  }
  res.source_duals.resize(m_);
  res.target_duals.resize(n_);
  for (int i = 0; i < m_; ++i) res.source_duals[i] = pi_[static_cast<std::size_t>(i)];
  for (int j = 0; j < n_; ++j) res.target_duals[j] = pi_[static_cast<std::size_t>(m_ + j)];
  return res;
}

namespace {

// Dense Dijkstra over nonnegative weights given as a callable w(from, to).
template <typename Weight>
Vector dense_dijkstra(int nodes, int source, const std::vector<char>& active, Weight&& w) {
  Vector dist = Vector::Constant(nodes, std::numeric_limits<double>::infinity());
  std::vector<char> done(static_cast<std::size_t>(nodes), 0);
  dist[source] = 0.0;
  for (int iter = 0; iter < nodes; ++iter) {
    int u = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int v = 0; v < nodes; ++v)
      if (!done[static_cast<std::size_t>(v)] && active[static_cast<std::size_t>(v)] && dist[v] < best) {
        best = dist[v];
        u = v;
      }
    if (u < 0) break;
    done[static_cast<std::size_t>(u)] = 1;
    for (int v = 0; v < nodes; ++v) {
      if (done[static_cast<std::size_t>(v)] || !active[static_cast<std::size_t>(v)]) continue;
      const double cand = dist[u] + w(u, v);
      if (cand < dist[v]) dist[v] = cand;
    }
  }
  return dist;
}

}  // namespace

Vector center_target_duals(const Matrix& cost, const std::vector<Coupling>& couplings, const Vector& target_weights,
                           const Vector& lambda, int anchor_target) {
  const int n = static_cast<int>(cost.cols());
  std::vector<std::vector<int>> support(static_cast<std::size_t>(n));
  for (const Coupling& c : couplings)
    if (c.mass > 0.0) support[static_cast<std::size_t>(c.j)].push_back(c.i);
  std::vector<char> active(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < n; ++j) active[static_cast<std::size_t>(j)] = !support[static_cast<std::size_t>(j)].empty();
  if (anchor_target < 0 || anchor_target >= n || !active[static_cast<std::size_t>(anchor_target)]) {
    anchor_target = -1;
    for (int j = 0; j < n && anchor_target < 0; ++j)
      if (active[static_cast<std::size_t>(j)]) anchor_target = j;
    if (anchor_target < 0) return lambda;
  }

  // w(k, j) = min over i in support(k) of cost(i,j) - cost(i,k).
  Matrix w(n, n);
  for (int k = 0; k < n; ++k) {
    const auto& sup = support[static_cast<std::size_t>(k)];
    for (int j = 0; j < n; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (int i : sup) best = std::min(best, cost(i, j) - cost(i, k));
      w(k, j) = best;
    }
  }
  // Reduced weights are nonnegative for any feasible lambda; clamp roundoff.
  auto fwd = [&](int k, int j) { return std::max(0.0, w(k, j) - (lambda[j] - lambda[k])); };
  auto bwd = [&](int k, int j) { return std::max(0.0, w(j, k) - (lambda[k] - lambda[j])); };
  const Vector d_fwd = dense_dijkstra(n, anchor_target, active, fwd);
  const Vector d_bwd = dense_dijkstra(n, anchor_target, active, bwd);

  Vector out = lambda;
  const double base = lambda[anchor_target];
  for (int j = 0; j < n; ++j) {
    if (!active[static_cast<std::size_t>(j)] || !std::isfinite(d_fwd[j]) || !std::isfinite(d_bwd[j])) continue;
    const double hi = base + (lambda[j] - base) + d_fwd[j];
    const double lo = base + (lambda[j] - base) - d_bwd[j];
    out[j] = 0.5 * (hi + lo);
  }
  (void)target_weights;
  return out;
}

void complete_duals(const Matrix& cost, const Vector& target_weights, Vector& lambda, Vector& psi) {
  const auto m = cost.rows(), n = cost.cols();
  psi.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (target_weights[j] > 0.0) best = std::max(best, lambda[j] - cost(i, j));
    psi[i] = best;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (target_weights[j] > 0.0) continue;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) best = std::min(best, cost(i, j) + psi[i]);
    lambda[j] = best;
  }
}

}  // namespace ctlab
