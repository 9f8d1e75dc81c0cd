#pragma once

#include "ctlab/types.hpp"

#include <vector>

namespace ctlab {

struct Coupling {
  int i = 0;
  int j = 0;
  double mass = 0.0;
};

/// Raw LP output: couplings plus node potentials with
/// target_duals[j] - source_duals[i] <= cost(i, j), equality on the support.
struct SimplexResult {
  std::vector<Coupling> couplings;
  Vector source_duals;
  Vector target_duals;
  double objective = 0.0;
  long pivots = 0;
};

/// Primal network simplex for the balanced transportation problem on the
/// complete bipartite graph, started from the all-artificial strongly feasible
/// tree. Entering arcs come from a cyclic block search (most negative reduced
/// cost, lowest arc index on ties); the leaving arc follows the strongly
/// feasible rule, so the pivot sequence is deterministic and cycling-free.
class TransportSimplex {
 public:
  TransportSimplex(const Matrix& cost, const Vector& supply, const Vector& demand);

  SimplexResult solve();

 private:
  enum : signed char { kLower = 0, kTree = 1 };

  double reduced_cost(long arc) const;
  long find_entering();
  int find_join(int u, int v) const;
  void pivot(long in_arc);
  void detach_child(int child);
  void attach_child(int parent, int child);

  int src_of(long arc) const;
  int tgt_of(long arc) const;
  double arc_cost(long arc) const;

  const Matrix& cost_;
  int m_, n_, root_;
  long real_arcs_;
  double art_cost_;
  double eps_;

  std::vector<double> flow_;
  std::vector<signed char> state_;
  std::vector<int> parent_, depth_, first_child_, next_sib_, prev_sib_;
  std::vector<long> pred_;
  std::vector<char> pred_up_;  // pred arc points from the node to its parent
  std::vector<double> pi_;

  long block_size_;
  long next_arc_ = 0;
};

/// Moves the target potentials to the midpoint of the optimal dual face along
/// shortest-path directions from `anchor_target`: with the plan fixed, the
/// optimal lambda form {lambda_j - lambda_k <= w(k, j)}, w(k, j) =
/// min over supported i of cost(i,j) - cost(i,k). Returns the new lambda.
Vector center_target_duals(const Matrix& cost, const std::vector<Coupling>& couplings, const Vector& target_weights,
                           const Vector& lambda, int anchor_target);

/// psi_i = max_j (lambda_j - cost(i, j)) over targets with positive weight;
/// zero-weight targets get the largest feasible lambda.
void complete_duals(const Matrix& cost, const Vector& target_weights, Vector& lambda, Vector& psi);

}  // namespace ctlab
