#pragma once

#include "hetpf/ensemble.hpp"

namespace hetpf {

/// Pairwise transport costs c_ij = ||z_i - z_j||^2: symmetric, nonnegative,
/// zero diagonal.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix entries);

  /// Builds c_ij = ||z_i - z_j||^2 from an N x M matrix of state columns.
  static CostMatrix pairwise_squared(const Matrix& states);

  Index size() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }

 private:
  Matrix entries_;
};

/// Solution of the discrete transport problem
///   minimize sum_ij t_ij c_ij
///   subject to t_ij >= 0, column sums 1, row sums w_i * M.
/// Dual potentials (u_i + v_j <= c_ij, equality on the support) are filled
/// by the network-simplex solver; the 1-D solver leaves them empty.
struct TransportPlan {
  Matrix coupling;       // M x M, nonnegative
  Vector row_marginals;  // prescribed row sums w_i * M
  double objective = 0.0;
  Vector dual_source;    // u, size M when has_duals
  Vector dual_sink;      // v, size M when has_duals
  bool has_duals = false;
};

/// Feasibility report for a transport plan.
struct PlanDiagnostics {
  double max_column_violation = 0.0;  // |column sum - 1|
  double max_row_violation = 0.0;     // |row sum - w_i M|
  double min_entry = 0.0;
  bool pass = false;                  // all within 1e-9
};

/// Exact solver: network simplex on the M x M bipartite transportation
/// graph (sources carry w_i * M, sinks demand 1 each). Deterministic
/// pivoting, so repeated runs produce the same plan. Weights must be
/// nonnegative and sum to 1 within 1e-12; zero-weight rows are kept with
/// zero supply so the plan stays M x M.
TransportPlan solve_transport(const CostMatrix& cost, const Vector& weights);

/// Closed-form path for scalar states: the monotone (non-crossing) coupling
/// between the weighted source ensemble and the uniform target after
/// sorting. Objective agrees with solve_transport.
TransportPlan solve_transport_1d(const Vector& states, const Vector& weights);

/// Reports the worst marginal violation and smallest entry; passes iff all
/// are within 1e-9.
PlanDiagnostics validate_plan(const TransportPlan& plan, const Vector& weights);

}  // namespace hetpf
