#include "hetpf/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace hetpf {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kWeightSumTol = 1e-12;

void check_weights(const Vector& weights) {
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw std::invalid_argument("transport: weights must be finite and nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("transport: weights must sum to 1 within 1e-12");
  }
}

// Transportation simplex state on the complete bipartite graph with M
// sources and M sinks. The basis is a spanning tree of 2M - 1 cells.
class TransportSimplex {
 public:
  TransportSimplex(const Matrix& cost, const Vector& supply)
      : cost_(cost), m_(cost.rows()), supply_(supply) {}

  TransportPlan solve() {
    build_initial_basis();
    const double opt_tol = 1e-11 * (1.0 + cost_.cwiseAbs().maxCoeff());
    const long bland_after = 10L * m_ * m_ + 1000;
    const long max_pivots = 400L * m_ * m_ + 100000;
    long pivots = 0;
    bool bland = false;
    while (true) {
      compute_duals();
      const auto [ei, ej] = find_entering(opt_tol, bland);
      if (ei < 0) break;  // dual feasible: optimal
      pivot(ei, ej);
      if (++pivots == bland_after) bland = true;
      if (pivots > max_pivots) {
        throw std::runtime_error("transport: simplex failed to terminate");
      }
    }
    return extract_plan();
  }

 private:
  struct Cell {
    Index i, j;
    double flow;
  };

  void build_initial_basis() {
    // Northwest-corner rule; ties advance the row so the staircase always
    // has exactly 2M - 1 cells and stays a spanning tree.
    Vector rs = supply_;
    Vector rd = Vector::Ones(m_);
    cells_.clear();
    cells_.reserve(2 * m_ - 1);
    Index i = 0, j = 0;
    for (Index n = 0; n < 2 * m_ - 1; ++n) {
      const double a = std::min(rs(i), rd(j));
      cells_.push_back({i, j, a});
      rs(i) -= a;
      rd(j) -= a;
      if (i == m_ - 1) {
        ++j;
      } else if (j == m_ - 1) {
        ++i;
      } else if (rs(i) == 0.0) {
        ++i;
      } else {
        ++j;
      }
    }
    rebuild_adjacency();
  }

  void rebuild_adjacency() {
    row_cells_.assign(m_, {});
    col_cells_.assign(m_, {});
    in_basis_.assign(m_ * m_, false);
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      row_cells_[cells_[c].i].push_back(c);
      col_cells_[cells_[c].j].push_back(c);
      in_basis_[cells_[c].i * m_ + cells_[c].j] = true;
    }
  }

  // MODI duals from the basis tree, rooted at source 0 with u_0 = 0.
  void compute_duals() {
    u_.assign(m_, std::numeric_limits<double>::quiet_NaN());
    v_.assign(m_, std::numeric_limits<double>::quiet_NaN());
    u_[0] = 0.0;
    // Nodes 0..m-1 are sources, m..2m-1 sinks.
    std::vector<Index> stack = {0};
    while (!stack.empty()) {
      const Index node = stack.back();
      stack.pop_back();
      if (node < m_) {
        for (const std::size_t c : row_cells_[node]) {
          const Index j = cells_[c].j;
          if (std::isnan(v_[j])) {
            v_[j] = cost_(node, j) - u_[node];
            stack.push_back(m_ + j);
          }
        }
      } else {
        const Index j = node - m_;
        for (const std::size_t c : col_cells_[j]) {
          const Index i = cells_[c].i;
          if (std::isnan(u_[i])) {
            u_[i] = cost_(i, j) - v_[j];
            stack.push_back(i);
          }
        }
      }
    }
  }

  // Entering cell: most negative reduced cost with lexicographic tie-break;
  // under Bland's rule, the first negative one in scan order (anti-cycling).
  std::pair<Index, Index> find_entering(double opt_tol, bool bland) const {
    Index bi = -1, bj = -1;
    double best = -opt_tol;
    for (Index i = 0; i < m_; ++i) {
      for (Index j = 0; j < m_; ++j) {
        if (in_basis_[i * m_ + j]) continue;
        const double rc = cost_(i, j) - u_[i] - v_[j];
        if (rc < best) {
          best = rc;
          bi = i;
          bj = j;
          if (bland) return {bi, bj};
        }
      }
    }
    return {bi, bj};
  }

  void pivot(Index ei, Index ej) {
    // Unique tree path from source ei to sink ej; the entering cell closes
    // the cycle. Cells along the path from the ej end take signs -,+,-,...
    std::vector<int> parent_cell(2 * m_, -1);
    std::vector<char> seen(2 * m_, 0);
    std::vector<Index> queue = {ei};
    seen[ei] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Index node = queue[head];
      if (node == m_ + ej) break;
      if (node < m_) {
        for (const std::size_t c : row_cells_[node]) {
          const Index next = m_ + cells_[c].j;
          if (!seen[next]) {
            seen[next] = 1;
            parent_cell[next] = static_cast<int>(c);
            queue.push_back(next);
          }
        }
      } else {
        for (const std::size_t c : col_cells_[node - m_]) {
          const Index next = cells_[c].i;
          if (!seen[next]) {
            seen[next] = 1;
            parent_cell[next] = static_cast<int>(c);
            queue.push_back(next);
          }
        }
      }
    }
    if (!seen[m_ + ej]) {
      throw std::runtime_error("transport: basis lost connectivity");
    }

    std::vector<std::size_t> path;
    Index node = m_ + ej;
    while (node != ei) {
      const std::size_t c = static_cast<std::size_t>(parent_cell[node]);
      path.push_back(c);
      const Cell& cell = cells_[c];
      node = (node >= m_) ? cell.i : m_ + cell.j;
    }

    // Minimum flow over the minus cells (even positions from the ej end).
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave_pos = 0;
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const Cell& cell = cells_[path[p]];
      if (cell.flow < theta ||
          (cell.flow == theta &&
           std::make_pair(cell.i, cell.j) <
               std::make_pair(cells_[path[leave_pos]].i, cells_[path[leave_pos]].j))) {
        theta = cell.flow;
        leave_pos = p;
      }
    }

    for (std::size_t p = 0; p < path.size(); ++p) {
      cells_[path[p]].flow += (p % 2 == 0) ? -theta : theta;
      // theta is the minimum donor flow, so negatives are pure round-off.
      if (cells_[path[p]].flow < 0.0) cells_[path[p]].flow = 0.0;
    }
    const std::size_t leaving = path[leave_pos];
    cells_[leaving] = {ei, ej, theta};
    rebuild_adjacency();
  }

  TransportPlan extract_plan() {
    TransportPlan plan;
    plan.coupling = Matrix::Zero(m_, m_);
    plan.row_marginals = supply_;
    plan.objective = 0.0;
    for (const Cell& cell : cells_) {
      // Degenerate pivots can leave tiny negative round-off on basic cells.
      const double f = std::max(cell.flow, 0.0);
      plan.coupling(cell.i, cell.j) += f;
      plan.objective += f * cost_(cell.i, cell.j);
    }
    plan.dual_source = Eigen::Map<const Vector>(u_.data(), m_);
    plan.dual_sink = Eigen::Map<const Vector>(v_.data(), m_);
    plan.has_duals = true;
    return plan;
  }

  const Matrix& cost_;
  const Index m_;
  Vector supply_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> row_cells_;
  std::vector<std::vector<std::size_t>> col_cells_;
  std::vector<char> in_basis_;
  std::vector<double> u_, v_;
};

}  // namespace

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("CostMatrix: must be square");
  }
  const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
  if ((entries_.array() < 0.0).any()) {
    throw std::invalid_argument("CostMatrix: entries must be nonnegative");
  }
  if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("CostMatrix: must be symmetric");
  }
  if (entries_.diagonal().cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("CostMatrix: diagonal must vanish");
  }
}

CostMatrix CostMatrix::pairwise_squared(const Matrix& states) {
  const Index m = states.cols();
  Matrix c = Matrix::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const double d = (states.col(i) - states.col(j)).squaredNorm();
      c(i, j) = d;
      c(j, i) = d;
    }
  }
  return CostMatrix(std::move(c));
}

TransportPlan solve_transport(const CostMatrix& cost, const Vector& weights) {
  if (weights.size() != cost.size()) {
    throw std::invalid_argument("solve_transport: weight/cost size mismatch");
  }
  check_weights(weights);
  const Vector supply = weights * static_cast<double>(weights.size());
  TransportPlan plan = TransportSimplex(cost.entries(), supply).solve();
  const PlanDiagnostics diag = validate_plan(plan, weights);
  if (!diag.pass) {
    throw std::runtime_error("solve_transport: numerically infeasible marginals");
  }
  return plan;
}

TransportPlan solve_transport_1d(const Vector& states, const Vector& weights) {
  const Index m = states.size();
  if (weights.size() != m) {
    throw std::invalid_argument("solve_transport_1d: size mismatch");
  }
  if (!states.allFinite()) {
    throw std::invalid_argument("solve_transport_1d: states must be finite");
  }
  check_weights(weights);

  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return states(a) < states(b); });

  TransportPlan plan;
  plan.coupling = Matrix::Zero(m, m);
  plan.row_marginals = weights * static_cast<double>(m);
  plan.objective = 0.0;

  // Monotone merge of the weighted sources against the uniform sinks,
  // both in sorted order; allocations never cross.
  Index p = 0, q = 0;
  double rem_s = plan.row_marginals(order[0]);
  double rem_t = 1.0;
  while (true) {
    const double a = std::min(rem_s, rem_t);
    if (a > 0.0) {
      const Index i = order[p], j = order[q];
      plan.coupling(i, j) += a;
      const double d = states(i) - states(j);
      plan.objective += a * d * d;
    }
    rem_s -= a;
    rem_t -= a;
    if (rem_s == 0.0) {
      if (++p == m) break;
      rem_s = plan.row_marginals(order[p]);
    }
    if (rem_t == 0.0) {
      if (++q == m) break;
      rem_t = 1.0;
    }
  }
  return plan;
}

PlanDiagnostics validate_plan(const TransportPlan& plan, const Vector& weights) {
  PlanDiagnostics diag;
  const Index m = plan.coupling.rows();
  diag.min_entry = plan.coupling.minCoeff();
  diag.max_column_violation =
      (plan.coupling.colwise().sum().array() - 1.0).abs().maxCoeff();
  const Vector target = weights * static_cast<double>(m);
  diag.max_row_violation =
      (plan.coupling.rowwise().sum() - target).cwiseAbs().maxCoeff();
  diag.pass = diag.min_entry >= -kFeasTol &&
              diag.max_column_violation <= kFeasTol &&
              diag.max_row_violation <= kFeasTol;
  return diag;
}

}  // namespace hetpf
