#pragma once

#include <functional>
#include <vector>

#include "hetpf/ensemble.hpp"

namespace hetpf {

/// Observation operator h mapping a state vector to observation space.
/// Linear operators carry their matrix so code paths that want H explicitly
/// (tests, direct products) can get it; gridpoint sampling is a row
/// selection.
class ObsOperator {
 public:
  /// y = z(rows), one reading per selected state index.
  static ObsOperator select_rows(std::vector<Index> rows, Index state_dim);

  /// y = H z for a dense matrix H.
  static ObsOperator linear(Matrix h);

  /// General nonlinear operator.
  static ObsOperator nonlinear(Index obs_dim, Index state_dim,
                               std::function<Vector(const Vector&)> fn);

  Vector operator()(const Vector& state) const;

  Index obs_dim() const { return obs_dim_; }
  Index state_dim() const { return state_dim_; }

  bool is_selection() const { return !rows_.empty(); }
  const std::vector<Index>& selected_rows() const { return rows_; }

 private:
  ObsOperator() = default;

  Index obs_dim_ = 0;
  Index state_dim_ = 0;
  std::vector<Index> rows_;
  std::function<Vector(const Vector&)> fn_;
};

/// Inverse observation-error covariance R^{-1}, diagonal or dense.
/// Localization only ever produces diagonal entries; the dense form exists
/// for correlated observation errors.
class Precision {
 public:
  static Precision diagonal(Vector entries);
  /// Validates symmetry within 1e-10 relative.
  static Precision dense(Matrix entries);
  /// Scalar variance r > 0 on a dim-sized diagonal.
  static Precision iso(double variance, Index dim);

  Index dim() const;
  bool is_diagonal() const { return dense_.size() == 0; }
  /// True when every entry vanishes (no observation carries information).
  bool is_zero() const;

  /// v^T R^{-1} v.
  double quadratic_form(const Vector& v) const;
  /// R^{-1} v.
  Vector apply(const Vector& v) const;
  /// R^{-1} A.
  Matrix apply_left(const Matrix& a) const;

  const Vector& diagonal_entries() const { return diag_; }

 private:
  Precision() = default;
  Vector diag_;
  Matrix dense_;
};

/// Observation-space statistics of an ensemble: per-member values h(z_i),
/// their mean, and the anomaly matrix. For linear h = H these equal
/// H zbar and H A^f.
struct ObsSpaceStats {
  Matrix values;     // N_y x M
  Matrix anomalies;  // N_y x M, columns h(z_i) - mean
  Vector mean;       // N_y
};

ObsSpaceStats obs_space_stats(const Ensemble& e, const ObsOperator& h);

}  // namespace hetpf
