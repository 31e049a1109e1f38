#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hetpf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Ensemble of M state columns of dimension N_z (member = column, so an
/// analysis step is a right-multiplication by an M x M coefficient matrix).
class Ensemble {
 public:
  /// Validates M >= 2, N_z >= 1 and finiteness of all entries.
  explicit Ensemble(Matrix members);

  Index state_dim() const { return members_.rows(); }
  Index size() const { return members_.cols(); }

  const Matrix& members() const { return members_; }
  Vector member(Index i) const { return members_.col(i); }

 private:
  Matrix members_;
};

/// M x M coefficients d_ij with unit column sums; the generic linear
/// ensemble transform z^a_j = sum_i z^f_i d_ij.
class TransformMatrix {
 public:
  /// Validates that every column sums to 1 within 1e-12. Never renormalizes.
  explicit TransformMatrix(Matrix entries);

  static TransformMatrix identity(Index m);

  Index size() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }

 private:
  Matrix entries_;
};

/// N_z x M deviations from the ensemble mean; rows sum to zero.
class AnomalyMatrix {
 public:
  explicit AnomalyMatrix(Matrix entries);

  Index state_dim() const { return entries_.rows(); }
  Index size() const { return entries_.cols(); }
  const Matrix& entries() const { return entries_; }

 private:
  Matrix entries_;
};

/// Component-wise arithmetic mean of the members.
Vector ensemble_mean(const Ensemble& e);

/// Deviations of each member from the ensemble mean.
AnomalyMatrix anomalies(const Ensemble& e);

/// Applies the linear ensemble transform: column j of the result is
/// sum_i z_i d_ij. Throws on dimension mismatch.
Ensemble apply_transform(const Ensemble& e, const TransformMatrix& d);

/// Time-averaged RMSE between estimate and reference sequences:
/// (1/K) sum_k sqrt(||est_k - ref_k||^2 / N_z). Throws on empty or
/// mismatched sequences.
double time_avg_rmse(const std::vector<Vector>& estimates,
                     const std::vector<Vector>& references);

/// Single-snapshot RMSE sqrt(||est - ref||^2 / N_z).
double rmse(const Vector& estimate, const Vector& reference);

}  // namespace hetpf
