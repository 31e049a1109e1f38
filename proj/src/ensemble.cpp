#include "hetpf/ensemble.hpp"

#include <cmath>
#include <stdexcept>

namespace hetpf {

namespace {
constexpr double kColumnSumTol = 1e-12;
}

Ensemble::Ensemble(Matrix members) : members_(std::move(members)) {
  if (members_.cols() < 2) {
    throw std::invalid_argument("Ensemble: need at least 2 members");
  }
  if (members_.rows() < 1) {
    throw std::invalid_argument("Ensemble: state dimension must be >= 1");
  }
  if (!members_.allFinite()) {
    throw std::invalid_argument("Ensemble: members contain non-finite values");
  }
}

TransformMatrix::TransformMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("TransformMatrix: must be square");
  }
  for (Index j = 0; j < entries_.cols(); ++j) {
    const double s = entries_.col(j).sum();
    if (std::abs(s - 1.0) > kColumnSumTol) {
      throw std::invalid_argument("TransformMatrix: column sum off 1 beyond 1e-12");
    }
  }
}

TransformMatrix TransformMatrix::identity(Index m) {
  return TransformMatrix(Matrix::Identity(m, m));
}

AnomalyMatrix::AnomalyMatrix(Matrix entries) : entries_(std::move(entries)) {
  for (Index r = 0; r < entries_.rows(); ++r) {
    const double mag = entries_.row(r).cwiseAbs().sum();
    if (std::abs(entries_.row(r).sum()) > 1e-10 * std::max(mag, 1.0)) {
      throw std::invalid_argument("AnomalyMatrix: row sum not zero");
    }
  }
}

Vector ensemble_mean(const Ensemble& e) { return e.members().rowwise().mean(); }

AnomalyMatrix anomalies(const Ensemble& e) {
  return AnomalyMatrix(e.members().colwise() - ensemble_mean(e).eval());
}

Ensemble apply_transform(const Ensemble& e, const TransformMatrix& d) {
  if (d.size() != e.size()) {
    throw std::invalid_argument("apply_transform: coefficient size mismatch");
  }
  return Ensemble(e.members() * d.entries());
}

double rmse(const Vector& estimate, const Vector& reference) {
  if (estimate.size() != reference.size()) {
    throw std::invalid_argument("rmse: dimension mismatch");
  }
  return std::sqrt((estimate - reference).squaredNorm() /
                   static_cast<double>(estimate.size()));
}

double time_avg_rmse(const std::vector<Vector>& estimates,
                     const std::vector<Vector>& references) {
  if (estimates.empty() || estimates.size() != references.size()) {
    throw std::invalid_argument("time_avg_rmse: empty or mismatched sequences");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    acc += rmse(estimates[k], references[k]);
  }
  return acc / static_cast<double>(estimates.size());
}

}  // namespace hetpf
