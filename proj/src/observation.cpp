#include "hetpf/observation.hpp"

#include <stdexcept>
#include <utility>

namespace hetpf {

ObsOperator ObsOperator::select_rows(std::vector<Index> rows, Index state_dim) {
  for (const Index r : rows) {
    if (r < 0 || r >= state_dim) {
      throw std::invalid_argument("ObsOperator: selected row out of range");
    }
  }
  ObsOperator op;
  op.obs_dim_ = static_cast<Index>(rows.size());
  op.state_dim_ = state_dim;
  op.rows_ = std::move(rows);
  return op;
}

ObsOperator ObsOperator::linear(Matrix h) {
  ObsOperator op;
  op.obs_dim_ = h.rows();
  op.state_dim_ = h.cols();
  op.fn_ = [h = std::move(h)](const Vector& z) -> Vector { return h * z; };
  return op;
}

ObsOperator ObsOperator::nonlinear(Index obs_dim, Index state_dim,
                                   std::function<Vector(const Vector&)> fn) {
  ObsOperator op;
  op.obs_dim_ = obs_dim;
  op.state_dim_ = state_dim;
  op.fn_ = std::move(fn);
  return op;
}

Vector ObsOperator::operator()(const Vector& state) const {
  if (state.size() != state_dim_) {
    throw std::invalid_argument("ObsOperator: state dimension mismatch");
  }
  if (!rows_.empty()) {
    Vector y(obs_dim_);
    for (Index q = 0; q < obs_dim_; ++q) y(q) = state(rows_[q]);
    return y;
  }
  Vector y = fn_(state);
  if (y.size() != obs_dim_) {
    throw std::invalid_argument("ObsOperator: operator returned wrong dimension");
  }
  return y;
}

Precision Precision::diagonal(Vector entries) {
  if ((entries.array() < 0.0).any()) {
    throw std::invalid_argument("Precision: negative diagonal entry");
  }
  Precision p;
  p.diag_ = std::move(entries);
  return p;
}

Precision Precision::dense(Matrix entries) {
  if (entries.rows() != entries.cols()) {
    throw std::invalid_argument("Precision: dense form must be square");
  }
  const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  if (((entries - entries.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale) {
    throw std::invalid_argument("Precision: dense form must be symmetric");
  }
  Precision p;
  p.dense_ = std::move(entries);
  return p;
}

Precision Precision::iso(double variance, Index dim) {
  if (variance <= 0.0) {
    throw std::invalid_argument("Precision: variance must be positive");
  }
  return diagonal(Vector::Constant(dim, 1.0 / variance));
}

Index Precision::dim() const {
  return is_diagonal() ? diag_.size() : dense_.rows();
}

bool Precision::is_zero() const {
  if (is_diagonal()) return (diag_.array() == 0.0).all();
  return (dense_.array() == 0.0).all();
}

double Precision::quadratic_form(const Vector& v) const {
  if (v.size() != dim()) {
    throw std::invalid_argument("Precision: dimension mismatch");
  }
  if (is_diagonal()) return (v.array().square() * diag_.array()).sum();
  return v.dot(dense_ * v);
}

Vector Precision::apply(const Vector& v) const {
  if (v.size() != dim()) {
    throw std::invalid_argument("Precision: dimension mismatch");
  }
  if (is_diagonal()) return diag_.asDiagonal() * v;
  return dense_ * v;
}

Matrix Precision::apply_left(const Matrix& a) const {
  if (a.rows() != dim()) {
    throw std::invalid_argument("Precision: dimension mismatch");
  }
  if (is_diagonal()) return diag_.asDiagonal() * a;
  return dense_ * a;
}

ObsSpaceStats obs_space_stats(const Ensemble& e, const ObsOperator& h) {
  if (h.state_dim() != e.state_dim()) {
    throw std::invalid_argument("obs_space_stats: operator/state dimension mismatch");
  }
  ObsSpaceStats stats;
  stats.values.resize(h.obs_dim(), e.size());
  for (Index i = 0; i < e.size(); ++i) {
    stats.values.col(i) = h(e.member(i));
  }
  stats.mean = stats.values.rowwise().mean();
  stats.anomalies = stats.values.colwise() - stats.mean;
  return stats;
}

}  // namespace hetpf
