#include "hetpf/etpf.hpp"

#include <cmath>
#include <stdexcept>

namespace hetpf {

WeightVector::WeightVector(Vector w) : w_(std::move(w)) {
  if (!w_.allFinite() || (w_.array() < 0.0).any()) {
    throw std::invalid_argument("WeightVector: entries must be finite and nonnegative");
  }
  if (std::abs(w_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("WeightVector: must sum to 1 within 1e-12");
  }
}

WeightVector importance_weights(const Matrix& obs_values, const Vector& y_obs,
                                const Precision& r_inv, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("importance_weights: alpha must lie in [0, 1]");
  }
  if (obs_values.rows() != y_obs.size() || y_obs.size() != r_inv.dim()) {
    throw std::invalid_argument("importance_weights: dimension mismatch");
  }
  if (!obs_values.allFinite() || !y_obs.allFinite()) {
    throw std::invalid_argument("importance_weights: non-finite inputs");
  }
  const Index m = obs_values.cols();
  Vector log_w(m);
  for (Index i = 0; i < m; ++i) {
    log_w(i) = -0.5 * alpha * r_inv.quadratic_form(obs_values.col(i) - y_obs);
  }
  log_w.array() -= log_w.maxCoeff();
  Vector w = log_w.array().exp();
  w /= w.sum();
  return WeightVector(std::move(w));
}

double effective_sample_size(const WeightVector& w) {
  return 1.0 / w.values().squaredNorm();
}

TransformMatrix etpf_coefficients(const Ensemble& e, const WeightVector& w) {
  if (w.size() != e.size()) {
    throw std::invalid_argument("etpf_coefficients: weight/ensemble size mismatch");
  }
  TransportPlan plan;
  if (e.state_dim() == 1) {
    plan = solve_transport_1d(e.members().row(0).transpose(), w.values());
  } else {
    plan = solve_transport(CostMatrix::pairwise_squared(e.members()), w.values());
  }
  return TransformMatrix(std::move(plan.coupling));
}

}  // namespace hetpf
