#pragma once

#include "hetpf/ensemble.hpp"
#include "hetpf/observation.hpp"
#include "hetpf/transport.hpp"

namespace hetpf {

/// Importance weights: nonnegative, summing to 1 within 1e-12. Entries below
/// 1e-15 are kept, never clipped; degenerate transport handles zero-supply
/// rows.
class WeightVector {
 public:
  explicit WeightVector(Vector w);

  Index size() const { return w_.size(); }
  const Vector& values() const { return w_; }
  double operator()(Index i) const { return w_(i); }

 private:
  Vector w_;
};

/// Tempered importance weights w_i proportional to
/// exp(-(alpha/2) (h_i - y)^T R^{-1} (h_i - y)), normalized. Computed via
/// log-weights with max subtraction so extreme innovations cannot overflow.
/// obs_values holds one column per member (Hz_i or general h(z_i)).
WeightVector importance_weights(const Matrix& obs_values, const Vector& y_obs,
                                const Precision& r_inv, double alpha);

/// Effective sample size 1 / sum w_i^2, in [1, M].
double effective_sample_size(const WeightVector& w);

/// ETPF transform coefficients d^PF = T*, the optimal coupling between the
/// weighted forecast ensemble and the uniform analysis ensemble under cost
/// ||z_i - z_j||^2. Scalar states take the sorting path; otherwise the
/// network simplex runs. The resulting analysis mean equals sum_i w_i z_i.
TransformMatrix etpf_coefficients(const Ensemble& e, const WeightVector& w);

}  // namespace hetpf
