#pragma once

#include "hetpf/ensemble.hpp"
#include "hetpf/observation.hpp"

namespace hetpf {

/// Intermediate quantities of the square root filter with bridging exponent
/// (1 - alpha):
///   S = { I + (1-alpha)/(M-1) (HA)^T R^{-1} (HA) }^{-1/2}
///   w_hat_i = 1/M - (1-alpha)/(M-1) e_i^T S^2 (HA)^T R^{-1} (H zbar - y)
/// S is the symmetric positive definite root, which is what makes its rows
/// and columns sum to one.
struct EsrfIntermediates {
  Matrix s;              // M x M symmetric PD
  Vector w_hat;          // sums to 1
  Matrix obs_anomalies;  // HA, N_y x M
  Vector obs_mean;       // H zbar
};

/// Eigendecomposition of the bridged innovation-covariance factor; enough to
/// apply the filter without forming the M x M transform. lambda are the
/// eigenvalues of I + (1-alpha)/(M-1) (HA)^T R^{-1} (HA), floored at 1e-14
/// (they are >= 1 analytically; the floor only guards round-off).
///
/// With a single observed component the factor is a rank-one update of the
/// identity, whose eigensystem is available in closed form: one eigenpair
/// along the observation-space anomaly direction, eigenvalue 1 elsewhere.
struct EsrfFactorization {
  bool rank_one = false;
  Matrix eigvecs;         // dense path: V
  Vector lambda;          // dense path: eigenvalues before the inverse sqrt
  Vector unit_direction;  // rank-one path: unit eigenvector (empty if S = I)
  double rank_one_lambda = 1.0;
  Vector w_hat;
};

EsrfFactorization esrf_factorize(const ObsSpaceStats& obs, const Vector& y_obs,
                                 const Precision& r_inv, double alpha);

/// Materializes S and w_hat and validates the row/column/weight sums.
EsrfIntermediates esrf_intermediates(const ObsSpaceStats& obs,
                                     const Vector& y_obs,
                                     const Precision& r_inv, double alpha);

/// Filter coefficients d_ij = w_hat_i - 1/M + s_ij. At alpha = 1 the Kalman
/// factor drops out and the coefficients are the identity.
TransformMatrix esrf_coefficients(const ObsSpaceStats& obs, const Vector& y_obs,
                                  const Precision& r_inv, double alpha);

/// Applies the filter directly: Z^a = (Z w_hat) 1^T + A S, evaluated in the
/// eigenbasis so no M x M transform is formed. Algebraically identical to
/// apply_transform(e, esrf_coefficients(...)).
Ensemble esrf_analysis(const Ensemble& e, const ObsSpaceStats& obs,
                       const Vector& y_obs, const Precision& r_inv,
                       double alpha);

}  // namespace hetpf
