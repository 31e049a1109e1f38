#include "hetpf/esrf.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace hetpf {

namespace {

constexpr double kEigFloor = 1e-14;

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("esrf: alpha must lie in [0, 1]");
  }
}

}  // namespace

EsrfFactorization esrf_factorize(const ObsSpaceStats& obs, const Vector& y_obs,
                                 const Precision& r_inv, double alpha) {
  check_alpha(alpha);
  const Index m = obs.values.cols();
  if (m < 2) {
    throw std::invalid_argument("esrf: need at least 2 members");
  }
  if (obs.mean.size() != y_obs.size() || y_obs.size() != r_inv.dim()) {
    throw std::invalid_argument("esrf: observation dimension mismatch");
  }

  EsrfFactorization f;
  if (alpha == 1.0) {
    // Bridging removes the Kalman factor entirely.
    f.rank_one = true;
    f.rank_one_lambda = 1.0;
    f.w_hat = Vector::Constant(m, 1.0 / static_cast<double>(m));
    return f;
  }

  const double c = (1.0 - alpha) / static_cast<double>(m - 1);
  const Vector r_innov = r_inv.apply(obs.mean - y_obs);

  if (y_obs.size() == 1) {
    // Factor = I + c r^{-1} g g^T with g the single anomaly row: eigenvalue
    // 1 + c r^{-1} ||g||^2 along g, eigenvalue 1 on the complement.
    const Vector g = obs.anomalies.row(0).transpose();
    const double r_scalar = r_inv.apply(Vector::Ones(1))(0);
    const double gnorm2 = g.squaredNorm();
    f.rank_one = true;
    f.rank_one_lambda = std::max(1.0 + c * r_scalar * gnorm2, kEigFloor);
    Vector s2_g_rinnov;  // S^2 (HA)^T R^{-1} innovation
    if (gnorm2 > 0.0) {
      f.unit_direction = g / std::sqrt(gnorm2);
      const Vector v = g * r_innov(0);
      s2_g_rinnov =
          v + (1.0 / f.rank_one_lambda - 1.0) * f.unit_direction *
                  f.unit_direction.dot(v);
    } else {
      s2_g_rinnov = Vector::Zero(m);
    }
    f.w_hat =
        Vector::Constant(m, 1.0 / static_cast<double>(m)) - c * s2_g_rinnov;
    return f;
  }

  const Matrix r_inv_g = r_inv.apply_left(obs.anomalies);
  Matrix factor = c * (obs.anomalies.transpose() * r_inv_g);
  factor = 0.5 * (factor + factor.transpose()).eval();
  factor.diagonal().array() += 1.0;

  Eigen::SelfAdjointEigenSolver<Matrix> es(factor);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("esrf: eigendecomposition failed");
  }
  Vector lambda = es.eigenvalues();
  if (lambda.minCoeff() < -1e-8) {
    throw std::runtime_error("esrf: factor not positive definite (corrupt input)");
  }
  lambda = lambda.cwiseMax(kEigFloor);

  // w_hat = 1/M - c S^2 (HA)^T R^{-1} (H zbar - y), with S^2 = V diag(1/lambda) V^T.
  const Vector g = obs.anomalies.transpose() * r_innov;
  const Vector s2g =
      es.eigenvectors() *
      (es.eigenvectors().transpose() * g).cwiseQuotient(lambda).eval();
  f.eigvecs = es.eigenvectors();
  f.lambda = std::move(lambda);
  f.w_hat = Vector::Constant(m, 1.0 / static_cast<double>(m)) - c * s2g;
  return f;
}

EsrfIntermediates esrf_intermediates(const ObsSpaceStats& obs,
                                     const Vector& y_obs,
                                     const Precision& r_inv, double alpha) {
  const EsrfFactorization f = esrf_factorize(obs, y_obs, r_inv, alpha);
  const Index m = obs.values.cols();
  EsrfIntermediates out;
  if (f.rank_one) {
    out.s = Matrix::Identity(m, m);
    if (f.unit_direction.size() != 0) {
      out.s += (1.0 / std::sqrt(f.rank_one_lambda) - 1.0) * f.unit_direction *
               f.unit_direction.transpose();
    }
  } else {
    out.s = f.eigvecs * f.lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
            f.eigvecs.transpose();
  }
  out.w_hat = f.w_hat;
  out.obs_anomalies = obs.anomalies;
  out.obs_mean = obs.mean;

  const double sum_tol = 1e-10;
  if ((out.s.colwise().sum().array() - 1.0).abs().maxCoeff() > sum_tol ||
      (out.s.rowwise().sum().array() - 1.0).abs().maxCoeff() > sum_tol) {
    throw std::runtime_error("esrf: S row/column sums drifted off 1");
  }
  if (std::abs(out.w_hat.sum() - 1.0) > sum_tol) {
    throw std::runtime_error("esrf: w_hat sum drifted off 1");
  }
  return out;
}

TransformMatrix esrf_coefficients(const ObsSpaceStats& obs, const Vector& y_obs,
                                  const Precision& r_inv, double alpha) {
  const EsrfIntermediates inter = esrf_intermediates(obs, y_obs, r_inv, alpha);
  const Index m = inter.s.rows();
  Matrix d = inter.s;
  d.colwise() += inter.w_hat - Vector::Constant(m, 1.0 / static_cast<double>(m));
  return TransformMatrix(std::move(d));
}

Ensemble esrf_analysis(const Ensemble& e, const ObsSpaceStats& obs,
                       const Vector& y_obs, const Precision& r_inv,
                       double alpha) {
  if (obs.values.cols() != e.size()) {
    throw std::invalid_argument("esrf_analysis: stats/ensemble size mismatch");
  }
  const EsrfFactorization f = esrf_factorize(obs, y_obs, r_inv, alpha);
  if (alpha == 1.0) return e;

  const Vector mean = ensemble_mean(e);
  const Matrix anom = e.members().colwise() - mean;
  const Vector shifted_mean = e.members() * f.w_hat;
  Matrix analysis;
  if (f.rank_one) {
    analysis = anom;
    if (f.unit_direction.size() != 0) {
      analysis += (1.0 / std::sqrt(f.rank_one_lambda) - 1.0) *
                  (anom * f.unit_direction) * f.unit_direction.transpose();
    }
  } else {
    analysis = (anom * f.eigvecs) *
               f.lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
               f.eigvecs.transpose();
  }
  analysis.colwise() += shifted_mean;
  return Ensemble(std::move(analysis));
}

}  // namespace hetpf
