#include "hetpf/hybrid.hpp"

#include <cmath>
#include <stdexcept>

namespace hetpf {

BridgingMode BridgingMode::fixed(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("BridgingMode: fixed alpha must lie in [0, 1]");
  }
  BridgingMode m;
  m.adaptive_ = false;
  m.alpha_ = alpha;
  return m;
}

BridgingMode BridgingMode::adaptive(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("BridgingMode: theta must lie in [0, 1]");
  }
  BridgingMode m;
  m.adaptive_ = true;
  m.theta_ = theta;
  return m;
}

void HybridConfig::validate() const {
  if (rejuvenation_beta < 0.0) {
    throw std::invalid_argument("HybridConfig: rejuvenation beta must be >= 0");
  }
}

double adaptive_alpha(const Matrix& obs_values, const Vector& y_obs,
                      const Precision& r_inv, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::invalid_argument("adaptive_alpha: theta must lie in [0, 1]");
  }
  const double m = static_cast<double>(obs_values.cols());
  if (theta >= 1.0) return 0.0;  // ratio at alpha = 0 is already 1

  const auto ratio = [&](double alpha) {
    const WeightVector w = importance_weights(obs_values, y_obs, r_inv, alpha);
    return effective_sample_size(w) / m;
  };

  if (ratio(1.0) > theta) return 1.0;  // target unreachable: saturate

  double lo = 0.0, hi = 1.0;  // ratio(lo) - theta >= 0 >= ratio(hi) - theta
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ratio(mid) > theta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Matrix draw_centered_noise(Index m, RngStream& rng) {
  Matrix xi = rng.normal_matrix(m, m);
  xi.colwise() -= xi.rowwise().mean().eval();
  return xi;
}

Ensemble rejuvenate_with_noise(const Ensemble& analysis,
                               const AnomalyMatrix& forecast_anomalies,
                               double beta, const Matrix& xi_centered) {
  if (beta < 0.0) {
    throw std::invalid_argument("rejuvenate: beta must be >= 0");
  }
  if (beta == 0.0) return analysis;
  if (forecast_anomalies.size() != analysis.size() ||
      forecast_anomalies.state_dim() != analysis.state_dim()) {
    throw std::invalid_argument("rejuvenate: anomaly dimensions mismatch");
  }
  const double scale = beta / std::sqrt(static_cast<double>(analysis.size() - 1));
  return Ensemble(analysis.members() +
                  scale * (forecast_anomalies.entries() * xi_centered));
}

Ensemble rejuvenate(const Ensemble& analysis, const AnomalyMatrix& forecast_anomalies,
                    double beta, RngStream& rng) {
  if (beta == 0.0) return analysis;
  return rejuvenate_with_noise(analysis, forecast_anomalies, beta,
                               draw_centered_noise(analysis.size(), rng));
}

Ensemble hybrid_update(const Ensemble& e, const Vector& y_obs,
                       const Precision& r_inv, const ObsOperator& h,
                       const HybridConfig& cfg, RngStream& rng,
                       double* alpha_used, double* ess) {
  cfg.validate();
  const ObsSpaceStats forecast_stats = obs_space_stats(e, h);
  const double alpha =
      cfg.mode.is_adaptive()
          ? adaptive_alpha(forecast_stats.values, y_obs, r_inv, cfg.mode.theta())
          : cfg.mode.alpha();
  if (alpha_used != nullptr) *alpha_used = alpha;

  const AnomalyMatrix forecast_anoms = anomalies(e);

  const auto particle_stage = [&](const Ensemble& in, const ObsSpaceStats& stats,
                                  double* stage_ess) {
    const WeightVector w = importance_weights(stats.values, y_obs, r_inv, alpha);
    if (stage_ess != nullptr) *stage_ess = effective_sample_size(w);
    if (alpha == 0.0) return in;  // uniform weights: identity coupling is optimal
    return apply_transform(in, etpf_coefficients(in, w));
  };

  Ensemble analysis = [&] {
    if (cfg.ordering == Ordering::kEtpfFirst) {
      const Ensemble mid = particle_stage(e, forecast_stats, ess);
      const ObsSpaceStats mid_stats = obs_space_stats(mid, h);
      return esrf_analysis(mid, mid_stats, y_obs, r_inv, alpha);
    }
    const Ensemble mid = esrf_analysis(e, forecast_stats, y_obs, r_inv, alpha);
    const ObsSpaceStats mid_stats = obs_space_stats(mid, h);
    return particle_stage(mid, mid_stats, ess);
  }();

  return rejuvenate(analysis, forecast_anoms, cfg.rejuvenation_beta, rng);
}

}  // namespace hetpf
