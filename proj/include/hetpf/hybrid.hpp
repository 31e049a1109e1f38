#pragma once

#include "hetpf/ensemble.hpp"
#include "hetpf/esrf.hpp"
#include "hetpf/etpf.hpp"
#include "hetpf/observation.hpp"
#include "hetpf/rng.hpp"

namespace hetpf {

/// Bridging parameter selection: either a fixed alpha in [0,1] or adaptive
/// selection targeting an effective-sample-size ratio theta in [0,1].
class BridgingMode {
 public:
  static BridgingMode fixed(double alpha);
  static BridgingMode adaptive(double theta);

  bool is_adaptive() const { return adaptive_; }
  double alpha() const { return alpha_; }
  double theta() const { return theta_; }

 private:
  BridgingMode() = default;
  bool adaptive_ = false;
  double alpha_ = 0.0;
  double theta_ = 1.0;
};

/// Which factor of the split likelihood is applied first.
enum class Ordering {
  kEtpfFirst,  // particle transform, then square root filter
  kEsrfFirst,  // square root filter, then particle transform
};

struct HybridConfig {
  BridgingMode mode = BridgingMode::fixed(0.0);
  Ordering ordering = Ordering::kEtpfFirst;
  double rejuvenation_beta = 0.0;  // >= 0

  void validate() const;
};

/// Solves M_eff(alpha)/M = theta by bisection on [0,1] (40 iterations; the
/// ratio is monotonically decreasing in alpha). Returns exactly 0 when
/// theta = 1 and exactly 1 when even alpha = 1 keeps the ratio above theta.
double adaptive_alpha(const Matrix& obs_values, const Vector& y_obs,
                      const Precision& r_inv, double theta);

/// Particle rejuvenation: adds beta/sqrt(M-1) times forecast-anomaly
/// combinations with row-centered i.i.d. standard normal xi, so the ensemble
/// mean is preserved. One scalar xi_ij is shared across all state
/// components. beta = 0 returns the input unchanged.
Ensemble rejuvenate(const Ensemble& analysis, const AnomalyMatrix& forecast_anomalies,
                    double beta, RngStream& rng);

/// Same rejuvenation given an already drawn, row-centered xi matrix
/// (localized updates share one xi across all grid points).
Ensemble rejuvenate_with_noise(const Ensemble& analysis,
                               const AnomalyMatrix& forecast_anomalies,
                               double beta, const Matrix& xi_centered);

/// Draws the M x M rejuvenation noise and centers each row to sum to zero.
Matrix draw_centered_noise(Index m, RngStream& rng);

/// One hybrid analysis step. The bridging alpha is resolved once from the
/// forecast ensemble; the second stage recomputes observation-space
/// statistics (and, for the ESRF-first ordering, weights) from the
/// intermediate ensemble; rejuvenation uses the forecast anomalies.
Ensemble hybrid_update(const Ensemble& e, const Vector& y_obs,
                       const Precision& r_inv, const ObsOperator& h,
                       const HybridConfig& cfg, RngStream& rng,
                       double* alpha_used = nullptr, double* ess = nullptr);

}  // namespace hetpf
