#include "hetpf/localization.hpp"

#include <cmath>
#include <stdexcept>

namespace hetpf {

void GridGeometry::validate() const {
  if (num_points < 1) {
    throw std::invalid_argument("GridGeometry: need at least one grid point");
  }
  if (observed.empty()) {
    throw std::invalid_argument("GridGeometry: need at least one observed point");
  }
  for (const Index q : observed) {
    if (q < 0 || q >= num_points) {
      throw std::invalid_argument("GridGeometry: observed index out of range");
    }
  }
}

double GridGeometry::distance(Index k, Index site) const {
  const double d = std::abs(static_cast<double>(k - site));
  if (!periodic) return d;
  return std::min(d, static_cast<double>(num_points) - d);
}

void LocalizationSpec::validate() const {
  if (!(radius > 0.0)) {
    throw std::invalid_argument("LocalizationSpec: radius must be positive");
  }
}

double taper(double t) {
  if (t < 0.0) {
    throw std::invalid_argument("taper: argument must be nonnegative");
  }
  if (t <= 1.0) {
    const double t2 = t * t;
    return 1.0 - 5.0 / 3.0 * t2 + 5.0 / 8.0 * t2 * t + 0.5 * t2 * t2 -
           0.25 * t2 * t2 * t;
  }
  if (t < 2.0) {
    const double t2 = t * t;
    return -2.0 / (3.0 * t) + 4.0 - 5.0 * t + 5.0 / 3.0 * t2 +
           5.0 / 8.0 * t2 * t - 0.5 * t2 * t2 + 1.0 / 12.0 * t2 * t2 * t;
  }
  return 0.0;
}

Precision localized_r_inverse(Index k, const GridGeometry& geom,
                              const LocalizationSpec& spec, double r) {
  geom.validate();
  spec.validate();
  if (!(r > 0.0)) {
    throw std::invalid_argument("localized_r_inverse: variance must be positive");
  }
  Vector entries(static_cast<Index>(geom.observed.size()));
  for (std::size_t q = 0; q < geom.observed.size(); ++q) {
    entries(static_cast<Index>(q)) =
        taper(geom.distance(k, geom.observed[q]) / spec.radius) / r;
  }
  return Precision::diagonal(std::move(entries));
}

FieldLayout FieldLayout::contiguous(Index num_points, Index comps_per_point) {
  return FieldLayout(num_points, comps_per_point, false);
}

FieldLayout FieldLayout::blocked(Index num_points, Index comps_per_point) {
  return FieldLayout(num_points, comps_per_point, true);
}

FieldEnsemble::FieldEnsemble(Ensemble assembled, FieldLayout field_layout)
    : state(std::move(assembled)), layout(field_layout) {
  if (state.state_dim() != layout.state_dim()) {
    throw std::invalid_argument("FieldEnsemble: layout does not match state dimension");
  }
}

Matrix FieldEnsemble::local(Index point) const {
  Matrix block(layout.comps_per_point(), state.size());
  for (Index c = 0; c < layout.comps_per_point(); ++c) {
    block.row(c) = state.members().row(layout.row(point, c));
  }
  return block;
}

namespace {

// Scatter a comps x M local block back into the assembled matrix.
void scatter_local(Matrix& assembled, const FieldLayout& layout, Index point,
                   const Matrix& block) {
  for (Index c = 0; c < layout.comps_per_point(); ++c) {
    assembled.row(layout.row(point, c)) = block.row(c);
  }
}

}  // namespace

FieldEnsemble localized_hybrid_update(const FieldEnsemble& fields,
                                      const Vector& y_obs,
                                      const GridGeometry& geom,
                                      const LocalizationSpec& spec, double r,
                                      const HybridConfig& cfg, RngStream& rng,
                                      LocalizedDiagnostics* diag) {
  cfg.validate();
  geom.validate();
  spec.validate();
  const Index num_points = geom.num_points;
  const Index q_count = static_cast<Index>(geom.observed.size());
  if (fields.layout.num_points() != num_points) {
    throw std::invalid_argument("localized_hybrid_update: grid/layout mismatch");
  }
  if (y_obs.size() != q_count) {
    throw std::invalid_argument("localized_hybrid_update: observation count mismatch");
  }
  const Index m = fields.state.size();

  std::vector<Index> obs_rows(geom.observed.size());
  for (std::size_t q = 0; q < geom.observed.size(); ++q) {
    obs_rows[q] = fields.layout.row(geom.observed[q], 0);
  }
  const ObsOperator h = ObsOperator::select_rows(obs_rows, fields.state.state_dim());

  std::vector<Precision> r_inv;
  r_inv.reserve(static_cast<std::size_t>(num_points));
  for (Index k = 0; k < num_points; ++k) {
    r_inv.push_back(localized_r_inverse(k, geom, spec, r));
  }

  const ObsSpaceStats forecast_stats = obs_space_stats(fields.state, h);

  // alpha_k is resolved once per assimilation step from the forecast.
  Vector alpha(num_points);
  for (Index k = 0; k < num_points; ++k) {
    const Precision& rk = r_inv[static_cast<std::size_t>(k)];
    if (cfg.mode.is_adaptive()) {
      alpha(k) = adaptive_alpha(forecast_stats.values, y_obs, rk, cfg.mode.theta());
    } else {
      alpha(k) = cfg.mode.alpha();
    }
  }

  Vector ess = Vector::Constant(num_points, static_cast<double>(m));

  // Particle stage at one grid point: local transport with local costs.
  const auto particle_point = [&](const FieldEnsemble& in, Index k,
                                  const ObsSpaceStats& stats,
                                  bool record_ess) -> Matrix {
    const Matrix block = in.local(k);
    const Precision& rk = r_inv[static_cast<std::size_t>(k)];
    if (rk.is_zero()) return block;  // no observation carries information here
    const WeightVector w = importance_weights(stats.values, y_obs, rk, alpha(k));
    if (record_ess) ess(k) = effective_sample_size(w);
    if (alpha(k) == 0.0) return block;  // uniform weights: identity coupling
    const TransformMatrix d = etpf_coefficients(Ensemble(block), w);
    return block * d.entries();
  };

  // LETKF stage at one grid point: global obs anomalies, local precision.
  const auto letkf_point = [&](const FieldEnsemble& in, Index k,
                               const ObsSpaceStats& stats) -> Matrix {
    const Matrix block = in.local(k);
    const Precision& rk = r_inv[static_cast<std::size_t>(k)];
    if (rk.is_zero() || alpha(k) == 1.0) return block;
    const Ensemble analyzed =
        esrf_analysis(Ensemble(block), stats, y_obs, rk, alpha(k));
    return analyzed.members();
  };

  const auto run_stage = [&](const FieldEnsemble& in, bool particle,
                             const ObsSpaceStats& stats,
                             bool record_ess) -> FieldEnsemble {
    Matrix out = in.state.members();
    for (Index k = 0; k < num_points; ++k) {
      const Matrix block = particle ? particle_point(in, k, stats, record_ess)
                                    : letkf_point(in, k, stats);
      scatter_local(out, in.layout, k, block);
    }
    return FieldEnsemble(Ensemble(std::move(out)), in.layout);
  };

  const AnomalyMatrix forecast_anoms = anomalies(fields.state);

  FieldEnsemble analysis = [&] {
    if (cfg.ordering == Ordering::kEtpfFirst) {
      FieldEnsemble mid = run_stage(fields, /*particle=*/true, forecast_stats,
                                    /*record_ess=*/true);
      const ObsSpaceStats mid_stats = obs_space_stats(mid.state, h);
      return run_stage(mid, /*particle=*/false, mid_stats, false);
    }
    FieldEnsemble mid =
        run_stage(fields, /*particle=*/false, forecast_stats, false);
    const ObsSpaceStats mid_stats = obs_space_stats(mid.state, h);
    return run_stage(mid, /*particle=*/true, mid_stats, /*record_ess=*/true);
  }();

  if (diag != nullptr) {
    diag->alpha = alpha;
    diag->ess = ess;
  }

  // One shared xi for all grid points preserves spatial regularity.
  Ensemble rejuvenated = rejuvenate(analysis.state, forecast_anoms,
                                    cfg.rejuvenation_beta, rng);
  return FieldEnsemble(std::move(rejuvenated), fields.layout);
}

}  // namespace hetpf
