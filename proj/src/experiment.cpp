#include "hetpf/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>

#include "hetpf/integrator.hpp"
#include "hetpf/localization.hpp"
#include "hetpf/parallel.hpp"

namespace hetpf {

namespace {

// Everything the assimilation loop needs to know about the chosen model.
struct ModelContext {
  RhsFn rhs;
  Index state_dim = 0;
  std::vector<Index> obs_rows;  // state rows read by the observations
  std::optional<FieldLayout> layout;
  std::shared_ptr<const BalanceSolver> balance;  // coupled model only

  Vector draw_initial(const ExperimentConfig& cfg, RngStream& rng) const;
};

// A point on the attractor, reached by a deterministic free run; the
// initial spread is centered here so the ensemble starts in the relevant
// region of state space.
Vector lorenz63_attractor_point(const Lorenz63Params& p) {
  Vector z = Vector::Ones(3);
  const RhsFn rhs = [&p](const Vector& state) { return lorenz63_rhs(state, p); };
  return integrate(rhs, z, 0.01, 1000);
}

Vector ModelContext::draw_initial(const ExperimentConfig& cfg,
                                  RngStream& rng) const {
  switch (cfg.model) {
    case ModelKind::kLorenz63: {
      static thread_local std::optional<std::pair<Lorenz63Params, Vector>> cache;
      if (!cache || cache->first.sigma != cfg.l63.sigma ||
          cache->first.rho != cfg.l63.rho || cache->first.beta != cfg.l63.beta) {
        cache = {cfg.l63, lorenz63_attractor_point(cfg.l63)};
      }
      return cache->second + cfg.init_spread * rng.normal_vector(3);
    }
    case ModelKind::kLorenz96:
      return cfg.init_spread * rng.normal_vector(cfg.l96.sites);
    case ModelKind::kCoupled: {
      // x is Gaussian, h solves the balance relation, hdot starts at rest.
      CoupledState s;
      s.x = cfg.init_spread * rng.normal_vector(cfg.coupled.sites);
      s.h = balance->solve(s.x);
      s.hdot = Vector::Zero(cfg.coupled.sites);
      return coupled_pack(s);
    }
  }
  throw std::logic_error("draw_initial: unreachable");
}

ModelContext make_context(const ExperimentConfig& cfg) {
  ModelContext ctx;
  ctx.state_dim = cfg.state_dim();
  switch (cfg.model) {
    case ModelKind::kLorenz63: {
      const Lorenz63Params p = cfg.l63;
      ctx.rhs = [p](const Vector& z) { return lorenz63_rhs(z, p); };
      break;
    }
    case ModelKind::kLorenz96: {
      const Lorenz96Params p = cfg.l96;
      ctx.rhs = [p](const Vector& z) { return lorenz96_rhs(z, p); };
      ctx.layout = FieldLayout::contiguous(p.sites, 1);
      break;
    }
    case ModelKind::kCoupled: {
      const CoupledParams p = cfg.coupled;
      ctx.rhs = [p](const Vector& z) { return coupled_rhs_flat(z, p); };
      ctx.layout = FieldLayout::blocked(p.sites, 3);
      ctx.balance = std::make_shared<BalanceSolver>(p.sites, p.wave_speed);
      break;
    }
  }
  for (const Index site : cfg.observed_sites()) {
    ctx.obs_rows.push_back(ctx.layout ? ctx.layout->row(site, 0) : site);
  }
  return ctx;
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double series_mean(const std::vector<double>& v, Index from) {
  double acc = 0.0;
  Index count = 0;
  for (std::size_t i = static_cast<std::size_t>(from); i < v.size(); ++i) {
    acc += v[i];
    ++count;
  }
  return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

}  // namespace

TruthAndObs generate_truth_and_obs(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelContext ctx = make_context(cfg);
  const Index steps = cfg.inner_steps();
  const Index q = static_cast<Index>(ctx.obs_rows.size());

  RngStream truth_rng = derive_stream(cfg.seed, "truth_init");
  RngStream noise_rng = derive_stream(cfg.seed, "obs_noise");

  TruthAndObs out;
  out.reference.reserve(static_cast<std::size_t>(cfg.cycles));
  out.observations.reserve(static_cast<std::size_t>(cfg.cycles));

  Vector z = ctx.draw_initial(cfg, truth_rng);
  const double noise_scale = std::sqrt(cfg.obs_variance);
  for (Index k = 0; k < cfg.cycles; ++k) {
    z = integrate(ctx.rhs, z, cfg.dt, steps);
    Vector y(q);
    for (Index i = 0; i < q; ++i) y(i) = z(ctx.obs_rows[i]);
    y += noise_scale * noise_rng.normal_vector(q);
    out.reference.push_back(z);
    out.observations.push_back(y);
  }
  return out;
}

ExperimentResult run_twin_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!(cfg.obs_variance > 0.0)) {
    throw std::invalid_argument(
        "run_twin_experiment: the filter needs a positive observation variance");
  }
  const auto t_start = std::chrono::steady_clock::now();
  const ModelContext ctx = make_context(cfg);
  const Index steps = cfg.inner_steps();
  const Index m = cfg.ensemble_size;
  const Index q = static_cast<Index>(ctx.obs_rows.size());

  const TruthAndObs truth = generate_truth_and_obs(cfg);

  RngStream init_rng = derive_stream(cfg.seed, "init_ensemble");
  RngStream rejuv_rng = derive_stream(cfg.seed, "rejuvenation");

  Matrix members(ctx.state_dim, m);
  for (Index i = 0; i < m; ++i) {
    members.col(i) = ctx.draw_initial(cfg, init_rng);
  }

  const ObsOperator h = ObsOperator::select_rows(ctx.obs_rows, ctx.state_dim);
  const Precision r_inv = Precision::iso(cfg.obs_variance, q);
  GridGeometry geom;
  LocalizationSpec loc_spec;
  if (cfg.localized) {
    geom.num_points = cfg.sites();
    geom.periodic = true;
    geom.observed = cfg.observed_sites();
    loc_spec.radius = cfg.radius;
  }

  // Member forecasts are independent; parallelism pays off only when the
  // per-member integration is heavy (the stiff coupled model).
  const int forecast_threads =
      (ctx.state_dim >= 60) ? std::min(default_threads(), 4) : 1;

  ExperimentResult result;
  const auto n = static_cast<std::size_t>(cfg.cycles);
  result.rmse_series.assign(n, std::numeric_limits<double>::quiet_NaN());
  result.alpha_mean.assign(n, std::numeric_limits<double>::quiet_NaN());
  result.alpha_min.assign(n, std::numeric_limits<double>::quiet_NaN());
  result.alpha_max.assign(n, std::numeric_limits<double>::quiet_NaN());
  result.ess_mean.assign(n, std::numeric_limits<double>::quiet_NaN());

  for (Index k = 0; k < cfg.cycles; ++k) {
    try {
      parallel_for(m, forecast_threads, [&](Index i) {
        members.col(i) = integrate(ctx.rhs, members.col(i), cfg.dt, steps);
      });

      const bool in_spin_up = k < cfg.spin_up;
      const HybridConfig hybrid_cfg = cfg.hybrid(/*force_pure_kalman=*/in_spin_up);
      const Vector& y = truth.observations[static_cast<std::size_t>(k)];

      if (cfg.localized) {
        FieldEnsemble fields(Ensemble(members), *ctx.layout);
        LocalizedDiagnostics diag;
        fields = localized_hybrid_update(fields, y, geom, loc_spec,
                                         cfg.obs_variance, hybrid_cfg,
                                         rejuv_rng, &diag);
        members = fields.state.members();
        result.alpha_mean[k] = diag.alpha.mean();
        result.alpha_min[k] = diag.alpha.minCoeff();
        result.alpha_max[k] = diag.alpha.maxCoeff();
        result.ess_mean[k] = diag.ess.mean();
      } else {
        double alpha_used = 0.0, ess = 0.0;
        const Ensemble analysis = hybrid_update(Ensemble(members), y, r_inv, h,
                                                hybrid_cfg, rejuv_rng,
                                                &alpha_used, &ess);
        members = analysis.members();
        result.alpha_mean[k] = alpha_used;
        result.alpha_min[k] = alpha_used;
        result.alpha_max[k] = alpha_used;
        result.ess_mean[k] = ess;
      }

      if (cfg.model == ModelKind::kCoupled && in_spin_up) {
        // Spin-up keeps the fast fields in exact balance with x.
        const Index sites = cfg.coupled.sites;
        for (Index i = 0; i < m; ++i) {
          members.col(i).segment(sites, sites) =
              ctx.balance->solve(members.col(i).segment(0, sites));
        }
      }

      const Vector mean = members.rowwise().mean();
      result.rmse_series[k] =
          rmse(mean, truth.reference[static_cast<std::size_t>(k)]);
      if (!std::isfinite(result.rmse_series[k])) {
        throw std::runtime_error("non-finite analysis mean");
      }
    } catch (const std::exception&) {
      result.diverged = true;
      result.diverged_at = k;
      break;  // series keeps NaN from this cycle onward
    }
  }

  result.spin_up = cfg.spin_up;
  result.rmse_time_avg = series_mean(result.rmse_series, cfg.spin_up);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

std::string format_results_csv(const ExperimentResult& result) {
  std::string out = "cycle,rmse,alpha_mean,alpha_min,alpha_max,ess_mean\n";
  for (std::size_t k = 0; k < result.rmse_series.size(); ++k) {
    out += std::to_string(k + 1);
    out += "," + csv_number(result.rmse_series[k]);
    out += "," + csv_number(result.alpha_mean[k]);
    out += "," + csv_number(result.alpha_min[k]);
    out += "," + csv_number(result.alpha_max[k]);
    out += "," + csv_number(result.ess_mean[k]);
    out += "\n";
  }
  out += "summary," + csv_number(result.rmse_time_avg);
  out += "," + csv_number(series_mean(result.alpha_mean, result.spin_up));
  out += "," + csv_number(series_mean(result.alpha_min, result.spin_up));
  out += "," + csv_number(series_mean(result.alpha_max, result.spin_up));
  out += "," + csv_number(series_mean(result.ess_mean, result.spin_up));
  out += "\n";
  return out;
}

void emit_results(const ExperimentResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("emit_results: cannot open '" + path + "'");
  }
  out << format_results_csv(result);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, int threads) {
  std::vector<Index> sizes = base.sweep.ensemble_sizes;
  if (sizes.empty()) sizes.push_back(base.ensemble_size);
  std::vector<std::uint64_t> seeds = base.sweep.seeds;
  if (seeds.empty()) seeds.push_back(base.seed);

  struct Job {
    bool adaptive;
    double value;
  };
  std::vector<Job> modes;
  for (const double a : base.sweep.alphas) modes.push_back({false, a});
  for (const double t : base.sweep.thetas) modes.push_back({true, t});
  if (modes.empty()) {
    modes.push_back({base.adaptive, base.adaptive ? base.theta : base.alpha});
  }

  std::vector<SweepRow> rows;
  for (const Index size : sizes) {
    for (const std::uint64_t seed : seeds) {
      for (const Job& job : modes) {
        SweepRow row;
        row.ensemble_size = size;
        row.seed = seed;
        row.adaptive = job.adaptive;
        (job.adaptive ? row.theta : row.alpha) = job.value;
        rows.push_back(row);
      }
    }
  }

  parallel_for(static_cast<Index>(rows.size()), threads, [&](Index i) {
    SweepRow& row = rows[static_cast<std::size_t>(i)];
    ExperimentConfig cfg = base;
    cfg.ensemble_size = row.ensemble_size;
    cfg.seed = row.seed;
    cfg.adaptive = row.adaptive;
    if (row.adaptive) {
      cfg.theta = row.theta;
    } else {
      cfg.alpha = row.alpha;
    }
    const ExperimentResult res = run_twin_experiment(cfg);
    row.rmse = res.rmse_time_avg;
    row.alpha_mean = series_mean(res.alpha_mean, cfg.spin_up);
    row.ess_mean = series_mean(res.ess_mean, cfg.spin_up);
    row.diverged = res.diverged;
  });
  return rows;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "ensemble_size,seed,bridging,alpha,theta,rmse,alpha_mean,ess_mean,diverged\n";
  for (const SweepRow& row : rows) {
    out += std::to_string(row.ensemble_size);
    out += "," + std::to_string(row.seed);
    out += row.adaptive ? ",adaptive" : ",fixed";
    out += "," + (row.adaptive ? std::string() : csv_number(row.alpha));
    out += "," + (row.adaptive ? csv_number(row.theta) : std::string());
    out += "," + csv_number(row.rmse);
    out += "," + csv_number(row.alpha_mean);
    out += "," + csv_number(row.ess_mean);
    out += row.diverged ? ",1" : ",0";
    out += "\n";
  }
  return out;
}

}  // namespace hetpf
