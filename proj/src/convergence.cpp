#include "hetpf/convergence.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hetpf/hybrid.hpp"
#include "hetpf/parallel.hpp"
#include "hetpf/rng.hpp"

namespace hetpf {

namespace {

// log of the unnormalized posterior density at z.
double log_posterior(const ConvergeSpec& spec, double z) {
  const double s2 = spec.prior_sigma * spec.prior_sigma;
  const double d1 = z - spec.prior_mean_low;
  const double d2 = z - spec.prior_mean_high;
  const double prior =
      std::exp(-0.5 * d1 * d1 / s2) + std::exp(-0.5 * d2 * d2 / s2);
  const double dy = spec.y_obs - z;
  return std::log(0.5 * prior) - 0.5 * dy * dy / spec.obs_variance;
}

Vector draw_prior_sample(const ConvergeSpec& spec, Index m, RngStream& rng) {
  Vector z(m);
  for (Index i = 0; i < m; ++i) {
    const double mean =
        rng.uniform() < 0.5 ? spec.prior_mean_low : spec.prior_mean_high;
    z(i) = mean + spec.prior_sigma * rng.normal();
  }
  return z;
}

}  // namespace

double posterior_mean_quadrature(const ConvergeSpec& spec) {
  const double span = 12.0 * std::max(spec.prior_sigma, std::sqrt(spec.obs_variance));
  const double lo = std::min({spec.prior_mean_low, spec.prior_mean_high, spec.y_obs}) - span;
  const double hi = std::max({spec.prior_mean_low, spec.prior_mean_high, spec.y_obs}) + span;
  const Index n = 1 << 20;  // composite Simpson, even interval count
  const double step = (hi - lo) / static_cast<double>(n);

  double norm = 0.0;
  double first_moment = 0.0;
  double log_shift = log_posterior(spec, 0.5 * (lo + hi));
  for (Index i = 0; i <= n; ++i) {
    const double z = lo + step * static_cast<double>(i);
    const double coeff = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double density = std::exp(log_posterior(spec, z) - log_shift);
    norm += coeff * density;
    first_moment += coeff * density * z;
  }
  if (!(norm > 0.0)) {
    throw std::runtime_error("posterior_mean_quadrature: vanishing normalizer");
  }
  return first_moment / norm;
}

std::vector<ConvergeRow> run_convergence_study(const ConvergeSpec& spec,
                                               std::uint64_t seed, int threads) {
  if (spec.repeats < 1) {
    throw std::invalid_argument("run_convergence_study: repeats must be >= 1");
  }
  for (std::size_t i = 1; i < spec.ensemble_sizes.size(); ++i) {
    if (spec.ensemble_sizes[i] <= spec.ensemble_sizes[i - 1]) {
      throw std::invalid_argument(
          "run_convergence_study: ensemble sizes must be ascending");
    }
  }
  const double exact_mean = posterior_mean_quadrature(spec);
  const Index n_alpha = static_cast<Index>(spec.alphas.size());
  const Vector y = Vector::Constant(1, spec.y_obs);
  const Precision r_inv = Precision::iso(spec.obs_variance, 1);
  const ObsOperator h = ObsOperator::select_rows({0}, 1);

  std::vector<ConvergeRow> rows;
  for (std::size_t mi = 0; mi < spec.ensemble_sizes.size(); ++mi) {
    const Index m = spec.ensemble_sizes[mi];
    if (m < 2) {
      throw std::invalid_argument("run_convergence_study: ensemble sizes must be >= 2");
    }

    // Fixed chunking keeps the reduction order independent of thread count.
    const Index n_chunks = std::min<Index>(64, spec.repeats);
    Matrix chunk_sums = Matrix::Zero(n_chunks, n_alpha);
    parallel_for(n_chunks, threads, [&](Index chunk) {
      const Index begin = chunk * spec.repeats / n_chunks;
      const Index end = (chunk + 1) * spec.repeats / n_chunks;
      RngStream dummy(0);  // rejuvenation is off; no draws are consumed
      for (Index rep = begin; rep < end; ++rep) {
        RngStream rng = derive_stream(seed, "converge",
                                      static_cast<std::uint64_t>(mi),
                                      static_cast<std::uint64_t>(rep));
        Matrix sample(1, m);
        sample.row(0) = draw_prior_sample(spec, m, rng).transpose();
        const Ensemble prior(sample);
        for (Index ai = 0; ai < n_alpha; ++ai) {
          HybridConfig cfg;
          cfg.mode = BridgingMode::fixed(spec.alphas[static_cast<std::size_t>(ai)]);
          cfg.ordering = Ordering::kEtpfFirst;
          cfg.rejuvenation_beta = 0.0;
          const Ensemble analysis = hybrid_update(prior, y, r_inv, h, cfg, dummy);
          const double err = ensemble_mean(analysis)(0) - exact_mean;
          chunk_sums(chunk, ai) += err * err;
        }
      }
    });

    const Vector mse =
        chunk_sums.colwise().sum().transpose() / static_cast<double>(spec.repeats);
    Index best = 0;
    for (Index ai = 1; ai < n_alpha; ++ai) {
      if (mse(ai) < mse(best)) best = ai;
    }
    for (Index ai = 0; ai < n_alpha; ++ai) {
      ConvergeRow row;
      row.ensemble_size = m;
      row.alpha = spec.alphas[static_cast<std::size_t>(ai)];
      row.rmse = std::sqrt(mse(ai));
      row.optimal = (ai == best);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_converge_csv(const std::vector<ConvergeRow>& rows) {
  std::string out = "ensemble_size,alpha,rmse,optimal\n";
  char buf[64];
  for (const ConvergeRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.12g,%.12g,%d\n",
                  static_cast<long long>(row.ensemble_size), row.alpha, row.rmse,
                  row.optimal ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace hetpf
