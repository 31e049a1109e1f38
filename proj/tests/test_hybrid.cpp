#include <doctest.h>

#include <cmath>

#include "hetpf/hybrid.hpp"
#include "oracles.hpp"

using namespace hetpf;

namespace {

ObsOperator identity_op(Index n) {
  return ObsOperator::linear(Matrix::Identity(n, n));
}

}  // namespace

TEST_SUITE("hybrid") {

TEST_CASE("adaptive alpha") {
  const Precision unit = Precision::iso(1.0, 1);
  SUBCASE("theta = 1 returns exactly zero") {
    Matrix values(1, 3);
    values << 0.0, 1.0, 5.0;
    CHECK(adaptive_alpha(values, Vector::Zero(1), unit, 1.0) == 0.0);
  }
  SUBCASE("equidistant members saturate to exactly one") {
    Matrix values(1, 4);
    values << 2.0, -2.0, 2.0, -2.0;
    CHECK(adaptive_alpha(values, Vector::Zero(1), unit, 0.8) == 1.0);
  }
  SUBCASE("two-member closed form: alpha = ln(3)/2 at target ESS 1.6") {
    // Solving M_eff(alpha) = 1.6 for members with innovations 0 and 2 gives
    // w1 = 0.75, i.e. exp(-2 alpha) = 1/3.
    Matrix values(1, 2);
    values << 1.0, 3.0;
    const double alpha =
        adaptive_alpha(values, Vector::Constant(1, 1.0), unit, 0.8);
    CHECK(alpha == doctest::Approx(std::log(3.0) / 2.0).epsilon(1e-6));
  }
  SUBCASE("interior solutions hit the target ratio within 1e-4") {
    RngStream rng(51);
    for (int trial = 0; trial < 20; ++trial) {
      const Index m = 5 + static_cast<Index>(rng.uniform() * 20.0);
      const Matrix values = 2.0 * rng.normal_matrix(1, m);
      const Vector y = rng.normal_vector(1);
      const double theta = 0.55 + 0.4 * rng.uniform();
      const double alpha = adaptive_alpha(values, y, unit, theta);
      if (alpha > 0.0 && alpha < 1.0) {
        const double ratio =
            effective_sample_size(importance_weights(values, y, unit, alpha)) /
            static_cast<double>(m);
        CHECK(std::abs(ratio - theta) <= 1e-4);
      }
    }
  }
}

TEST_CASE("rejuvenation") {
  RngStream sample_rng(61);
  const Ensemble e(2.0 * sample_rng.normal_matrix(3, 6));
  const AnomalyMatrix anoms = anomalies(e);
  SUBCASE("beta = 0 is the exact identity") {
    RngStream rng(1);
    const Ensemble out = rejuvenate(e, anoms, 0.0, rng);
    CHECK((out.members() - e.members()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("ensemble mean is preserved to 1e-12") {
    RngStream rng(2);
    const Vector before = ensemble_mean(e);
    for (int draw = 0; draw < 200; ++draw) {
      const Ensemble out = rejuvenate(e, anoms, 0.4, rng);
      CHECK((ensemble_mean(out) - before).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("same seed reproduces bit-for-bit") {
    RngStream rng_a(77), rng_b(77);
    const Ensemble a = rejuvenate(e, anoms, 0.2, rng_a);
    const Ensemble b = rejuvenate(e, anoms, 0.2, rng_b);
    CHECK((a.members() - b.members()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("negative beta is rejected") {
    CHECK_THROWS_AS(rejuvenate_with_noise(e, anoms, -0.1, Matrix::Zero(6, 6)),
                    std::invalid_argument);
  }
}

TEST_CASE("hybrid limits reproduce the pure filters") {
  RngStream rng(62);
  const ObsOperator h = identity_op(2);
  const Precision r_inv = Precision::iso(1.3, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Ensemble e(2.0 * rng.normal_matrix(2, 7));
    const Vector y = rng.normal_vector(2);
    const Ordering ordering =
        (trial % 2 == 0) ? Ordering::kEtpfFirst : Ordering::kEsrfFirst;
    RngStream dummy(0);

    HybridConfig cfg;
    cfg.ordering = ordering;
    cfg.rejuvenation_beta = 0.0;

    cfg.mode = BridgingMode::fixed(0.0);
    const Ensemble kalman_limit = hybrid_update(e, y, r_inv, h, cfg, dummy);
    const ObsSpaceStats stats = obs_space_stats(e, h);
    const Ensemble pure_esrf =
        apply_transform(e, esrf_coefficients(stats, y, r_inv, 0.0));
    CHECK((kalman_limit.members() - pure_esrf.members()).cwiseAbs().maxCoeff() <
          1e-10);

    cfg.mode = BridgingMode::fixed(1.0);
    const Ensemble particle_limit = hybrid_update(e, y, r_inv, h, cfg, dummy);
    const WeightVector w = importance_weights(stats.values, y, r_inv, 1.0);
    const Ensemble pure_etpf = apply_transform(e, etpf_coefficients(e, w));
    CHECK((particle_limit.members() - pure_etpf.members()).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("two-member worked composition at alpha = 0.5") {
  // Composed by hand: particle transform of {-1, 1} against y = 1, then the
  // scalar square root update of the intermediate pair.
  const double z1 = -1.0, z2 = 1.0, y_val = 1.0, r = 1.0, alpha = 0.5;
  Matrix states(1, 2);
  states << z1, z2;
  HybridConfig cfg;
  cfg.mode = BridgingMode::fixed(alpha);
  cfg.ordering = Ordering::kEtpfFirst;
  cfg.rejuvenation_beta = 0.0;
  RngStream dummy(0);
  const Ensemble out =
      hybrid_update(Ensemble(states), Vector::Constant(1, y_val),
                    Precision::iso(r, 1), identity_op(1), cfg, dummy);

  const oracles::Hybrid2Result expect =
      oracles::hybrid2_etpf_esrf(z1, z2, y_val, r, alpha);
  CHECK(out.members()(0, 0) == doctest::Approx(expect.za1).epsilon(1e-12));
  CHECK(out.members()(0, 1) == doctest::Approx(expect.za2).epsilon(1e-12));
}

TEST_CASE("adaptive mode resolves alpha once from the forecast") {
  RngStream rng(63);
  const Ensemble e(rng.normal_matrix(1, 10));
  const Vector y = Vector::Constant(1, 2.0);
  const Precision r_inv = Precision::iso(1.0, 1);
  const ObsOperator h = identity_op(1);
  HybridConfig cfg;
  cfg.mode = BridgingMode::adaptive(0.7);
  cfg.rejuvenation_beta = 0.0;
  RngStream dummy(0);
  double alpha_used = -1.0, ess = 0.0;
  hybrid_update(e, y, r_inv, h, cfg, dummy, &alpha_used, &ess);
  const ObsSpaceStats stats = obs_space_stats(e, h);
  CHECK(alpha_used == adaptive_alpha(stats.values, y, r_inv, 0.7));
  if (alpha_used > 0.0 && alpha_used < 1.0) {
    CHECK(ess / 10.0 == doctest::Approx(0.7).epsilon(2e-4));
  }
}

TEST_CASE("mean preservation composes through the full update") {
  // With beta > 0 the rejuvenated analysis keeps the analysis mean.
  RngStream rng(64);
  const Ensemble e(rng.normal_matrix(2, 6));
  const Vector y = rng.normal_vector(2);
  const Precision r_inv = Precision::iso(2.0, 2);
  const ObsOperator h = identity_op(2);
  HybridConfig with_noise, without_noise;
  with_noise.mode = BridgingMode::fixed(0.4);
  with_noise.rejuvenation_beta = 0.3;
  without_noise.mode = BridgingMode::fixed(0.4);
  without_noise.rejuvenation_beta = 0.0;
  RngStream rng_a(5), rng_b(5);
  const Ensemble noisy = hybrid_update(e, y, r_inv, h, with_noise, rng_a);
  const Ensemble clean = hybrid_update(e, y, r_inv, h, without_noise, rng_b);
  CHECK((ensemble_mean(noisy) - ensemble_mean(clean)).cwiseAbs().maxCoeff() <
        1e-12);
}

}  // TEST_SUITE
