#include <doctest.h>

#include <cmath>

#include "hetpf/localization.hpp"
#include "hetpf/rng.hpp"

using namespace hetpf;

namespace {

// Second branch of the taper polynomial, restated independently.
double taper_branch2(double t) {
  return -2.0 / (3.0 * t) + 4.0 - 5.0 * t + 5.0 / 3.0 * t * t +
         5.0 / 8.0 * t * t * t - 0.5 * t * t * t * t +
         1.0 / 12.0 * t * t * t * t * t;
}

GridGeometry make_grid(Index k, Index every) {
  GridGeometry geom;
  geom.num_points = k;
  geom.periodic = true;
  for (Index s = 0; s < k; s += every) geom.observed.push_back(s);
  return geom;
}

}  // namespace

TEST_SUITE("localization") {

TEST_CASE("taper") {
  CHECK(taper(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(taper(2.0) == 0.0);
  CHECK(taper(2.5) == 0.0);
  CHECK(taper(17.0) == 0.0);
  SUBCASE("both branches give 5/24 at t = 1") {
    CHECK(taper(1.0) == doctest::Approx(5.0 / 24.0).epsilon(1e-14));
    CHECK(taper_branch2(1.0) == doctest::Approx(5.0 / 24.0).epsilon(1e-14));
    CHECK(std::abs(taper(1.0) - taper_branch2(1.0)) < 1e-12);
  }
  SUBCASE("continuous at the support boundary") {
    CHECK(std::abs(taper(2.0 - 1e-3)) < 1e-12);
  }
  SUBCASE("monotone decay on a sample of points") {
    double prev = taper(0.0);
    for (double t = 0.1; t <= 2.05; t += 0.1) {
      const double cur = taper(t);
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
  }
  SUBCASE("negative input throws") {
    CHECK_THROWS_AS(taper(-0.1), std::invalid_argument);
  }
}

TEST_CASE("localized_r_inverse") {
  LocalizationSpec spec{4.0};
  SUBCASE("observation at the point itself contributes 1/r") {
    GridGeometry geom = make_grid(10, 1);
    const Precision p = localized_r_inverse(3, geom, spec, 8.0);
    CHECK(p.diagonal_entries()(3) == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
  }
  SUBCASE("observations beyond twice the radius contribute zero") {
    GridGeometry geom;
    geom.num_points = 40;
    geom.periodic = true;
    geom.observed = {20};
    LocalizationSpec tight{2.0};
    const Precision p = localized_r_inverse(0, geom, tight, 1.0);
    CHECK(p.diagonal_entries()(0) == 0.0);
    CHECK(p.is_zero());
  }
  SUBCASE("periodic wrap-around distance") {
    // Sites 0 and 38 on a 40-point ring are 2 apart.
    GridGeometry geom;
    geom.num_points = 40;
    geom.periodic = true;
    geom.observed = {38};
    const double r = 8.0;
    const Precision p = localized_r_inverse(0, geom, spec, r);
    CHECK(p.diagonal_entries()(0) ==
          doctest::Approx(taper(0.5) / r).epsilon(1e-14));
  }
}

TEST_CASE("field ensembles gather and scatter consistently") {
  RngStream rng(71);
  const Matrix state = rng.normal_matrix(12, 5);  // 4 points x 3 comps
  SUBCASE("contiguous layout") {
    const FieldEnsemble f(Ensemble(state), FieldLayout::contiguous(4, 3));
    CHECK((f.local(1) - state.block(3, 0, 3, 5)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("blocked layout") {
    const FieldEnsemble f(Ensemble(state), FieldLayout::blocked(4, 3));
    Matrix expected(3, 5);
    expected.row(0) = state.row(1);
    expected.row(1) = state.row(5);
    expected.row(2) = state.row(9);
    CHECK((f.local(1) - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("layout mismatch throws") {
    CHECK_THROWS_AS(FieldEnsemble(Ensemble(state), FieldLayout::contiguous(5, 3)),
                    std::invalid_argument);
  }
}

TEST_CASE("alpha = 0 reduces to the per-point square root filter") {
  RngStream rng(72);
  const Index k = 8, m = 6;
  const FieldEnsemble fields(Ensemble(rng.normal_matrix(k, m)),
                             FieldLayout::contiguous(k, 1));
  const GridGeometry geom = make_grid(k, 2);
  const LocalizationSpec spec{2.0};
  const double r = 0.8;
  const Vector y = rng.normal_vector(static_cast<Index>(geom.observed.size()));

  HybridConfig cfg;
  cfg.mode = BridgingMode::fixed(0.0);
  cfg.rejuvenation_beta = 0.0;
  RngStream dummy(0);
  const FieldEnsemble out =
      localized_hybrid_update(fields, y, geom, spec, r, cfg, dummy);

  std::vector<Index> obs_rows;
  for (const Index site : geom.observed) obs_rows.push_back(site);
  const ObsOperator h = ObsOperator::select_rows(obs_rows, k);
  const ObsSpaceStats stats = obs_space_stats(fields.state, h);
  for (Index point = 0; point < k; ++point) {
    const Precision rk = localized_r_inverse(point, geom, spec, r);
    Matrix expected = fields.local(point);
    if (!rk.is_zero()) {
      expected =
          esrf_analysis(Ensemble(expected), stats, y, rk, 0.0).members();
    }
    CHECK((out.local(point) - expected).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("points beyond the taper support are bit-unchanged pre-rejuvenation") {
  RngStream rng(73);
  const Index k = 40, m = 5;
  const FieldEnsemble fields(Ensemble(rng.normal_matrix(k, m)),
                             FieldLayout::contiguous(k, 1));
  GridGeometry geom;
  geom.num_points = k;
  geom.periodic = true;
  geom.observed = {20};
  const LocalizationSpec spec{3.0};
  const Vector y = Vector::Constant(1, 0.7);

  HybridConfig cfg;
  cfg.mode = BridgingMode::fixed(0.35);
  cfg.rejuvenation_beta = 0.0;
  RngStream dummy(0);
  const FieldEnsemble out =
      localized_hybrid_update(fields, y, geom, spec, 1.0, cfg, dummy);

  // Point 0 is 20 sites from the only observation; 20 > 2 * 3.
  CHECK((out.local(0) - fields.local(0)).cwiseAbs().maxCoeff() == 0.0);
  // The observed point itself moves.
  CHECK((out.local(20) - fields.local(20)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("huge radius matches the global filter at alpha = 0") {
  // With the radius far beyond the grid, every taper value rounds to 1 and
  // each point sees the full precision; the per-point square root update
  // then coincides with the global one on the assembled state.
  RngStream rng(74);
  const Index k = 4, m = 5;
  const FieldEnsemble fields(Ensemble(rng.normal_matrix(k, m)),
                             FieldLayout::contiguous(k, 1));
  const GridGeometry geom = make_grid(k, 1);
  const LocalizationSpec spec{1e12};
  const double r = 2.0;
  const Vector y = rng.normal_vector(k);

  HybridConfig cfg;
  cfg.mode = BridgingMode::fixed(0.0);
  cfg.rejuvenation_beta = 0.0;
  RngStream dummy(0);
  const FieldEnsemble local_out =
      localized_hybrid_update(fields, y, geom, spec, r, cfg, dummy);

  const ObsOperator h = ObsOperator::select_rows({0, 1, 2, 3}, k);
  const Ensemble global_out =
      hybrid_update(fields.state, y, Precision::iso(r, k), h, cfg, dummy);
  CHECK((local_out.state.members() - global_out.members()).cwiseAbs().maxCoeff() <
        1e-11);
}

TEST_CASE("single-point grid matches the global hybrid at interior alpha") {
  RngStream rng(75);
  const Index n = 3, m = 6;
  const FieldEnsemble fields(Ensemble(rng.normal_matrix(n, m)),
                             FieldLayout::contiguous(1, n));
  GridGeometry geom;
  geom.num_points = 1;
  geom.periodic = true;
  geom.observed = {0};
  const LocalizationSpec spec{5.0};
  const double r = 1.5;
  const Vector y = rng.normal_vector(1);

  HybridConfig cfg;
  cfg.mode = BridgingMode::fixed(0.5);
  cfg.rejuvenation_beta = 0.0;
  RngStream dummy_a(0), dummy_b(0);
  const FieldEnsemble local_out =
      localized_hybrid_update(fields, y, geom, spec, r, cfg, dummy_a);
  const ObsOperator h = ObsOperator::select_rows({0}, n);
  const Ensemble global_out = hybrid_update(fields.state, y, Precision::iso(r, 1),
                                            h, cfg, dummy_b);
  CHECK((local_out.state.members() - global_out.members()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("identical local ensembles under identical precisions move identically") {
  RngStream rng(76);
  const Index k = 6, m = 5;
  Matrix state = rng.normal_matrix(k, m);
  state.row(4) = state.row(2);  // two points share their local ensemble
  const FieldEnsemble fields(Ensemble(state), FieldLayout::contiguous(k, 1));
  const GridGeometry geom = make_grid(k, 1);
  const LocalizationSpec spec{1e12};  // all tapers round to exactly 1
  const Vector y = rng.normal_vector(k);

  HybridConfig cfg;
  cfg.mode = BridgingMode::fixed(0.4);
  cfg.rejuvenation_beta = 0.0;
  RngStream dummy(0);
  const FieldEnsemble out =
      localized_hybrid_update(fields, y, geom, spec, 1.0, cfg, dummy);
  CHECK((out.local(2) - out.local(4)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("shared rejuvenation noise acts identically on identical anomalies") {
  RngStream rng(77);
  const Index k = 5, m = 4;
  Matrix state = rng.normal_matrix(k, m);
  state.row(3) = state.row(1);
  const FieldEnsemble fields(Ensemble(state), FieldLayout::contiguous(k, 1));
  GridGeometry geom;
  geom.num_points = k;
  geom.periodic = true;
  geom.observed = {0};
  const LocalizationSpec spec{0.5};  // observation information stays at point 0

  HybridConfig cfg;
  cfg.mode = BridgingMode::fixed(0.0);
  cfg.rejuvenation_beta = 0.5;
  RngStream rng_noise(123);
  const FieldEnsemble out = localized_hybrid_update(
      fields, Vector::Constant(1, 0.2), geom, spec, 1.0, cfg, rng_noise);
  // Points 1 and 3 are untouched by the analysis and share anomalies, so the
  // shared xi must perturb them identically.
  CHECK((out.local(1) - out.local(3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.local(1) - fields.local(1)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("per-point coefficients keep unit column sums under tapered precisions") {
  RngStream rng(79);
  const Index k = 10, m = 6;
  const FieldEnsemble fields(Ensemble(rng.normal_matrix(k, m)),
                             FieldLayout::contiguous(k, 1));
  const GridGeometry geom = make_grid(k, 2);
  const LocalizationSpec spec{2.0};
  const Vector y = rng.normal_vector(static_cast<Index>(geom.observed.size()));
  std::vector<Index> obs_rows(geom.observed.begin(), geom.observed.end());
  const ObsOperator h = ObsOperator::select_rows(obs_rows, k);
  const ObsSpaceStats stats = obs_space_stats(fields.state, h);
  for (Index point = 0; point < k; ++point) {
    const Precision rk = localized_r_inverse(point, geom, spec, 2.0);
    if (rk.is_zero()) continue;
    const Matrix d_kf = esrf_coefficients(stats, y, rk, 0.35).entries();
    CHECK((d_kf.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    const WeightVector w = importance_weights(stats.values, y, rk, 0.35);
    const Matrix d_pf =
        etpf_coefficients(Ensemble(fields.local(point)), w).entries();
    CHECK((d_pf.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("adaptive per-point alpha saturates where no information arrives") {
  RngStream rng(78);
  const Index k = 12, m = 6;
  const FieldEnsemble fields(Ensemble(rng.normal_matrix(k, m)),
                             FieldLayout::contiguous(k, 1));
  GridGeometry geom;
  geom.num_points = k;
  geom.periodic = true;
  geom.observed = {0};
  const LocalizationSpec spec{1.0};

  HybridConfig cfg;
  cfg.mode = BridgingMode::adaptive(0.9);
  cfg.rejuvenation_beta = 0.0;
  RngStream dummy(0);
  LocalizedDiagnostics diag;
  localized_hybrid_update(fields, Vector::Constant(1, 0.1), geom, spec, 1.0,
                          cfg, dummy, &diag);
  // Far from the single observation the weights stay uniform for every
  // alpha, which is the saturation rule.
  CHECK(diag.alpha(6) == 1.0);
  CHECK(diag.ess(6) == doctest::Approx(static_cast<double>(m)));
}

}  // TEST_SUITE
