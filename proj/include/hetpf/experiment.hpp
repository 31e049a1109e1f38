#pragma once

#include <string>
#include <vector>

#include "hetpf/config.hpp"
#include "hetpf/ensemble.hpp"

namespace hetpf {

/// Reference trajectory sampled at observation times plus the noisy
/// observations taken from it.
struct TruthAndObs {
  std::vector<Vector> reference;     // z_ref(t_k), k = 1..cycles
  std::vector<Vector> observations;  // y_obs(t_k)
};

/// Per-run outputs. All series have exactly `cycles` entries; the summary
/// RMSE averages the post-spin-up cycles. Divergence is reported, never
/// silently swallowed: the series keeps NaN entries from the divergence
/// cycle onward.
struct ExperimentResult {
  std::vector<double> rmse_series;
  std::vector<double> alpha_mean;
  std::vector<double> alpha_min;
  std::vector<double> alpha_max;
  std::vector<double> ess_mean;
  double rmse_time_avg = 0.0;
  Index spin_up = 0;  // leading cycles excluded from the summary row
  bool diverged = false;
  Index diverged_at = -1;
  double wall_seconds = 0.0;
};

/// Integrates a reference trajectory from a random draw of the initial
/// distribution (its own stream) and perturbs the observed readings with
/// N(0, r) noise (another stream). The reference uses the same stepper and
/// dt as the filter.
TruthAndObs generate_truth_and_obs(const ExperimentConfig& cfg);

/// Full twin experiment: draw the initial ensemble, then alternate member
/// forecasts and hybrid analyses against the synthetic observations. During
/// spin-up alpha is forced to 0 and, for the coupled model, the h fields
/// are rebalanced from x after every analysis.
ExperimentResult run_twin_experiment(const ExperimentConfig& cfg);

/// Writes the per-cycle CSV plus one trailing summary row. Identical config
/// and seed produce byte-identical output.
std::string format_results_csv(const ExperimentResult& result);
void emit_results(const ExperimentResult& result, const std::string& path);

/// One sweep job and its summary numbers.
struct SweepRow {
  Index ensemble_size = 0;
  std::uint64_t seed = 0;
  bool adaptive = false;
  double alpha = 0.0;  // fixed-mode value
  double theta = 0.0;  // adaptive-mode value
  double rmse = 0.0;
  double alpha_mean = 0.0;  // resolved alpha averaged over scored cycles
  double ess_mean = 0.0;
  bool diverged = false;
};

/// Grid over ensemble sizes x seeds x (fixed alphas then adaptive thetas);
/// axes left empty in the sweep section fall back to the base config value.
/// Jobs run concurrently and are reduced in job order.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, int threads);

std::string format_sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace hetpf
