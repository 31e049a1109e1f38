#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetpf/hybrid.hpp"
#include "hetpf/models.hpp"

namespace hetpf {

enum class ModelKind { kLorenz63, kLorenz96, kCoupled };

/// Parameter grids for the sweep subcommand. Fixed-alpha and adaptive-theta
/// jobs are unioned (not crossed); ensemble sizes and seeds cross with both.
struct SweepSpec {
  std::vector<double> alphas;
  std::vector<double> thetas;
  std::vector<Index> ensemble_sizes;
  std::vector<std::uint64_t> seeds;

  bool empty() const {
    return alphas.empty() && thetas.empty() && ensemble_sizes.empty() &&
           seeds.empty();
  }
};

/// Single-step study setup: a two-component Gaussian mixture prior observed
/// once through the identity with Gaussian error.
struct ConvergeSpec {
  double prior_mean_low = -1.0;
  double prior_mean_high = 1.0;
  double prior_sigma = 0.5;
  double obs_variance = 0.5;
  double y_obs = 1.0;
  Index repeats = 10000;
  std::vector<Index> ensemble_sizes = {4, 32, 256};
  std::vector<double> alphas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                0.6, 0.7, 0.8, 0.9, 1.0};
};

/// Full twin-experiment setup. Defaults depend on the model and match the
/// standard benchmark settings; parse_config fills them for keys that are
/// not given explicitly.
struct ExperimentConfig {
  ModelKind model = ModelKind::kLorenz63;
  Lorenz63Params l63;
  Lorenz96Params l96;
  CoupledParams coupled;

  double dt = 0.01;        // integrator step
  double dt_obs = 0.12;    // observation interval, integer multiple of dt
  Index obs_every = 3;     // observe every n-th site (component for lorenz63)
  double obs_variance = 8.0;

  Index ensemble_size = 20;
  Ordering ordering = Ordering::kEtpfFirst;
  bool adaptive = false;
  double alpha = 0.2;
  double theta = 0.9;
  double rejuvenation = 0.2;

  bool localized = false;
  double radius = 4.0;

  Index cycles = 2000;   // total assimilation cycles (includes spin-up)
  Index spin_up = 0;     // leading cycles with alpha forced to 0, unscored
  std::uint64_t seed = 1;
  double init_spread = 1.0;

  SweepSpec sweep;
  ConvergeSpec converge;

  Index state_dim() const;
  Index sites() const;  // grid size (3 components for lorenz63)
  std::vector<Index> observed_sites() const;
  Index inner_steps() const;
  HybridConfig hybrid(bool force_pure_kalman = false) const;

  void validate() const;
};

/// Parses the sectioned key = value format. Unknown sections or keys are
/// rejected with their line number; so are malformed and out-of-range
/// values. Keys that are absent take the model's documented defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical text form; parse_config(format_config(c)) reproduces c exactly
/// (doubles are printed with round-trip precision).
std::string format_config(const ExperimentConfig& cfg);

std::string model_name(ModelKind kind);

}  // namespace hetpf
