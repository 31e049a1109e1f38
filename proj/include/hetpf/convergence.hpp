#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetpf/config.hpp"

namespace hetpf {

struct ConvergeRow {
  Index ensemble_size = 0;
  double alpha = 0.0;
  double rmse = 0.0;   // sqrt of the mean squared error of the analysis mean
  bool optimal = false;  // marks the argmin alpha for this ensemble size
};

/// Exact posterior mean of the study's scalar inference problem, by dense
/// quadrature of the prior-likelihood product (composite Simpson on a wide
/// bracket around the prior and observation).
double posterior_mean_quadrature(const ConvergeSpec& spec);

/// Single Bayesian step study: for every (M, alpha) draw `repeats`
/// ensembles from the bimodal prior, run one particle-transform /
/// square-root step at fixed alpha, and score the analysis mean against the
/// quadrature posterior mean. Each repeat evaluates the whole alpha grid on
/// the same draw, and repeats use index-derived streams, so the result is
/// deterministic and independent of thread count.
std::vector<ConvergeRow> run_convergence_study(const ConvergeSpec& spec,
                                               std::uint64_t seed, int threads);

std::string format_converge_csv(const std::vector<ConvergeRow>& rows);

}  // namespace hetpf
