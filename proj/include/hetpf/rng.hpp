#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace hetpf {

/// Deterministic random stream. Gaussian and uniform draws are generated by
/// explicit formulas on top of mt19937_64, so a given (seed, draw sequence)
/// reproduces bit-for-bit on any platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; draws are produced in pairs.
  double normal();

  /// Vector of n i.i.d. standard normals, drawn component by component.
  Eigen::VectorXd normal_vector(Eigen::Index n);

  /// M x M matrix of i.i.d. standard normals, drawn row-major.
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a master seed with a stream name (and optional indices) into an
/// independent substream seed. Toggling one feature of an experiment must
/// not perturb the draws of the others, so every consumer gets a named
/// stream derived from the one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index0 = 0, std::uint64_t index1 = 0);

inline RngStream derive_stream(std::uint64_t master, std::string_view stream,
                               std::uint64_t index0 = 0,
                               std::uint64_t index1 = 0) {
  return RngStream(derive_seed(master, stream, index0, index1));
}

}  // namespace hetpf
