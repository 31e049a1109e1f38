#pragma once

#include <Eigen/Cholesky>

#include "hetpf/ensemble.hpp"

namespace hetpf {

struct Lorenz63Params {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;

  void validate() const;
};

struct Lorenz96Params {
  Index sites = 40;     // L
  double forcing = 8.0;

  void validate() const;
};

/// Lorenz-96 advection coupled to a damped discrete wave equation. epsilon
/// is the time-scale ratio between advection and the fast waves, c the wave
/// speed over the grid, gamma the damping, delta the coupling strength.
struct CoupledParams {
  Index sites = 40;        // L
  double delta = 0.1;      // coupling strength, in [0, 1]
  double epsilon = 0.0025; // > 0
  double gamma = 0.1;      // damping, > 0
  double wave_speed = 0.5; // c, > 0

  void validate() const;
};

/// The wave equation is integrated as a first-order system in (h, hdot).
struct CoupledState {
  Vector x;     // length L
  Vector h;     // length L
  Vector hdot;  // length L
};

Vector lorenz63_rhs(const Vector& z, const Lorenz63Params& p);

/// dx_l/dt = (x_{l+1} - x_{l-2}) x_{l-1} - x_l + forcing, indices mod L.
Vector lorenz96_rhs(const Vector& x, const Lorenz96Params& p);

CoupledState coupled_rhs(const CoupledState& s, const CoupledParams& p);

/// Flat-state versions packed as (x, h, hdot) blocks of length L each.
Vector coupled_pack(const CoupledState& s);
CoupledState coupled_unpack(const Vector& z, Index sites);
Vector coupled_rhs_flat(const Vector& z, const CoupledParams& p);

/// Solves the periodic tridiagonal balance system
///   x_l = h_l - c^2 (h_{l+1} - 2 h_l + h_{l-1})
/// for h. The system matrix I - c^2 Lap is positive definite for any real c
/// (eigenvalues 1 + 4 c^2 sin^2(pi m / L)), so the factorization is cached
/// and reused across solves.
class BalanceSolver {
 public:
  BalanceSolver(Index sites, double wave_speed);

  Vector solve(const Vector& x) const;
  /// max |x - (I - c^2 Lap) h|.
  double residual(const Vector& x, const Vector& h) const;

 private:
  Index sites_;
  double wave_speed_;
  Eigen::LLT<Matrix> llt_;
};

Vector balance_solve(const Vector& x, double wave_speed);
double balance_residual(const Vector& x, const Vector& h, double wave_speed);

}  // namespace hetpf
