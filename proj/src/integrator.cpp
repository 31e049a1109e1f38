#include "hetpf/integrator.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hetpf {

namespace {

constexpr int kMaxFixedPoint = 50;
constexpr int kMaxNewton = 30;
constexpr Index kMaxNewtonDim = 120;

double residual_tol(const Vector& z) {
  return 1e-12 * std::max(1.0, z.cwiseAbs().maxCoeff());
}

// Defects below this are treated as the rounding floor of the defect
// evaluation itself; stiff right-hand sides (1/eps^2 cancellations) cannot
// be driven further down in double precision.
double stagnation_tol(const Vector& z) {
  return 1e-9 * std::max(1.0, z.cwiseAbs().maxCoeff());
}

// G(z') = z' - z - dt f((z + z')/2); a root is the midpoint step.
Vector defect(const RhsFn& rhs, const Vector& z, const Vector& zp, double dt) {
  return zp - z - dt * rhs(0.5 * (z + zp));
}

Matrix forward_difference_jacobian(const RhsFn& rhs, const Vector& at) {
  const Index n = at.size();
  const Vector f0 = rhs(at);
  Matrix jac(n, n);
  Vector pert = at;
  for (Index j = 0; j < n; ++j) {
    const double h = 1e-8 * std::max(1.0, std::abs(at(j)));
    pert(j) = at(j) + h;
    jac.col(j) = (rhs(pert) - f0) / h;
    pert(j) = at(j);
  }
  return jac;
}

Vector newton_fallback(const RhsFn& rhs, const Vector& z, Vector zp, double dt) {
  const Index n = z.size();
  if (n > kMaxNewtonDim) {
    throw std::runtime_error(
        "implicit_midpoint_step: fixed point diverged and state too large "
        "for the Newton fallback (dt too large for this stiffness)");
  }
  const double tol = residual_tol(z);
  const double floor_tol = stagnation_tol(z);
  if (!zp.allFinite()) zp = z;

  // Modified Newton: the Jacobian is factored once and refreshed only when
  // progress stalls.
  const auto factor_at = [&](const Vector& guess) {
    const Matrix jac = forward_difference_jacobian(rhs, 0.5 * (z + guess));
    return Eigen::PartialPivLU<Matrix>(Matrix::Identity(n, n) - 0.5 * dt * jac);
  };
  Eigen::PartialPivLU<Matrix> lu = factor_at(zp);

  double best = std::numeric_limits<double>::infinity();
  Vector zp_best = zp;
  int since_improvement = 0;
  int refreshes = 0;
  for (int it = 0; it < kMaxNewton; ++it) {
    const Vector g = defect(rhs, z, zp, dt);
    const double res = g.cwiseAbs().maxCoeff();
    if (!std::isfinite(res)) break;
    if (res <= tol) return zp;
    if (res < best) {
      best = res;
      zp_best = zp;
      since_improvement = 0;
    } else if (++since_improvement >= 3) {
      if (refreshes < 2) {
        lu = factor_at(zp_best);
        zp = zp_best;
        since_improvement = 0;
        ++refreshes;
        continue;
      }
      break;  // stalled with a fresh Jacobian: at the attainable floor
    }
    zp -= lu.solve(g);
    if (!zp.allFinite()) break;
  }
  if (best <= floor_tol) return zp_best;
  throw std::runtime_error("implicit_midpoint_step: Newton fallback did not converge");
}

}  // namespace

Vector implicit_midpoint_step(const RhsFn& rhs, const Vector& z, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("implicit_midpoint_step: dt must be positive");
  }
  const double tol = residual_tol(z);

  // The sweep update is next = z + dt f(mid(zp)), so ||next - zp|| is
  // exactly the defect of zp: convergence is certified on the iterate
  // being returned, never on the step size alone.
  Vector zp = z + dt * rhs(z);  // explicit Euler predictor
  double first_delta = -1.0;
  for (int it = 0; it < kMaxFixedPoint; ++it) {
    const Vector next = z + dt * rhs(0.5 * (z + zp));
    const double delta = (next - zp).cwiseAbs().maxCoeff();
    if (!std::isfinite(delta) || !next.allFinite()) break;
    if (delta <= tol) return zp;
    if (first_delta < 0.0) {
      first_delta = delta;
    } else if (delta > 10.0 * first_delta) {
      break;  // non-normal transient growth or divergence: go to Newton
    }
    zp = next;
  }
  return newton_fallback(rhs, z, zp, dt);
}

Vector integrate(const RhsFn& rhs, Vector z, double dt, Index n_steps) {
  for (Index s = 0; s < n_steps; ++s) {
    z = implicit_midpoint_step(rhs, z, dt);
  }
  return z;
}

}  // namespace hetpf
