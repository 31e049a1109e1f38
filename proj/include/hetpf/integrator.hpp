#pragma once

#include <functional>

#include "hetpf/ensemble.hpp"

namespace hetpf {

using RhsFn = std::function<Vector(const Vector&)>;

/// One implicit midpoint step: solves z' = z + dt f((z + z')/2).
///
/// Fixed-point iteration runs first (at most 50 sweeps, residual target
/// 1e-12 scaled by the state magnitude). If it diverges or stalls -- which
/// happens for stiff systems like the coupled wave model -- a modified
/// Newton iteration takes over with a forward-difference Jacobian; that
/// fallback is available for state dimensions up to 120. Throws on
/// non-convergence, which signals a step size too large for the stiffness.
Vector implicit_midpoint_step(const RhsFn& rhs, const Vector& z, double dt);

/// Integrates n_steps midpoint steps of size dt.
Vector integrate(const RhsFn& rhs, Vector z, double dt, Index n_steps);

}  // namespace hetpf
