#include "hetpf/models.hpp"

#include <stdexcept>

namespace hetpf {

void Lorenz63Params::validate() const {
  if (sigma <= 0.0 || rho <= 0.0 || beta <= 0.0) {
    throw std::invalid_argument("Lorenz63Params: parameters must be positive");
  }
}

void Lorenz96Params::validate() const {
  if (sites < 4) {
    throw std::invalid_argument("Lorenz96Params: need at least 4 sites");
  }
}

void CoupledParams::validate() const {
  if (sites < 4 || epsilon <= 0.0 || gamma <= 0.0 || wave_speed <= 0.0 ||
      delta < 0.0 || delta > 1.0) {
    throw std::invalid_argument("CoupledParams: parameter out of range");
  }
}

Vector lorenz63_rhs(const Vector& z, const Lorenz63Params& p) {
  if (z.size() != 3) {
    throw std::invalid_argument("lorenz63_rhs: state must be 3-dimensional");
  }
  Vector f(3);
  f(0) = p.sigma * (z(1) - z(0));
  f(1) = z(0) * (p.rho - z(2)) - z(1);
  f(2) = z(0) * z(1) - p.beta * z(2);
  return f;
}

Vector lorenz96_rhs(const Vector& x, const Lorenz96Params& p) {
  p.validate();
  const Index l = p.sites;
  if (x.size() != l) {
    throw std::invalid_argument("lorenz96_rhs: state size does not match sites");
  }
  Vector f(l);
  for (Index i = 0; i < l; ++i) {
    const Index ip1 = (i + 1) % l;
    const Index im1 = (i + l - 1) % l;
    const Index im2 = (i + l - 2) % l;
    f(i) = (x(ip1) - x(im2)) * x(im1) - x(i) + p.forcing;
  }
  return f;
}

CoupledState coupled_rhs(const CoupledState& s, const CoupledParams& p) {
  p.validate();
  const Index l = p.sites;
  if (s.x.size() != l || s.h.size() != l || s.hdot.size() != l) {
    throw std::invalid_argument("coupled_rhs: state size does not match sites");
  }
  const double c2 = p.wave_speed * p.wave_speed;
  const double eps2 = p.epsilon * p.epsilon;
  CoupledState f;
  f.x.resize(l);
  f.h = s.hdot;
  f.hdot.resize(l);
  for (Index i = 0; i < l; ++i) {
    const Index ip1 = (i + 1) % l;
    const Index im1 = (i + l - 1) % l;
    const Index im2 = (i + l - 2) % l;
    f.x(i) = (1.0 - p.delta) * (s.x(ip1) - s.x(im2)) * s.x(im1) +
             p.delta * (s.x(im1) * s.h(ip1) - s.x(im2) * s.h(im1)) - s.x(i) +
             8.0;
    const double wave = -s.h(i) + c2 * (s.h(ip1) - 2.0 * s.h(i) + s.h(im1)) +
                        s.x(i) - 2.0 * eps2 * p.gamma * s.hdot(i);
    f.hdot(i) = wave / eps2;
  }
  return f;
}

Vector coupled_pack(const CoupledState& s) {
  const Index l = s.x.size();
  Vector z(3 * l);
  z.segment(0, l) = s.x;
  z.segment(l, l) = s.h;
  z.segment(2 * l, l) = s.hdot;
  return z;
}

CoupledState coupled_unpack(const Vector& z, Index sites) {
  if (z.size() != 3 * sites) {
    throw std::invalid_argument("coupled_unpack: state size does not match sites");
  }
  CoupledState s;
  s.x = z.segment(0, sites);
  s.h = z.segment(sites, sites);
  s.hdot = z.segment(2 * sites, sites);
  return s;
}

Vector coupled_rhs_flat(const Vector& z, const CoupledParams& p) {
  return coupled_pack(coupled_rhs(coupled_unpack(z, p.sites), p));
}

namespace {

Matrix balance_matrix(Index sites, double wave_speed) {
  const double c2 = wave_speed * wave_speed;
  Matrix a = Matrix::Zero(sites, sites);
  for (Index i = 0; i < sites; ++i) {
    a(i, i) = 1.0 + 2.0 * c2;
    a(i, (i + 1) % sites) -= c2;
    a(i, (i + sites - 1) % sites) -= c2;
  }
  return a;
}

}  // namespace

BalanceSolver::BalanceSolver(Index sites, double wave_speed)
    : sites_(sites), wave_speed_(wave_speed) {
  if (sites < 1) {
    throw std::invalid_argument("BalanceSolver: need at least one site");
  }
  llt_.compute(balance_matrix(sites, wave_speed));
  if (llt_.info() != Eigen::Success) {
    throw std::runtime_error("BalanceSolver: factorization failed");
  }
}

Vector BalanceSolver::solve(const Vector& x) const {
  if (x.size() != sites_) {
    throw std::invalid_argument("BalanceSolver: state size mismatch");
  }
  return llt_.solve(x);
}

double BalanceSolver::residual(const Vector& x, const Vector& h) const {
  return (x - balance_matrix(sites_, wave_speed_) * h).cwiseAbs().maxCoeff();
}

Vector balance_solve(const Vector& x, double wave_speed) {
  return BalanceSolver(x.size(), wave_speed).solve(x);
}

double balance_residual(const Vector& x, const Vector& h, double wave_speed) {
  return BalanceSolver(x.size(), wave_speed).residual(x, h);
}

}  // namespace hetpf
