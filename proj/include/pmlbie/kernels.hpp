// Scalar kernels of the complexified layer potentials: the stretched
// Helmholtz fundamental solution, its conormal derivatives, and the
// stretched Laplace double-layer kernel used for the corner function.
#pragma once

#include <complex>

#include "pmlbie/pml.hpp"
#include "pmlbie/special.hpp"

namespace pmlbie {

// G(x,y) = (i/4) H0(k rho(x,y)); symmetric in x and y.
inline cplx green(const ComplexPoint& x, const ComplexPoint& y, double k) {
  const cplx rho = complex_distance(x, y);
  return cplx(0.0, 0.25) * hankel1_0_1(k * rho).h0;
}

// Conormal derivative in the source point y: (A(y) nu) . grad_y G, where
// A = diag(alpha, 1/alpha) and d/dy2 picks up the chain-rule factor
// alpha(y2) through the complexified height. The 1/alpha of the conormal
// and the alpha of the chain rule cancel in the vertical component:
//   = (i k / 4) (H1(k rho)/rho) [alpha(y2) nu1 (x1-y1) + nu2 (x2t-y2t)]
inline cplx green_conormal(const ComplexPoint& x, const ComplexPoint& y,
                           double nu1, double nu2, double k,
                           const PmlMap& pml) {
  const double d1 = diff_x1(x, y);
  const cplx d2 = diff_x2t(x, y);
  const cplx rho = complex_distance(x, y);
  const HankelPair hp = hankel1_0_1(k * rho);
  const cplx dir = pml.alpha(y.x2) * (nu1 * d1) + nu2 * d2;
  return cplx(0.0, 0.25 * k) * hp.h1 / rho * dir;
}

// Conormal derivative in the target point x (same structure, opposite
// sign of the difference vector):
//   = -(i k / 4) (H1(k rho)/rho) [alpha(x2) nu1 (x1-y1) + nu2 (x2t-y2t)]
inline cplx green_conormal_target(const ComplexPoint& x,
                                  const ComplexPoint& y, double nu1,
                                  double nu2, double k, const PmlMap& pml) {
  const double d1 = diff_x1(x, y);
  const cplx d2 = diff_x2t(x, y);
  const cplx rho = complex_distance(x, y);
  const HankelPair hp = hankel1_0_1(k * rho);
  const cplx dir = pml.alpha(x.x2) * (nu1 * d1) + nu2 * d2;
  return cplx(0.0, -0.25 * k) * hp.h1 / rho * dir;
}

// Conormal derivative (in y) of the stretched Laplace fundamental solution
// G0 = -(1/2 pi) log rho:
//   = (1/2 pi) [alpha(y2) nu1 (x1-y1) + nu2 (x2t-y2t)] / rho^2
inline cplx laplace_conormal(const ComplexPoint& x, const ComplexPoint& y,
                             double nu1, double nu2, const PmlMap& pml) {
  const double d1 = diff_x1(x, y);
  const cplx d2 = diff_x2t(x, y);
  const cplx r2 = complex_distance_sq(x, y);
  if (r2 == cplx(0.0, 0.0))
    throw std::domain_error("laplace_conormal: coincident points");
  const cplx dir = pml.alpha(y.x2) * (nu1 * d1) + nu2 * d2;
  return dir / (2.0 * detail::PI * r2);
}

}  // namespace pmlbie
