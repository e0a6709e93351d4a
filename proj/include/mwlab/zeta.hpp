#pragma once

namespace mwlab {

// Hurwitz zeta  sum_{k>=0} (k + a)^{-s}  for s > 1, a > 0, by direct
// summation of the head plus an Euler-Maclaurin tail. Absolute error is
// below 1e-13 for the parameter ranges used here.
double hurwitz_zeta(double s, double a);

// Riemann zeta for s > 1.
inline double riemann_zeta(double s) { return hurwitz_zeta(s, 1.0); }

}  // namespace mwlab
