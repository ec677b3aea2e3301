#pragma once

// Special functions backing the tail probabilities and the von Mises-Fisher
// normalizer. All routines are double precision and pure.

namespace survanchor::specfun {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// directly so that small tails keep full relative precision.
double gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi2_sf(double x, double dof);

/// Upper tail of the standard normal distribution.
double normal_sf(double z);

/// log I_nu(x) for the modified Bessel function of the first kind, nu >= 0,
/// x >= 0. Power series below the crossover, Hankel expansion above it.
double log_bessel_i(double nu, double x);

/// I_{nu+1}(x) / I_nu(x).
double bessel_ratio(double nu, double x);

}  // namespace survanchor::specfun
