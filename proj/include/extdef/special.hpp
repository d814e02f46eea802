#pragma once

// Scalar special functions used throughout the dependence models.
// Accuracy on the ranges used here (|x| <= 40, order <= 30) is better than
// 1e-12 relative; see tests/test_special.cpp for the series/quadrature checks.

namespace extdef {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal distribution function, via erfc.
double norm_cdf(double x);

/// Inverse of norm_cdf on (0,1). Wichura's AS241 rational approximation
/// with one Halley refinement step.
double norm_quantile(double p);

/// Modified Bessel function of the second kind, real order nu > 0, x > 0.
double bessel_k(double nu, double x);

}  // namespace extdef
