#pragma once

#include <string>

namespace extdef {

/// Pairwise dependence families fitted by censored composite likelihood.
enum class Family { BR, IBR };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Semivariogram (h/lambda)^kappa of the stationary model.
double variogram(double h, double lambda, double kappa);

/// Dependence scale a = sqrt(2*gamma(h)) entering the pairwise exponent.
double br_dependence_a(double h, double lambda, double kappa);

/// theta(h) = V(1,1) = 2*Phi(a/2), the pairwise extremal coefficient.
double theta_from_a(double a);

/// Pairwise Brown-Resnick exponent function on Frechet-scale arguments,
/// V(z1,z2) = Phi(a/2 - log(z1/z2)/a)/z1 + Phi(a/2 + log(z1/z2)/a)/z2,
/// together with its first and mixed second partial derivatives.
struct BrExponent {
    double v;
    double v1;   // dV/dz1  (negative)
    double v2;   // dV/dz2  (negative)
    double v12;  // d2V/dz1 dz2
};
double br_exponent(double z1, double z2, double a);
BrExponent br_exponent_derivs(double z1, double z2, double a);

/// Monotone transform from standard exponential to unit Frechet scale,
/// zF = -1/log(1 - e^{-z}), and its derivative.
double exp_to_frechet(double z);
double exp_to_frechet_deriv(double z);

/// Joint distribution function of a BR pair expressed on standard
/// exponential margins. h = 0 degenerates to the comonotone (min-margin)
/// distribution.
double br_pair_cdf(double z1, double z2, double lambda, double kappa, double h);

/// Joint survival function of an inverted BR pair on standard exponential
/// margins, exp(-V(1/y1, 1/y2)).
double ibr_pair_survival(double y1, double y2, double lambda, double kappa, double h);

/// Joint distribution function of the inverted BR pair by inclusion-
/// exclusion: F(y1,y2) = 1 - e^{-y1} - e^{-y2} + S(y1,y2).
double ibr_pair_cdf(double y1, double y2, double lambda, double kappa, double h);

/// One censored pairwise likelihood contribution, log g_u(z_i, z_j):
/// the joint density when both values exceed u, the partial derivative of
/// the joint CDF when exactly one does, and log F(u,u) when neither does.
/// All quantities on standard exponential margins.
double censored_pair_loglik(double z_i, double z_j, double u, Family family, double lambda,
                            double kappa, double h);

}  // namespace extdef
