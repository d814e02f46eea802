#include "extdef/brown_resnick.hpp"

#include <cmath>
#include <limits>

#include "extdef/errors.hpp"
#include "extdef/special.hpp"

namespace extdef {

std::string to_string(Family f) { return f == Family::BR ? "br" : "ibr"; }

Family family_from_string(const std::string& s) {
    if (s == "br" || s == "BR") return Family::BR;
    if (s == "ibr" || s == "IBR") return Family::IBR;
    throw config_error("unknown model family '" + s + "' (expected br or ibr)");
}

double variogram(double h, double lambda, double kappa) {
    return std::pow(h / lambda, kappa);
}

double br_dependence_a(double h, double lambda, double kappa) {
    return std::sqrt(2.0 * variogram(h, lambda, kappa));
}

double theta_from_a(double a) { return 2.0 * norm_cdf(0.5 * a); }

double br_exponent(double z1, double z2, double a) {
    const double l = std::log(z1 / z2);
    return norm_cdf(0.5 * a - l / a) / z1 + norm_cdf(0.5 * a + l / a) / z2;
}

BrExponent br_exponent_derivs(double z1, double z2, double a) {
    const double l = std::log(z1 / z2);
    const double a1 = 0.5 * a - l / a;
    const double a2 = 0.5 * a + l / a;
    const double p1 = norm_cdf(a1), p2 = norm_cdf(a2);
    const double f1 = norm_pdf(a1), f2 = norm_pdf(a2);
    const double z1sq = z1 * z1, z2sq = z2 * z2;
    BrExponent e;
    e.v = p1 / z1 + p2 / z2;
    e.v1 = -p1 / z1sq - f1 / (a * z1sq) + f2 / (a * z1 * z2);
    e.v2 = -p2 / z2sq - f2 / (a * z2sq) + f1 / (a * z1 * z2);
    e.v12 = a1 * f1 / (a * a * z1sq * z2) + a2 * f2 / (a * a * z1 * z2sq) -
            f1 / (a * z1sq * z2) - f2 / (a * z1 * z2sq);
    return e;
}

double exp_to_frechet(double z) {
    if (z <= 0.0) return 0.0;
    return -1.0 / std::log1p(-std::exp(-z));
}

double exp_to_frechet_deriv(double z) {
    const double u = -std::expm1(-z);       // 1 - e^{-z}
    const double logu = std::log1p(-std::exp(-z));
    return std::exp(-z) / (u * logu * logu);
}

namespace {

void check_pair_params(double lambda, double kappa, double h) {
    if (!(lambda > 0.0)) throw numeric_error("pair model: lambda must be > 0");
    if (!(kappa > 0.0 && kappa <= 2.0)) throw numeric_error("pair model: kappa must be in (0,2]");
    if (!(h >= 0.0)) throw numeric_error("pair model: h must be >= 0");
}

}  // namespace

double br_pair_cdf(double z1, double z2, double lambda, double kappa, double h) {
    check_pair_params(lambda, kappa, h);
    if (z1 <= 0.0 || z2 <= 0.0) return 0.0;
    if (h == 0.0) return -std::expm1(-std::min(z1, z2));  // complete dependence limit
    const double a = br_dependence_a(h, lambda, kappa);
    return std::exp(-br_exponent(exp_to_frechet(z1), exp_to_frechet(z2), a));
}

double ibr_pair_survival(double y1, double y2, double lambda, double kappa, double h) {
    check_pair_params(lambda, kappa, h);
    if (y1 < 0.0 || y2 < 0.0) throw numeric_error("ibr_pair_survival: values must be >= 0");
    if (y1 == 0.0) return std::exp(-y2);
    if (y2 == 0.0) return std::exp(-y1);
    if (h == 0.0) return std::exp(-std::max(y1, y2));
    const double a = br_dependence_a(h, lambda, kappa);
    return std::exp(-br_exponent(1.0 / y1, 1.0 / y2, a));
}

double ibr_pair_cdf(double y1, double y2, double lambda, double kappa, double h) {
    return 1.0 - std::exp(-y1) - std::exp(-y2) + ibr_pair_survival(y1, y2, lambda, kappa, h);
}

double censored_pair_loglik(double z_i, double z_j, double u, Family family, double lambda,
                            double kappa, double h) {
    check_pair_params(lambda, kappa, h);
    if (!(u > 0.0)) throw numeric_error("censored_pair_loglik: u must be > 0");
    if (h == 0.0)
        throw numeric_error("censored_pair_loglik: h = 0 gives a degenerate pair contribution");
    const double a = br_dependence_a(h, lambda, kappa);

    const bool ei = z_i > u, ej = z_j > u;
    double value = -std::numeric_limits<double>::infinity();
    const char* branch = nullptr;

    if (family == Family::BR) {
        const double u_f = exp_to_frechet(u);
        if (ei && ej) {
            branch = "density";
            const double zf1 = exp_to_frechet(z_i), zf2 = exp_to_frechet(z_j);
            const BrExponent e = br_exponent_derivs(zf1, zf2, a);
            const double core = e.v1 * e.v2 - e.v12;
            if (core > 0.0)
                value = -e.v + std::log(core) + std::log(exp_to_frechet_deriv(z_i)) +
                        std::log(exp_to_frechet_deriv(z_j));
        } else if (ei || ej) {
            branch = "partial";
            const double z = ei ? z_i : z_j;
            const BrExponent e = br_exponent_derivs(exp_to_frechet(z), u_f, a);
            if (-e.v1 > 0.0)
                value = -e.v + std::log(-e.v1) + std::log(exp_to_frechet_deriv(z));
        } else {
            branch = "cdf";
            // F(u,u) = (1-e^{-u})^theta on exponential margins.
            value = theta_from_a(a) * std::log1p(-std::exp(-u));
        }
    } else {
        if (ei && ej) {
            branch = "density";
            const double w1 = 1.0 / z_i, w2 = 1.0 / z_j;
            const BrExponent e = br_exponent_derivs(w1, w2, a);
            const double core = e.v1 * e.v2 - e.v12;
            if (core > 0.0)
                value = -e.v + std::log(core) + 2.0 * (std::log(w1) + std::log(w2));
        } else if (ei || ej) {
            branch = "partial";
            const double y = ei ? z_i : z_j;
            const double w = 1.0 / y;
            const BrExponent e = br_exponent_derivs(w, 1.0 / u, a);
            // d/dy [1 - e^{-y} - e^{-u} + S(y,u)] = e^{-y} + e^{-V} V1 w^2
            const double g = std::exp(-y) + std::exp(-e.v) * e.v1 * w * w;
            if (g > 0.0) value = std::log(g);
        } else {
            branch = "cdf";
            const double theta = theta_from_a(a);
            value = std::log(1.0 - 2.0 * std::exp(-u) + std::exp(-theta * u));
        }
    }

    if (!std::isfinite(value))
        throw numeric_error(std::string("censored_pair_loglik: non-finite ") + branch +
                            " contribution at (z_i=" + std::to_string(z_i) +
                            ", z_j=" + std::to_string(z_j) + ", h=" + std::to_string(h) + ")");
    return value;
}

}  // namespace extdef
