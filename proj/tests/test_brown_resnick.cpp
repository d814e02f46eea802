#include <doctest.h>

#include <cmath>
#include <initializer_list>

#include "extdef/brown_resnick.hpp"
#include "extdef/errors.hpp"
#include "extdef/rng.hpp"

using namespace extdef;

TEST_CASE("exponent homogeneity V(tz1,tz2) = V(z1,z2)/t") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const double z1 = 0.05 + 5.0 * rng.uniform();
        const double z2 = 0.05 + 5.0 * rng.uniform();
        const double a = 0.05 + 3.0 * rng.uniform();
        const double t = 0.1 + 4.0 * rng.uniform();
        const double lhs = br_exponent(t * z1, t * z2, a);
        const double rhs = br_exponent(z1, z2, a) / t;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("exponent limits in the dependence scale") {
    // h -> infinity: V -> 1/z1 + 1/z2; h -> 0: V -> 1/min(z1,z2).
    const double z1 = 0.8, z2 = 2.5;
    CHECK(br_exponent(z1, z2, 40.0) == doctest::Approx(1.0 / z1 + 1.0 / z2).epsilon(1e-9));
    CHECK(br_exponent(z1, z2, 1e-8) == doctest::Approx(1.0 / std::min(z1, z2)).epsilon(1e-6));
    // V(1,1) = theta(a)
    for (double a : {0.3, 1.0, 2.7})
        CHECK(br_exponent(1.0, 1.0, a) == doctest::Approx(theta_from_a(a)).epsilon(1e-13));
}

TEST_CASE("exponent derivatives match finite differences") {
    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const double z1 = 0.3 + 3.0 * rng.uniform();
        const double z2 = 0.3 + 3.0 * rng.uniform();
        const double a = 0.2 + 2.5 * rng.uniform();
        const BrExponent e = br_exponent_derivs(z1, z2, a);
        const double h1 = 1e-6 * z1, h2 = 1e-6 * z2;
        const double v1_fd = (br_exponent(z1 + h1, z2, a) - br_exponent(z1 - h1, z2, a)) / (2 * h1);
        const double v2_fd = (br_exponent(z1, z2 + h2, a) - br_exponent(z1, z2 - h2, a)) / (2 * h2);
        const double v12_fd = (br_exponent(z1 + h1, z2 + h2, a) - br_exponent(z1 + h1, z2 - h2, a) -
                               br_exponent(z1 - h1, z2 + h2, a) + br_exponent(z1 - h1, z2 - h2, a)) /
                              (4 * h1 * h2);
        CHECK(e.v1 == doctest::Approx(v1_fd).epsilon(1e-5));
        CHECK(e.v2 == doctest::Approx(v2_fd).epsilon(1e-5));
        CHECK(e.v12 == doctest::Approx(v12_fd).epsilon(1e-3));
        CHECK(e.v1 < 0.0);
        CHECK(e.v2 < 0.0);
        CHECK(e.v1 * e.v2 - e.v12 > 0.0);
    }
}

TEST_CASE("br pair cdf: dependence limits on exponential margins") {
    const double z = 2.0;
    const double unif = 1.0 - std::exp(-z);
    // independence limit (theta -> 2)
    CHECK(br_pair_cdf(z, z, 1.0, 1.0, 1e8) == doctest::Approx(unif * unif).epsilon(1e-6));
    // comonotone limit (theta -> 1)
    CHECK(br_pair_cdf(z, z, 1.0, 1.0, 1e-12) == doctest::Approx(unif).epsilon(1e-6));
    CHECK(br_pair_cdf(z, z, 1.0, 1.0, 0.0) == doctest::Approx(unif));

    // finite case h=1: V(z,z) = theta/z on the Frechet scale
    const double theta = theta_from_a(std::sqrt(2.0));
    const double expected = std::exp(theta * std::log1p(-std::exp(-2.0)));
    CHECK(br_pair_cdf(2.0, 2.0, 1.0, 1.0, 1.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ibr pair survival identities") {
    // theta = 1 and theta = 2 limits at equal margins
    CHECK(ibr_pair_survival(1.3, 1.3, 1.0, 1.0, 1e-12) ==
          doctest::Approx(std::exp(-1.3)).epsilon(1e-6));
    CHECK(ibr_pair_survival(1.3, 1.3, 1.0, 1.0, 1e8) ==
          doctest::Approx(std::exp(-2.6)).epsilon(1e-6));

    // inclusion-exclusion identity at u: F(u,u) = 1 - 2e^{-u} + e^{-theta u}
    for (double h : {0.3, 1.0, 2.4}) {
        for (double u : {0.7, 1.5, 3.0}) {
            const double theta = theta_from_a(br_dependence_a(h, 1.3, 0.8));
            const double direct = 1.0 - 2.0 * std::exp(-u) + std::exp(-theta * u);
            CHECK(ibr_pair_cdf(u, u, 1.3, 0.8, h) == doctest::Approx(direct).epsilon(1e-10));
        }
    }
}

TEST_CASE("censored contributions: cdf branch") {
    const double u = -std::log1p(-0.9);
    // BR: log F(u,u) = theta * log(1 - e^{-u})
    const double theta = theta_from_a(br_dependence_a(1.0, 1.0, 1.0));
    CHECK(censored_pair_loglik(0.5, 0.1, u, Family::BR, 1.0, 1.0, 1.0) ==
          doctest::Approx(theta * std::log(0.9)).epsilon(1e-12));
    // IBR matches the inclusion-exclusion oracle
    CHECK(censored_pair_loglik(0.5, 0.1, u, Family::IBR, 1.0, 1.0, 1.0) ==
          doctest::Approx(std::log(1.0 - 2.0 * std::exp(-u) + std::exp(-theta * u)))
              .epsilon(1e-10));
}

TEST_CASE("censored contributions: density branches match finite differences of the cdf") {
    const double u = 1.0;
    for (const Family family : {Family::BR, Family::IBR}) {
        const auto cdf = [&](double z1, double z2) {
            return family == Family::BR ? br_pair_cdf(z1, z2, 1.2, 0.9, 1.4)
                                        : ibr_pair_cdf(z1, z2, 1.2, 0.9, 1.4);
        };
        // both exceed
        const double z1 = 2.1, z2 = 1.7, h = 1e-4;
        const double f_fd = (cdf(z1 + h, z2 + h) - cdf(z1 + h, z2 - h) - cdf(z1 - h, z2 + h) +
                             cdf(z1 - h, z2 - h)) /
                            (4 * h * h);
        const double log_f = censored_pair_loglik(z1, z2, u, family, 1.2, 0.9, 1.4);
        CHECK(std::exp(log_f) == doctest::Approx(f_fd).epsilon(1e-4));

        // one exceeds: d/dz1 F(z1, u)
        const double g_fd = (cdf(z1 + h, u) - cdf(z1 - h, u)) / (2 * h);
        const double log_g = censored_pair_loglik(z1, 0.4, u, family, 1.2, 0.9, 1.4);
        CHECK(std::exp(log_g) == doctest::Approx(g_fd).epsilon(1e-6));
    }
}

TEST_CASE("censored contributions: exchangeability and branch-boundary sanity") {
    const double u = -std::log1p(-0.9);
    for (const Family family : {Family::BR, Family::IBR}) {
        for (const auto [z1, z2] : {std::pair{3.0, 2.8}, {3.0, 0.5}, {0.5, 0.2}}) {
            CHECK(censored_pair_loglik(z1, z2, u, family, 1.1, 0.7, 2.0) ==
                  doctest::Approx(censored_pair_loglik(z2, z1, u, family, 1.1, 0.7, 2.0))
                      .epsilon(1e-13));
        }
        // continuity near the censoring corner: both branches stay finite
        const double eps = 1e-9;
        CHECK(std::isfinite(censored_pair_loglik(u + eps, u + eps, u, family, 1.0, 1.0, 1.0)));
        CHECK(std::isfinite(censored_pair_loglik(u + eps, u - eps, u, family, 1.0, 1.0, 1.0)));
    }
    CHECK_THROWS_AS(censored_pair_loglik(1.0, 2.0, 1.5, Family::BR, 1.0, 1.0, 0.0),
                    numeric_error);
}
