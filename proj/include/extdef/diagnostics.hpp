#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "extdef/fit.hpp"
#include "extdef/observations.hpp"
#include "extdef/sites.hpp"

namespace extdef {

/// Pairwise Heffernan-Tawn conditional model X_j | X_i = x > u, fitted as
/// X_j = alpha*x + x^beta * Z with Gaussian working residuals Z.
struct CondExtFit {
    double alpha = 0.0;  // in [0,1]
    double beta = 0.0;   // in [0,1)
    double mu = 0.0;
    double sigma = 1.0;
    double threshold_u = 0.0;
    std::size_t site_i = 0;
    std::size_t site_j = 0;
    long n_exceed = 0;
    bool sigma_floor = false;  // sigma pinned at the numerical floor
};

struct TripleChiReport {
    std::array<std::size_t, 3> sites{};
    double empirical = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double theoretical = 0.0;
    double theoretical_se = 0.0;
    bool mc_warning = false;
    double q = 0.0;
};

/// Conditional joint exceedance frequency
/// #{u_i > q, u_j > q, u_k > q} / #{u_k > q} on rank-uniform margins.
double triple_chi_empirical(const ObservationMatrix& obs, std::size_t i, std::size_t j,
                            std::size_t k, double q);

struct TripleChiTheory {
    double value = 0.0;
    double se = 0.0;
    bool warning = false;  // MC standard error above tolerance
};

/// Model-based triple-wise chi. BR: 3 - theta_ij - theta_ik - theta_jk +
/// V3(1,1,1) with V3 estimated by Monte Carlo over the spectral
/// representation; IBR: (1-q)^(V3-1).
TripleChiTheory triple_chi_theoretical(const ModelFit& fit, const SiteSet& sites, std::size_t i,
                                       std::size_t j, std::size_t k, double q, long mc_samples,
                                       std::uint64_t seed, double se_tol = 5e-3);

/// Stationary bootstrap (geometric block lengths with mean K, circular
/// wrap-around) confidence interval for the triple-wise chi of an N x 3
/// observation block; conditioning site is the third column.
std::pair<double, double> stationary_bootstrap_ci(const Eigen::MatrixXd& triple, double mean_block,
                                                  int n_boot, double q,
                                                  std::pair<double, double> levels,
                                                  std::uint64_t seed);

/// Maximizes the Gaussian working likelihood of the conditional model for
/// observations with X_i > u, u the given marginal quantile on the
/// exponential scale. Needs at least 10 exceedances.
CondExtFit fit_condext_pair(const ObservationMatrix& exp_obs, std::size_t i, std::size_t j,
                            double u_quantile, std::uint64_t seed = 7);

/// Conditional expectation E[X_j | X_i = u] = alpha*u + u^beta * mu.
double condext_expectation(const CondExtFit& fit, double u);

enum class Transect { NorthSouth, EastWest };

/// Triples of grid-adjacent sites along the requested transect, sampled
/// without replacement. Mirrors the configuration-matched selection used
/// for the triple-wise diagnostics.
std::vector<std::array<std::size_t, 3>> select_transect_triples(const SiteSet& sites,
                                                                Transect transect, int n_triples,
                                                                std::uint64_t seed);

}  // namespace extdef
