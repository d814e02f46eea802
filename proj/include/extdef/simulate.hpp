#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "extdef/observations.hpp"
#include "extdef/sites.hpp"

namespace extdef {

/// Radial basis map psi(s) = o + (s - o)*||s - o|| that concentrates
/// dependence near the centre o.
Eigen::Vector2d psi_map(const Eigen::Vector2d& s, const Eigen::Vector2d& o);

/// Non-stationary semivariogram (||psi(s_i) - psi(s_j)|| / lambda)^kappa.
double nonstationary_variogram(const Eigen::Vector2d& s_i, const Eigen::Vector2d& s_j,
                               const Eigen::Vector2d& o, double lambda, double kappa);

/// Power variogram of a Brown-Resnick component; a centre makes it the
/// non-stationary radial-basis version.
struct VariogramSpec {
    double lambda = 2.0;
    double kappa = 0.8;
    std::optional<Eigen::Vector2d> centre;

    double operator()(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const;
};

/// Matern correlation of a Gaussian component; a centre switches the
/// pairwise distance to the psi-map difference.
struct MaternSpec {
    double theta1 = 1.0;
    double theta2 = 1.2;
    std::optional<Eigen::Vector2d> centre;

    double operator()(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const;
};

enum class ProcessKind { Gaussian, BR, InvertedBR, MaxMixture, GaussianMixture };

ProcessKind process_kind_from_string(const std::string& s);
std::string to_string(ProcessKind k);

/// Full description of one simulated study process.
struct ProcessSpec {
    ProcessKind kind = ProcessKind::BR;
    VariogramSpec vario;     // BR-type components
    MaternSpec corr;         // Gaussian components (stationary part)
    MaternSpec corr_ns;      // non-stationary Gaussian (mixture only)
    double omega = 0.3;      // max-mixture weight
    double p = 0.9;          // Gaussian-mixture branch probability
    std::string s0_id;       // Gaussian-mixture conditioning site
    bool invert = false;     // apply the reciprocal transform to the output
    int n = 1000;
    std::uint64_t seed = 1;
};

/// Equally spaced nx x ny grid of sites with ids "s1", "s2", ...
SiteSet grid_sites(int nx, int ny, double xmin = -1.0, double xmax = 1.0, double ymin = -1.0,
                   double ymax = 1.0);

Eigen::MatrixXd correlation_matrix(const SiteSet& sites, const MaternSpec& spec);
Eigen::MatrixXd variogram_matrix(const SiteSet& sites, const VariogramSpec& spec);

/// N draws of a centred Gaussian field with unit variances (scale =
/// gaussian). A failed factorization is retried once with 1e-10 jitter.
ObservationMatrix simulate_gaussian(const SiteSet& sites, const MaternSpec& spec, int n,
                                    std::uint64_t seed);

/// Exact Brown-Resnick simulation on the finite site set via extremal
/// functions, unit Frechet margins (scale = frechet). The Gaussian
/// increments use the variogram anchored at the first site.
ObservationMatrix simulate_br(const SiteSet& sites, const VariogramSpec& vario, int n,
                              std::uint64_t seed);

/// Elementwise reciprocal; Frechet margins become standard exponential.
ObservationMatrix invert_process(const ObservationMatrix& obs);

/// H(s) = max{omega*X(s), (1-omega)*Y(s)} with X the (non-stationary) BR
/// process and Y a Gaussian process transformed to unit Frechet margins.
ObservationMatrix simulate_max_mixture(const SiteSet& sites, double omega,
                                       const VariogramSpec& br_spec, const MaternSpec& gauss_spec,
                                       int n, std::uint64_t seed);

/// Per replicate draws Y(s0) ~ N(0,1) and emits the stationary field when
/// Phi(Y(s0)) <= p, otherwise the non-stationary field, both conditioned on
/// the drawn value at s0.
ObservationMatrix simulate_gaussian_mixture(const SiteSet& sites, std::size_t s0_index, double p,
                                            const MaternSpec& spec_s, const MaternSpec& spec_ns,
                                            int n, std::uint64_t seed);

/// Dispatch on the spec; applies the reciprocal transform when requested.
ObservationMatrix simulate(const SiteSet& sites, const ProcessSpec& spec);

}  // namespace extdef
