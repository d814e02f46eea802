#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "extdef/dependence.hpp"
#include "extdef/observations.hpp"
#include "extdef/sites.hpp"
#include "extdef/tps.hpp"

namespace extdef {

/// Deformation objective family. The chi methods compare theoretical and
/// empirical tail dependence; corr_frob compares Matern and empirical
/// correlation; smith_gauss is the stationary Gaussian likelihood.
enum class DeformMethod { ChiBR, ChiIBR, CorrFrob, SmithGauss };

std::string to_string(DeformMethod m);
DeformMethod deform_method_from_string(const std::string& s);

struct OptimizerSettings {
    int max_evals = 0;  // 0 = automatic (scales with parameter count)
    double xtol = 1e-6;
    int restarts = 2;
};

struct DeformConfig {
    DeformMethod method = DeformMethod::ChiBR;
    double q = 0.9;      // chi threshold (chi methods)
    int m0 = 3;          // initial anchor count
    int m_star = 0;      // 0 = automatic (quarter of the sites)
    std::uint64_t seed = 1;
    OptimizerSettings optimizer;
    int bijectivity_resolution = 64;
    int max_anchor_retries = 5;
};

struct StageRecord {
    int stage = 0;
    std::size_t m = 0;
    std::string anchor_id;  // anchor added at this stage
    double objective = 0.0;
    bool bijective = false;
    int evals = 0;
};

struct DeformationResult {
    SplineParams params;
    SiteSet d_sites;
    double objective = 0.0;
    bool bijective = false;
    DeformMethod method = DeformMethod::ChiBR;
    bool warning = false;  // stopped early; best bijective prefix returned
    std::vector<StageRecord> stages;
};

/// Frobenius norm of (chi_model(h*) - chi_hat) over ordered site pairs,
/// with lambda fixed at 1 and h* the D-plane distance under the spline.
/// inverted selects the (1-q)^(theta-1) form. Non-finite spline output
/// yields +inf.
double chi_frobenius_objective(const SplineParams& params, const DependenceMatrix& chi_hat,
                               const SiteSet& g_sites, bool inverted, double q);

/// Frobenius norm of (Matern(h*; 1, theta2) - rho_hat) over ordered pairs.
double corr_frobenius_objective(const SplineParams& params, const DependenceMatrix& rho_hat,
                                const SiteSet& g_sites, double theta2);

/// Stationary Gaussian objective (N/2)log|Omega| + ((N-1)/2)tr(Omega^-1
/// Omega_hat) with Omega built from Matern(1, theta2) at D-plane distances.
double smith_gaussian_objective(const SplineParams& params, const DependenceMatrix& sample_corr,
                                const SiteSet& g_sites, double theta2, int n_obs);

/// Incremental anchor-point procedure: optimize with the initial anchors,
/// then repeatedly append one sampled anchor (new deltas start at zero, so
/// the warm start reproduces the previous optimum) until m_star anchors,
/// re-optimizing at each stage and requiring bijectivity throughout.
DeformationResult fit_deformation(const ObservationMatrix& obs, const SiteSet& g_sites,
                                  const DeformConfig& config);

}  // namespace extdef
