#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "extdef/brown_resnick.hpp"
#include "extdef/nelder_mead.hpp"
#include "extdef/observations.hpp"
#include "extdef/sites.hpp"

namespace extdef {

/// Fitted censored pairwise dependence model.
struct ModelFit {
    Family family = Family::BR;
    Plane plane = Plane::G;
    double lambda_hat = 1.0;
    double kappa_hat = 1.0;
    double ncll = 0.0;   // negative composite log-likelihood at the optimum
    double claic = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd scores;    // N x 2 per-observation score vectors d/d(lambda,kappa)
    Eigen::Matrix2d hessian;   // of ncll at the optimum
    double threshold_u = 0.0;  // on the exponential scale
    double u_quantile = 0.0;
    bool kappa_boundary = false;  // kappa_hat pinned at 2
    int evals = 0;
};

/// Censored pairwise composite likelihood over all site pairs, with the
/// per-observation branch data precomputed once. Thresholding and branch
/// formulas match censored_pair_loglik exactly.
class PairwiseLikelihood {
public:
    PairwiseLikelihood(const ObservationMatrix& exp_obs, const SiteSet& sites, Family family,
                       double u);

    double negative_loglik(double lambda, double kappa) const;
    Eigen::VectorXd per_observation_loglik(double lambda, double kappa) const;

    Eigen::Index n_obs() const { return n_; }
    double threshold() const { return u_; }
    double median_pair_distance() const;

private:
    struct PairData {
        double h;
        long n_below;
        // both-exceed terms: transformed pair and log margin Jacobian
        std::vector<double> b1, b2, bj;
        // single-exceed terms: transformed exceeding value (+ Jacobian for BR)
        std::vector<double> s1, sj;
    };

    struct ActiveRef {
        int pair;
        int idx;      // index into the pair's branch arrays
        bool both;    // false = single-exceed
    };

    double pair_loglik_below(double a) const;
    // Returns false on a non-finite contribution.
    bool pair_terms(const PairData& p, double lambda, double kappa, double& below_term,
                    std::vector<double>* single_vals, std::vector<double>* both_vals,
                    double& total) const;

    Family family_;
    double u_;
    double u_frechet_ = 0.0;
    double log_u_unif_ = 0.0;
    Eigen::Index n_ = 0;
    std::vector<PairData> pairs_;
    std::vector<std::vector<ActiveRef>> active_;  // per observation
};

/// Maximizes the censored pairwise likelihood over (lambda, kappa) with the
/// threshold at the given marginal quantile of the exponential scale, and
/// stores score vectors and the Hessian for CLAIC computation.
ModelFit fit_pairwise_model(const ObservationMatrix& obs, const SiteSet& sites, Family family,
                            double u_quantile, const NelderMeadOptions& opts = {600, 1e-7, 1e-9, 2});

/// Composite-likelihood AIC: 2*ncll + 2*tr(J H^{-1}) with the score
/// variance J estimated from non-overlapping blocks of length b scaled by
/// N/b. A singular Hessian is ridged once (1e-8 relative) before failing.
double claic(const ModelFit& fit, long block_b);

}  // namespace extdef
