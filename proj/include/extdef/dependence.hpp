#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "extdef/observations.hpp"
#include "extdef/sites.hpp"

namespace extdef {

enum class DependenceKind { ChiQ, Correlation };

/// Symmetric d x d matrix of pairwise dependence estimates.
struct DependenceMatrix {
    Eigen::MatrixXd values;
    DependenceKind kind = DependenceKind::ChiQ;
    double threshold_q = 0.0;  // chi_q only
    std::vector<std::string> site_ids;

    Eigen::Index d() const { return values.rows(); }
};

/// Empirical chi_q: entry (i,j) is the conditional joint exceedance
/// frequency #{u_i > q and u_j > q} / #{u_j > q} on rank-uniform margins.
/// Diagonal is fixed at 1.
DependenceMatrix empirical_chi_matrix(const ObservationMatrix& obs, double q);

/// Pearson correlation of Gaussian-score columns.
DependenceMatrix empirical_corr_matrix(const ObservationMatrix& obs);

/// Tail dependence coefficient of a stationary Brown-Resnick process:
/// 2 - 2*Phi(sqrt(2*gamma(h))/2) with gamma(h) = (h/lambda)^kappa.
double chi_br(double h, double kappa, double lambda);

/// Extremal coefficient theta(h) = 2 - chi_br(h) in [1,2].
double extremal_coefficient(double h, double kappa, double lambda);

/// Threshold-dependent chi of an inverted Brown-Resnick process:
/// (1-q)^(theta(h)-1).
double chi_ibr(double h, double kappa, double lambda, double q);

/// Matern correlation, smoothness theta2, scale theta1; equals 1 at h = 0.
double matern_corr(double h, double theta1, double theta2);

/// Long-format serialization (id_i, id_j, h, value) for chi/correlation
/// versus distance plots.
void write_dependence_csv(const std::string& path, const DependenceMatrix& dep,
                          const SiteSet& sites);

}  // namespace extdef
