#include "extdef/dependence.hpp"

#include <cmath>
#include <fstream>

#include "extdef/errors.hpp"
#include "extdef/special.hpp"

namespace extdef {

DependenceMatrix empirical_chi_matrix(const ObservationMatrix& obs, double q) {
    if (!(q > 0.0 && q < 1.0)) throw config_error("empirical_chi_matrix: q must be in (0,1)");
    const ObservationMatrix u =
        obs.scale == Scale::Uniform ? obs : rank_transform(obs, Scale::Uniform);

    const Eigen::Index n = u.n(), d = u.d();
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> exceed(n, d);
    Eigen::VectorXd counts(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::Index c = 0;
        for (Eigen::Index t = 0; t < n; ++t) {
            exceed(t, j) = u.values(t, j) > q;
            c += exceed(t, j);
        }
        if (c == 0)
            throw numeric_error("empirical_chi_matrix: site '" + u.site_ids[j] +
                                "' has no exceedances of q=" + std::to_string(q));
        counts[j] = static_cast<double>(c);
    }

    DependenceMatrix out;
    out.kind = DependenceKind::ChiQ;
    out.threshold_q = q;
    out.site_ids = u.site_ids;
    out.values = Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j) continue;
            Eigen::Index joint = 0;
            for (Eigen::Index t = 0; t < n; ++t) joint += exceed(t, i) && exceed(t, j);
            out.values(i, j) = static_cast<double>(joint) / counts[j];
        }
    }
    return out;
}

DependenceMatrix empirical_corr_matrix(const ObservationMatrix& obs) {
    const ObservationMatrix g = rank_transform(obs.as_raw(), Scale::Gaussian);
    const Eigen::Index d = g.d();
    Eigen::MatrixXd centered = g.values.rowwise() - g.values.colwise().mean();
    Eigen::VectorXd sd = centered.colwise().norm();
    DependenceMatrix out;
    out.kind = DependenceKind::Correlation;
    out.site_ids = g.site_ids;
    out.values = Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j)
            out.values(i, j) = out.values(j, i) =
                centered.col(i).dot(centered.col(j)) / (sd[i] * sd[j]);
    return out;
}

namespace {
void check_chi_params(double h, double kappa, double lambda) {
    if (!(h >= 0.0)) throw numeric_error("chi: h must be >= 0");
    if (!(kappa > 0.0 && kappa <= 2.0)) throw numeric_error("chi: kappa must be in (0,2]");
    if (!(lambda > 0.0)) throw numeric_error("chi: lambda must be > 0");
}
}  // namespace

double chi_br(double h, double kappa, double lambda) {
    check_chi_params(h, kappa, lambda);
    const double gamma = std::pow(h / lambda, kappa);
    return 2.0 - 2.0 * norm_cdf(0.5 * std::sqrt(2.0 * gamma));
}

double extremal_coefficient(double h, double kappa, double lambda) {
    return 2.0 - chi_br(h, kappa, lambda);
}

double chi_ibr(double h, double kappa, double lambda, double q) {
    if (!(q > 0.0 && q < 1.0)) throw numeric_error("chi_ibr: q must be in (0,1)");
    return std::pow(1.0 - q, extremal_coefficient(h, kappa, lambda) - 1.0);
}

double matern_corr(double h, double theta1, double theta2) {
    if (!(h >= 0.0)) throw numeric_error("matern_corr: h must be >= 0");
    if (!(theta1 > 0.0) || !(theta2 > 0.0))
        throw numeric_error("matern_corr: theta1 and theta2 must be > 0");
    const double x = 2.0 * h * std::sqrt(theta2) / theta1;
    if (x < 1e-12) return 1.0;  // continuity limit at h = 0
    const double log_pref = (1.0 - theta2) * std::log(2.0) - std::lgamma(theta2) +
                            theta2 * std::log(x);
    const double k = bessel_k(theta2, x);
    if (k <= 0.0) return 0.0;  // underflow at large distance
    const double v = std::exp(log_pref + std::log(k));
    return std::min(v, 1.0);
}

void write_dependence_csv(const std::string& path, const DependenceMatrix& dep,
                          const SiteSet& sites) {
    if (static_cast<Eigen::Index>(sites.size()) != dep.d())
        throw config_error("write_dependence_csv: site set and matrix dimension mismatch");
    std::ofstream out(path);
    if (!out) throw config_error("write_dependence_csv: cannot write '" + path + "'");
    out.precision(10);
    out << "id_i,id_j,h,value\n";
    for (Eigen::Index i = 0; i < dep.d(); ++i)
        for (Eigen::Index j = i + 1; j < dep.d(); ++j)
            out << sites[i].id << ',' << sites[j].id << ','
                << sites.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) << ','
                << dep.values(i, j) << '\n';
}

}  // namespace extdef
