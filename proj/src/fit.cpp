#include "extdef/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "extdef/errors.hpp"
#include "extdef/special.hpp"

namespace extdef {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double logistic2(double t) { return 2.0 / (1.0 + std::exp(-t)); }
}  // namespace

PairwiseLikelihood::PairwiseLikelihood(const ObservationMatrix& exp_obs, const SiteSet& sites,
                                       Family family, double u)
    : family_(family), u_(u), n_(exp_obs.n()) {
    if (exp_obs.scale != Scale::Exponential)
        throw config_error("PairwiseLikelihood: observations must be on exponential margins");
    if (static_cast<std::size_t>(exp_obs.d()) != sites.size())
        throw config_error("PairwiseLikelihood: observation/site dimension mismatch");
    if (!(u > 0.0)) throw config_error("PairwiseLikelihood: threshold must be positive");
    u_frechet_ = exp_to_frechet(u);
    log_u_unif_ = std::log1p(-std::exp(-u));

    const Eigen::Index d = exp_obs.d();
    active_.resize(static_cast<std::size_t>(n_));
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            PairData p;
            p.h = sites.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (!(p.h > 0.0))
                throw numeric_error("PairwiseLikelihood: sites '" + sites[i].id + "' and '" +
                                    sites[j].id + "' are at zero distance");
            p.n_below = 0;
            const int pair_idx = static_cast<int>(pairs_.size());
            for (Eigen::Index t = 0; t < n_; ++t) {
                const double zi = exp_obs.values(t, i);
                const double zj = exp_obs.values(t, j);
                const bool ei = zi > u, ej = zj > u;
                if (ei && ej) {
                    const int idx = static_cast<int>(p.b1.size());
                    if (family == Family::BR) {
                        p.b1.push_back(exp_to_frechet(zi));
                        p.b2.push_back(exp_to_frechet(zj));
                        p.bj.push_back(std::log(exp_to_frechet_deriv(zi)) +
                                       std::log(exp_to_frechet_deriv(zj)));
                    } else {
                        p.b1.push_back(1.0 / zi);
                        p.b2.push_back(1.0 / zj);
                        p.bj.push_back(2.0 * (std::log(1.0 / zi) + std::log(1.0 / zj)));
                    }
                    active_[static_cast<std::size_t>(t)].push_back({pair_idx, idx, true});
                } else if (ei || ej) {
                    const double z = ei ? zi : zj;
                    const int idx = static_cast<int>(p.s1.size());
                    if (family == Family::BR) {
                        p.s1.push_back(exp_to_frechet(z));
                        p.sj.push_back(std::log(exp_to_frechet_deriv(z)));
                    } else {
                        p.s1.push_back(z);
                        p.sj.push_back(std::exp(-z));
                    }
                    active_[static_cast<std::size_t>(t)].push_back({pair_idx, idx, false});
                } else {
                    ++p.n_below;
                }
            }
            pairs_.push_back(std::move(p));
        }
    }
}

double PairwiseLikelihood::median_pair_distance() const {
    std::vector<double> hs;
    hs.reserve(pairs_.size());
    for (const auto& p : pairs_) hs.push_back(p.h);
    std::nth_element(hs.begin(), hs.begin() + hs.size() / 2, hs.end());
    return hs[hs.size() / 2];
}

bool PairwiseLikelihood::pair_terms(const PairData& p, double lambda, double kappa,
                                    double& below_term, std::vector<double>* single_vals,
                                    std::vector<double>* both_vals, double& total) const {
    const double a = std::sqrt(2.0 * std::pow(p.h / lambda, kappa));
    const double theta = theta_from_a(a);
    total = 0.0;

    if (family_ == Family::BR) {
        below_term = theta * log_u_unif_;
    } else {
        below_term = std::log(1.0 - 2.0 * std::exp(-u_) + std::exp(-theta * u_));
    }
    if (!std::isfinite(below_term)) return false;
    total += static_cast<double>(p.n_below) * below_term;

    const double inv_u = family_ == Family::BR ? u_frechet_ : 1.0 / u_;
    for (std::size_t k = 0; k < p.s1.size(); ++k) {
        double val;
        if (family_ == Family::BR) {
            const BrExponent e = br_exponent_derivs(p.s1[k], u_frechet_, a);
            if (!(-e.v1 > 0.0)) return false;
            val = -e.v + std::log(-e.v1) + p.sj[k];
        } else {
            const double w = 1.0 / p.s1[k];
            const BrExponent e = br_exponent_derivs(w, inv_u, a);
            const double g = p.sj[k] + std::exp(-e.v) * e.v1 * w * w;
            if (!(g > 0.0)) return false;
            val = std::log(g);
        }
        if (!std::isfinite(val)) return false;
        if (single_vals) (*single_vals)[k] = val;
        total += val;
    }

    for (std::size_t k = 0; k < p.b1.size(); ++k) {
        const BrExponent e = br_exponent_derivs(p.b1[k], p.b2[k], a);
        const double core = e.v1 * e.v2 - e.v12;
        if (!(core > 0.0)) return false;
        const double val = -e.v + std::log(core) + p.bj[k];
        if (!std::isfinite(val)) return false;
        if (both_vals) (*both_vals)[k] = val;
        total += val;
    }
    return true;
}

double PairwiseLikelihood::negative_loglik(double lambda, double kappa) const {
    if (!(lambda > 0.0) || !(kappa > 0.0)) return kInf;
    const auto np = static_cast<std::ptrdiff_t>(pairs_.size());
    std::vector<double> buf(pairs_.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < np; ++p) {
        double below, total;
        if (!pair_terms(pairs_[static_cast<std::size_t>(p)], lambda, kappa, below, nullptr,
                        nullptr, total))
            total = std::numeric_limits<double>::quiet_NaN();
        buf[static_cast<std::size_t>(p)] = total;
    }
    double sum = 0.0;
    for (double v : buf) sum += v;  // fixed order, independent of thread count
    return std::isfinite(sum) ? -sum : kInf;
}

Eigen::VectorXd PairwiseLikelihood::per_observation_loglik(double lambda, double kappa) const {
    const auto np = static_cast<std::ptrdiff_t>(pairs_.size());
    std::vector<double> below(pairs_.size());
    std::vector<std::vector<double>> singles(pairs_.size()), boths(pairs_.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < np; ++p) {
        const auto& pd = pairs_[static_cast<std::size_t>(p)];
        singles[static_cast<std::size_t>(p)].resize(pd.s1.size());
        boths[static_cast<std::size_t>(p)].resize(pd.b1.size());
        double total;
        if (!pair_terms(pd, lambda, kappa, below[static_cast<std::size_t>(p)],
                        &singles[static_cast<std::size_t>(p)], &boths[static_cast<std::size_t>(p)],
                        total))
            below[static_cast<std::size_t>(p)] = std::numeric_limits<double>::quiet_NaN();
    }
    double total_below = 0.0;
    for (double v : below)
        if (std::isnan(v))
            throw numeric_error("per_observation_loglik: non-finite contribution at lambda=" +
                                std::to_string(lambda) + ", kappa=" + std::to_string(kappa));
    for (double v : below) total_below += v;

    Eigen::VectorXd out(n_);
    for (Eigen::Index t = 0; t < n_; ++t) {
        double v = total_below;
        for (const auto& ref : active_[static_cast<std::size_t>(t)]) {
            const auto p = static_cast<std::size_t>(ref.pair);
            const double val = ref.both ? boths[p][static_cast<std::size_t>(ref.idx)]
                                        : singles[p][static_cast<std::size_t>(ref.idx)];
            v += val - below[p];
        }
        out[t] = v;
    }
    return out;
}

ModelFit fit_pairwise_model(const ObservationMatrix& obs, const SiteSet& sites, Family family,
                            double u_quantile, const NelderMeadOptions& opts) {
    if (!(u_quantile > 0.0 && u_quantile < 1.0))
        throw config_error("fit_pairwise_model: u_quantile must be in (0,1)");
    const ObservationMatrix exp_obs = to_exponential_margins(obs);
    const double u = -std::log1p(-u_quantile);
    const PairwiseLikelihood lik(exp_obs, sites, family, u);

    const auto objective = [&](const Eigen::VectorXd& t) {
        return lik.negative_loglik(std::exp(t[0]), logistic2(t[1]));
    };
    Eigen::VectorXd t0(2);
    t0 << std::log(lik.median_pair_distance()), 0.0;
    Eigen::VectorXd steps(2);
    steps << 0.5, 0.5;
    const NelderMeadResult res = nelder_mead(objective, t0, steps, opts);
    if (!res.converged)
        throw numeric_error("fit_pairwise_model: optimizer did not converge after " +
                            std::to_string(res.evals) + " evaluations (family " +
                            to_string(family) + ", best ncll " + std::to_string(res.value) + ")");

    ModelFit fit;
    fit.family = family;
    fit.plane = sites.plane();
    fit.lambda_hat = std::exp(res.x[0]);
    fit.kappa_hat = logistic2(res.x[1]);
    fit.ncll = res.value;
    fit.threshold_u = u;
    fit.u_quantile = u_quantile;
    fit.evals = res.evals;
    fit.kappa_boundary = fit.kappa_hat > 2.0 - 1e-3;
    if (fit.kappa_boundary) {
        fit.kappa_hat = 2.0;  // reported pinned at the boundary
        fit.ncll = lik.negative_loglik(fit.lambda_hat, fit.kappa_hat);
    }

    // Per-observation scores by central differences in (lambda, kappa).
    const double hl = 1e-5 * fit.lambda_hat;
    const double hk = 1e-5 * fit.kappa_hat;
    fit.scores.resize(lik.n_obs(), 2);
    fit.scores.col(0) = (lik.per_observation_loglik(fit.lambda_hat + hl, fit.kappa_hat) -
                         lik.per_observation_loglik(fit.lambda_hat - hl, fit.kappa_hat)) /
                        (2.0 * hl);
    fit.scores.col(1) = (lik.per_observation_loglik(fit.lambda_hat, fit.kappa_hat + hk) -
                         lik.per_observation_loglik(fit.lambda_hat, fit.kappa_hat - hk)) /
                        (2.0 * hk);

    // Hessian of the negative composite log-likelihood.
    const double Hl = 1e-4 * std::max(fit.lambda_hat, 0.01);
    const double Hk = 1e-4 * std::max(fit.kappa_hat, 0.01);
    const auto f = [&](double dl, double dk) {
        return lik.negative_loglik(fit.lambda_hat + dl, fit.kappa_hat + dk);
    };
    const double f0 = f(0.0, 0.0);
    fit.hessian(0, 0) = (f(Hl, 0.0) - 2.0 * f0 + f(-Hl, 0.0)) / (Hl * Hl);
    fit.hessian(1, 1) = (f(0.0, Hk) - 2.0 * f0 + f(0.0, -Hk)) / (Hk * Hk);
    fit.hessian(0, 1) = fit.hessian(1, 0) =
        (f(Hl, Hk) - f(Hl, -Hk) - f(-Hl, Hk) + f(-Hl, -Hk)) / (4.0 * Hl * Hk);
    return fit;
}

double claic(const ModelFit& fit, long block_b) {
    const long n = fit.scores.rows();
    if (block_b < 1 || block_b >= n)
        throw config_error("claic: block length must satisfy 1 <= b < N");
    const long m = n / block_b;  // trailing partial block dropped
    if (m < 2) throw config_error("claic: need at least 2 blocks");

    Eigen::MatrixXd block_sums(m, 2);
    for (long k = 0; k < m; ++k)
        block_sums.row(k) = fit.scores.middleRows(k * block_b, block_b).colwise().sum();
    const Eigen::RowVector2d mean = block_sums.colwise().mean();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (long k = 0; k < m; ++k) {
        const Eigen::RowVector2d c = block_sums.row(k) - mean;
        cov += c.transpose() * c;
    }
    cov /= static_cast<double>(m - 1);
    const Eigen::Matrix2d j_hat =
        (static_cast<double>(n) / static_cast<double>(block_b)) * cov;

    Eigen::Matrix2d h = fit.hessian;
    const double scale = 0.5 * (std::fabs(h(0, 0)) + std::fabs(h(1, 1)));
    double det = h.determinant();
    if (!(std::fabs(det) > 1e-12 * scale * scale)) {
        h += 1e-8 * scale * Eigen::Matrix2d::Identity();  // documented ridge fallback
        det = h.determinant();
        if (!(std::fabs(det) > 0.0))
            throw numeric_error(
                "claic: singular Hessian even after ridge; consider a larger sample");
    }
    const double penalty = (j_hat * h.inverse()).trace();
    return 2.0 * fit.ncll + 2.0 * penalty;
}

}  // namespace extdef
