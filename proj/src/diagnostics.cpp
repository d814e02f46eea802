#include "extdef/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "extdef/errors.hpp"
#include "extdef/nelder_mead.hpp"
#include "extdef/rng.hpp"
#include "extdef/special.hpp"

namespace extdef {

double triple_chi_empirical(const ObservationMatrix& obs, std::size_t i, std::size_t j,
                            std::size_t k, double q) {
    if (i == j || j == k || i == k)
        throw config_error("triple_chi_empirical: sites must be distinct");
    if (!(q > 0.0 && q < 1.0)) throw config_error("triple_chi_empirical: q must be in (0,1)");
    const ObservationMatrix u = obs.scale == Scale::Uniform
                                    ? obs
                                    : rank_transform(obs.as_raw(), Scale::Uniform);
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j),
               kk = static_cast<Eigen::Index>(k);
    long cond = 0, joint = 0;
    for (Eigen::Index t = 0; t < u.n(); ++t) {
        if (u.values(t, kk) > q) {
            ++cond;
            if (u.values(t, ii) > q && u.values(t, jj) > q) ++joint;
        }
    }
    if (cond == 0)
        throw numeric_error("triple_chi_empirical: no exceedances at the conditioning site");
    return static_cast<double>(joint) / static_cast<double>(cond);
}

namespace {

// V3(1,1,1) = E[max(W_1, W_2, W_3)] over the spectral representation,
// evaluated through the extremal-function decomposition
//   V3 = sum_m P_m(the function tilted at site m is the componentwise max),
// where under P_m the other components are log-Gaussian increments with
// mean -gamma(l,m), variance 2*gamma(l,m) and covariance
// gamma(a,m) + gamma(b,m) - gamma(a,b). Each term is a bounded orthant
// probability, so the estimator has controlled variance at any site
// separation (the raw E[max] estimate does not). Ties from coincident
// sites are broken toward the lowest index. Returns value and standard
// error.
std::pair<double, double> v3_monte_carlo(const Eigen::Matrix3d& gamma, long samples,
                                         std::uint64_t seed) {
    Rng rng(seed);
    double value = 0.0, var = 0.0;
    for (int m = 0; m < 3; ++m) {
        const int a = m == 0 ? 1 : 0;
        const int b = m == 2 ? 1 : 2;
        const double va = 2.0 * gamma(a, m), vb = 2.0 * gamma(b, m);
        const double cab = gamma(a, m) + gamma(b, m) - gamma(a, b);
        const double l11 = std::sqrt(std::max(0.0, va));
        const double l21 = l11 > 0.0 ? cab / l11 : 0.0;
        const double l22 = std::sqrt(std::max(0.0, vb - l21 * l21));
        long hits = 0;
        for (long s = 0; s < samples; ++s) {
            const double n1 = rng.normal(), n2 = rng.normal();
            const double log_ya = l11 * n1 - gamma(a, m);
            const double log_yb = l21 * n1 + l22 * n2 - gamma(b, m);
            const bool ok_a = a < m ? log_ya < 0.0 : log_ya <= 0.0;
            const bool ok_b = b < m ? log_yb < 0.0 : log_yb <= 0.0;
            hits += ok_a && ok_b;
        }
        const double p = static_cast<double>(hits) / static_cast<double>(samples);
        value += p;
        var += p * (1.0 - p) / static_cast<double>(samples);
    }
    return {value, std::sqrt(var)};
}

}  // namespace

TripleChiTheory triple_chi_theoretical(const ModelFit& fit, const SiteSet& sites, std::size_t i,
                                       std::size_t j, std::size_t k, double q, long mc_samples,
                                       std::uint64_t seed, double se_tol) {
    if (mc_samples < 100000)
        throw config_error("triple_chi_theoretical: mc_samples must be at least 1e5");
    const double lambda = fit.lambda_hat, kappa = fit.kappa_hat;
    const auto gamma = [&](std::size_t a, std::size_t b) {
        return a == b ? 0.0 : std::pow(sites.distance(a, b) / lambda, kappa);
    };
    const std::size_t idx[3] = {i, j, k};
    Eigen::Matrix3d gmat;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) gmat(a, b) = gamma(idx[a], idx[b]);
    const auto [v3, v3_se] = v3_monte_carlo(gmat, mc_samples, seed);
    TripleChiTheory out;
    if (fit.family == Family::BR) {
        const auto theta = [&](std::size_t a, std::size_t b) {
            return theta_from_a(std::sqrt(2.0 * gamma(a, b)));
        };
        out.value = 3.0 - theta(i, j) - theta(i, k) - theta(j, k) + v3;
        out.se = v3_se;
    } else {
        out.value = std::pow(1.0 - q, v3 - 1.0);
        out.se = out.value * std::fabs(std::log1p(-q)) * v3_se;  // delta method
    }
    out.warning = out.se > se_tol;
    return out;
}

std::pair<double, double> stationary_bootstrap_ci(const Eigen::MatrixXd& triple, double mean_block,
                                                  int n_boot, double q,
                                                  std::pair<double, double> levels,
                                                  std::uint64_t seed) {
    if (triple.cols() != 3) throw config_error("stationary_bootstrap_ci: expected 3 columns");
    if (mean_block < 1.0) throw config_error("stationary_bootstrap_ci: mean block must be >= 1");
    if (n_boot < 100) throw config_error("stationary_bootstrap_ci: need at least 100 resamples");
    const auto n = triple.rows();
    Rng rng(seed);
    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(n_boot));
    ObservationMatrix resampled;
    resampled.scale = Scale::Raw;
    resampled.site_ids = {"a", "b", "c"};
    resampled.values.resize(n, 3);
    int bad_streak = 0;
    while (stats.size() < static_cast<std::size_t>(n_boot)) {
        Eigen::Index filled = 0;
        while (filled < n) {
            const auto start = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
            const long block = rng.geometric(mean_block);
            for (long l = 0; l < block && filled < n; ++l, ++filled)
                resampled.values.row(filled) = triple.row((start + l) % n);
        }
        try {
            stats.push_back(triple_chi_empirical(resampled, 0, 1, 2, q));
            bad_streak = 0;
        } catch (const numeric_error&) {
            if (++bad_streak > 100)
                throw numeric_error(
                    "stationary_bootstrap_ci: resamples repeatedly lack exceedances");
        }
    }
    std::sort(stats.begin(), stats.end());
    const auto quantile = [&](double p) {
        const double pos = p * (static_cast<double>(stats.size()) - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, stats.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * stats[lo] + w * stats[hi];
    };
    return {quantile(levels.first), quantile(levels.second)};
}

CondExtFit fit_condext_pair(const ObservationMatrix& exp_obs, std::size_t i, std::size_t j,
                            double u_quantile, std::uint64_t seed) {
    if (exp_obs.scale != Scale::Exponential)
        throw config_error("fit_condext_pair: observations must be on exponential margins");
    if (!(u_quantile > 0.0 && u_quantile < 1.0))
        throw config_error("fit_condext_pair: u_quantile must be in (0,1)");
    const double u = -std::log1p(-u_quantile);
    std::vector<double> x, y;
    for (Eigen::Index t = 0; t < exp_obs.n(); ++t) {
        const double xi = exp_obs.values(t, static_cast<Eigen::Index>(i));
        if (xi > u) {
            x.push_back(xi);
            y.push_back(exp_obs.values(t, static_cast<Eigen::Index>(j)));
        }
    }
    if (x.size() < 10)
        throw numeric_error("fit_condext_pair: fewer than 10 exceedances at the conditioning site");

    constexpr double kSigmaFloor = 1e-8;
    const auto neg_loglik = [&](const Eigen::VectorXd& t) {
        const double alpha = 1.0 / (1.0 + std::exp(-t[0]));
        const double beta = 1.0 / (1.0 + std::exp(-t[1]));
        const double mu = t[2];
        const double sigma = std::max(std::exp(t[3]), kSigmaFloor);
        double nll = 0.0;
        for (std::size_t s = 0; s < x.size(); ++s) {
            const double xb = std::pow(x[s], beta);
            const double z = (y[s] - alpha * x[s] - mu * xb) / (sigma * xb);
            nll += std::log(sigma) + beta * std::log(x[s]) + 0.5 * z * z;
        }
        return std::isfinite(nll) ? nll : 1e300;
    };

    double ybar = 0.0, xbar = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
        ybar += y[s];
        xbar += x[s];
    }
    ybar /= static_cast<double>(x.size());
    xbar /= static_cast<double>(x.size());

    Eigen::VectorXd best_t;
    double best_val = std::numeric_limits<double>::infinity();
    Rng rng(seed);
    NelderMeadOptions opts;
    opts.max_evals = 2000;
    opts.xtol = 1e-7;
    opts.restarts = 1;
    for (int restart = 0; restart < 5; ++restart) {
        Eigen::VectorXd t0(4);
        t0 << 0.0, -1.4, ybar - 0.5 * xbar, 0.0;
        if (restart > 0)
            for (Eigen::Index c = 0; c < 4; ++c) t0[c] += 1.5 * (rng.uniform() - 0.5);
        Eigen::VectorXd steps(4);
        steps << 0.5, 0.5, std::max(0.5, 0.25 * std::fabs(t0[2])), 0.5;
        const NelderMeadResult res = nelder_mead(neg_loglik, t0, steps, opts);
        if (res.value < best_val) {
            best_val = res.value;
            best_t = res.x;
        }
    }

    CondExtFit fit;
    fit.alpha = 1.0 / (1.0 + std::exp(-best_t[0]));
    fit.beta = 1.0 / (1.0 + std::exp(-best_t[1]));
    fit.mu = best_t[2];
    fit.sigma = std::max(std::exp(best_t[3]), kSigmaFloor);
    fit.sigma_floor = fit.sigma <= 1e-6;
    fit.threshold_u = u;
    fit.site_i = i;
    fit.site_j = j;
    fit.n_exceed = static_cast<long>(x.size());
    return fit;
}

double condext_expectation(const CondExtFit& fit, double u) {
    return fit.alpha * u + std::pow(u, fit.beta) * fit.mu;
}

std::vector<std::array<std::size_t, 3>> select_transect_triples(const SiteSet& sites,
                                                                Transect transect, int n_triples,
                                                                std::uint64_t seed) {
    // Group sites sharing the across-transect coordinate, then take runs of
    // three adjacent sites along the transect.
    const BoundingBox bb = sites.bounding_box();
    const double tol = 1e-6 * std::max(bb.xmax - bb.xmin, bb.ymax - bb.ymin);
    const bool ns = transect == Transect::NorthSouth;
    std::map<long, std::vector<std::size_t>> groups;
    for (std::size_t s = 0; s < sites.size(); ++s) {
        const double key = ns ? sites[s].x : sites[s].y;
        groups[static_cast<long>(std::llround(key / std::max(tol, 1e-300)))].push_back(s);
    }
    std::vector<std::array<std::size_t, 3>> candidates;
    for (auto& [key, members] : groups) {
        if (members.size() < 3) continue;
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return ns ? sites[a].y < sites[b].y : sites[a].x < sites[b].x;
        });
        for (std::size_t s = 0; s + 2 < members.size(); ++s)
            candidates.push_back({members[s], members[s + 1], members[s + 2]});
    }
    if (candidates.empty())
        throw config_error("select_transect_triples: no grid-aligned triples found");
    Rng rng(seed);
    // Partial Fisher-Yates draw without replacement.
    std::vector<std::array<std::size_t, 3>> out;
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(n_triples),
                                                   candidates.size());
    for (std::size_t s = 0; s < take; ++s) {
        const std::size_t r = s + rng.uniform_index(candidates.size() - s);
        std::swap(candidates[s], candidates[r]);
        out.push_back(candidates[s]);
    }
    return out;
}

}  // namespace extdef
