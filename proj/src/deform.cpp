#include "extdef/deform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "extdef/errors.hpp"
#include "extdef/nelder_mead.hpp"
#include "extdef/rng.hpp"

namespace extdef {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(DeformMethod m) {
    switch (m) {
        case DeformMethod::ChiBR: return "chi_br";
        case DeformMethod::ChiIBR: return "chi_ibr";
        case DeformMethod::CorrFrob: return "corr_frob";
        case DeformMethod::SmithGauss: return "smith_gauss";
    }
    return "?";
}

DeformMethod deform_method_from_string(const std::string& s) {
    if (s == "chi_br") return DeformMethod::ChiBR;
    if (s == "chi_ibr") return DeformMethod::ChiIBR;
    if (s == "corr_frob") return DeformMethod::CorrFrob;
    if (s == "smith_gauss") return DeformMethod::SmithGauss;
    throw config_error("unknown deformation method '" + s + "'");
}

namespace {

bool deformed_coords(const SplineParams& params, const SiteSet& g_sites, std::vector<double>& xs,
                     std::vector<double>& ys) {
    const std::size_t d = g_sites.size();
    xs.resize(d);
    ys.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const Eigen::Vector2d p = deform_point(params, g_sites, g_sites[i].x, g_sites[i].y);
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) return false;
        xs[i] = p[0];
        ys[i] = p[1];
    }
    return true;
}

double frobenius_from_coords(const std::vector<double>& xs, const std::vector<double>& ys,
                             const DependenceMatrix& target, bool chi, bool inverted, double q,
                             double shape) {
    const auto d = static_cast<Eigen::Index>(xs.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double h = std::hypot(xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)],
                                        ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)]);
            double model;
            if (chi)
                model = inverted ? chi_ibr(h, shape, 1.0, q) : chi_br(h, shape, 1.0);
            else
                model = matern_corr(h, 1.0, shape);
            const double r1 = model - target.values(i, j);
            const double r2 = model - target.values(j, i);
            sum += r1 * r1 + r2 * r2;
        }
    }
    return std::sqrt(sum);
}

double smith_from_coords(const std::vector<double>& xs, const std::vector<double>& ys,
                         const DependenceMatrix& sample_corr, double theta2, int n_obs) {
    const auto d = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd omega(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        omega(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < d; ++j) {
            const double h = std::hypot(xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)],
                                        ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)]);
            omega(i, j) = omega(j, i) = matern_corr(h, 1.0, theta2);
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success) return kInf;
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) logdet += std::log(llt.matrixL()(i, i));
    logdet *= 2.0;
    const double trace = llt.solve(sample_corr.values).trace();
    const double n = static_cast<double>(n_obs);
    const double value = 0.5 * n * logdet + 0.5 * (n - 1.0) * trace;
    return std::isfinite(value) ? value : kInf;
}

}  // namespace

double chi_frobenius_objective(const SplineParams& params, const DependenceMatrix& chi_hat,
                               const SiteSet& g_sites, bool inverted, double q) {
    if (chi_hat.kind != DependenceKind::ChiQ)
        throw config_error("chi_frobenius_objective: dependence matrix must be chi_q");
    std::vector<double> xs, ys;
    if (!deformed_coords(params, g_sites, xs, ys)) return kInf;
    return frobenius_from_coords(xs, ys, chi_hat, true, inverted, q, params.shape);
}

double corr_frobenius_objective(const SplineParams& params, const DependenceMatrix& rho_hat,
                                const SiteSet& g_sites, double theta2) {
    if (rho_hat.kind != DependenceKind::Correlation)
        throw config_error("corr_frobenius_objective: dependence matrix must be correlation");
    std::vector<double> xs, ys;
    if (!deformed_coords(params, g_sites, xs, ys)) return kInf;
    return frobenius_from_coords(xs, ys, rho_hat, false, false, 0.0, theta2);
}

double smith_gaussian_objective(const SplineParams& params, const DependenceMatrix& sample_corr,
                                const SiteSet& g_sites, double theta2, int n_obs) {
    if (sample_corr.kind != DependenceKind::Correlation)
        throw config_error("smith_gaussian_objective: dependence matrix must be correlation");
    std::vector<double> xs, ys;
    if (!deformed_coords(params, g_sites, xs, ys)) return kInf;
    return smith_from_coords(xs, ys, sample_corr, theta2, n_obs);
}

namespace {

struct StageOptimizer {
    const DeformConfig* config;
    const SiteSet* g_sites;
    const DependenceMatrix* target;
    int n_obs;
    double delta_step;

    bool is_chi() const {
        return config->method == DeformMethod::ChiBR || config->method == DeformMethod::ChiIBR;
    }

    double shape_from(double t) const {
        // kappa in (0,2] for chi methods, theta2 > 0 for correlation methods.
        if (is_chi()) return 2.0 / (1.0 + std::exp(-std::min(t, 30.0)));
        return std::exp(std::clamp(t, -9.0, 3.4));  // keeps theta2 in a sane range
    }

    SplineParams params_from(const Eigen::VectorXd& t,
                             const std::vector<std::size_t>& anchors) const {
        const auto m = static_cast<Eigen::Index>(anchors.size());
        SplineParams p;
        p.b1 = std::exp(t[0]);
        p.b2 = std::exp(t[1]);
        p.rho = std::tanh(t[2]);
        p.shape = shape_from(t[3]);
        p.anchors = anchors;
        p.delta1 = complete_deltas(t.segment(4, m - 3), anchors, *g_sites);
        p.delta2 = complete_deltas(t.segment(4 + (m - 3), m - 3), anchors, *g_sites);
        return p;
    }

    Eigen::VectorXd vector_from(const SplineParams& p) const {
        const auto m = static_cast<Eigen::Index>(p.anchors.size());
        Eigen::VectorXd t(4 + 2 * (m - 3));
        t[0] = std::log(p.b1);
        t[1] = std::log(p.b2);
        t[2] = std::atanh(std::clamp(p.rho, -0.999999, 0.999999));
        const double s = is_chi() ? std::min(p.shape, 2.0 - 1e-13) : p.shape;
        t[3] = is_chi() ? -std::log(2.0 / s - 1.0) : std::log(s);
        t.segment(4, m - 3) = p.delta1.tail(m - 3);
        t.segment(4 + (m - 3), m - 3) = p.delta2.tail(m - 3);
        return t;
    }

    double objective(const SplineParams& p) const {
        std::vector<double> xs, ys;
        if (!deformed_coords(p, *g_sites, xs, ys)) return kInf;
        switch (config->method) {
            case DeformMethod::ChiBR:
                return frobenius_from_coords(xs, ys, *target, true, false, config->q, p.shape);
            case DeformMethod::ChiIBR:
                return frobenius_from_coords(xs, ys, *target, true, true, config->q, p.shape);
            case DeformMethod::CorrFrob:
                return frobenius_from_coords(xs, ys, *target, false, false, 0.0, p.shape);
            case DeformMethod::SmithGauss:
                return smith_from_coords(xs, ys, *target, p.shape, n_obs);
        }
        return kInf;
    }

    NelderMeadResult run(const SplineParams& start, const std::vector<std::size_t>& anchors,
                         SplineParams& out) const {
        const Eigen::VectorXd t0 = vector_from(start);
        Eigen::VectorXd steps(t0.size());
        steps.head<4>().setConstant(0.15);
        steps.tail(t0.size() - 4).setConstant(delta_step);
        NelderMeadOptions opts;
        opts.max_evals = config->optimizer.max_evals > 0
                             ? config->optimizer.max_evals
                             : std::max<int>(1200, 300 * static_cast<int>(t0.size()));
        opts.xtol = config->optimizer.xtol;
        opts.restarts = config->optimizer.restarts;
        const auto f = [&](const Eigen::VectorXd& t) {
            return objective(params_from(t, anchors));
        };
        const NelderMeadResult res = nelder_mead(f, t0, steps, opts);
        out = params_from(res.x, anchors);
        return res;
    }
};

}  // namespace

DeformationResult fit_deformation(const ObservationMatrix& obs, const SiteSet& g_sites,
                                  const DeformConfig& config) {
    const std::size_t d = g_sites.size();
    if (config.m0 < 3) throw config_error("fit_deformation: m0 must be at least 3");
    const std::size_t m_star =
        config.m_star > 0 ? static_cast<std::size_t>(config.m_star)
                          : std::max<std::size_t>(static_cast<std::size_t>(config.m0),
                                                  (d + 2) / 4);
    if (m_star > d) throw config_error("fit_deformation: m_star exceeds the number of sites");
    if (static_cast<std::size_t>(config.m0) > m_star)
        throw config_error("fit_deformation: m0 exceeds m_star");

    const bool chi = config.method == DeformMethod::ChiBR || config.method == DeformMethod::ChiIBR;
    const DependenceMatrix target =
        chi ? empirical_chi_matrix(obs, config.q) : empirical_corr_matrix(obs);

    // One permutation drives the initial set and every appended anchor, so
    // the sequence is identical across methods for a common seed.
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(config.seed);
    for (std::size_t i = 0; i + 1 < d; ++i) {
        const std::size_t r = i + rng.uniform_index(d - i);
        std::swap(perm[i], perm[r]);
    }
    std::size_t next_pos = static_cast<std::size_t>(config.m0);

    const BoundingBox domain = g_sites.bounding_box(0.05);
    const double diam = std::hypot(domain.xmax - domain.xmin, domain.ymax - domain.ymin);
    StageOptimizer opt{&config, &g_sites, &target, static_cast<int>(obs.n()),
                       diam / (20.0 * std::max(1e-12, tps_basis(0.5 * diam)))};

    std::vector<std::size_t> anchors(perm.begin(), perm.begin() + config.m0);
    SplineParams params;
    params.anchors = anchors;
    params.shape = 1.0;
    params.delta1 = complete_deltas(Eigen::VectorXd::Zero(config.m0 - 3), anchors, g_sites);
    params.delta2 = params.delta1;

    std::vector<StageRecord> stages;
    bool warning = false;
    SplineParams best_bijective;
    bool have_bijective = false;
    int stage_idx = 0;

    const auto initial_ids = [&] {
        std::string ids;
        for (std::size_t a = 0; a < anchors.size(); ++a)
            ids += (a ? "+" : "") + g_sites[anchors[a]].id;
        return ids;
    };

    for (std::size_t m = static_cast<std::size_t>(config.m0); m <= m_star; ++m) {
        int retries = 0;
        bool stage_ok = false;
        while (true) {
            SplineParams candidate;
            const NelderMeadResult nm = opt.run(params, anchors, candidate);
            const bool bij =
                check_bijectivity(candidate, g_sites, domain, config.bijectivity_resolution);
            StageRecord rec;
            rec.stage = stage_idx;
            rec.m = m;
            rec.anchor_id = stage_idx == 0 ? initial_ids() : g_sites[anchors.back()].id;
            rec.objective = nm.value;
            rec.bijective = bij;
            rec.evals = nm.evals;
            stages.push_back(rec);
            if (bij) {
                params = candidate;
                best_bijective = candidate;
                have_bijective = true;
                stage_ok = true;
                break;
            }
            // Retry the stage with a different sampled anchor.
            if (++retries > config.max_anchor_retries || next_pos >= d) break;
            anchors.back() = perm[next_pos++];
            params.anchors = anchors;
            const auto mm = static_cast<Eigen::Index>(m);
            Eigen::VectorXd f1 = params.delta1.tail(mm - 3);
            Eigen::VectorXd f2 = params.delta2.tail(mm - 3);
            if (mm > 3) {
                f1[mm - 4] = 0.0;  // the swapped-in anchor starts inactive
                f2[mm - 4] = 0.0;
            }
            params.delta1 = complete_deltas(f1, anchors, g_sites);
            params.delta2 = complete_deltas(f2, anchors, g_sites);
        }
        ++stage_idx;
        if (!stage_ok) {
            warning = true;
            break;
        }
        if (m < m_star) {
            if (next_pos >= d) {
                warning = true;
                break;
            }
            anchors.push_back(perm[next_pos++]);
            params.anchors = anchors;
            const auto mm = static_cast<Eigen::Index>(m + 1);
            Eigen::VectorXd f1 = Eigen::VectorXd::Zero(mm - 3);
            Eigen::VectorXd f2 = Eigen::VectorXd::Zero(mm - 3);
            f1.head(mm - 4) = params.delta1.tail(mm - 4);
            f2.head(mm - 4) = params.delta2.tail(mm - 4);
            params.delta1 = complete_deltas(f1, anchors, g_sites);
            params.delta2 = complete_deltas(f2, anchors, g_sites);
        }
    }

    if (!have_bijective)
        throw numeric_error("fit_deformation: no bijective deformation found at any stage");
    return DeformationResult{best_bijective,
                             apply_deformation(best_bijective, g_sites),
                             opt.objective(best_bijective),
                             true,
                             config.method,
                             warning,
                             std::move(stages)};
}

}  // namespace extdef
