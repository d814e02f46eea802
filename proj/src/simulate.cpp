#include "extdef/simulate.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "extdef/dependence.hpp"
#include "extdef/errors.hpp"
#include "extdef/rng.hpp"
#include "extdef/special.hpp"

namespace extdef {

Eigen::Vector2d psi_map(const Eigen::Vector2d& s, const Eigen::Vector2d& o) {
    return o + (s - o) * (s - o).norm();
}

double nonstationary_variogram(const Eigen::Vector2d& s_i, const Eigen::Vector2d& s_j,
                               const Eigen::Vector2d& o, double lambda, double kappa) {
    if (!(lambda > 0.0) || !(kappa > 0.0 && kappa <= 2.0))
        throw numeric_error("nonstationary_variogram: invalid parameters");
    return std::pow((psi_map(s_i, o) - psi_map(s_j, o)).norm() / lambda, kappa);
}

double VariogramSpec::operator()(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
    if (centre) return nonstationary_variogram(a, b, *centre, lambda, kappa);
    return std::pow((a - b).norm() / lambda, kappa);
}

double MaternSpec::operator()(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
    const double h = centre ? (psi_map(a, *centre) - psi_map(b, *centre)).norm() : (a - b).norm();
    return matern_corr(h, theta1, theta2);
}

ProcessKind process_kind_from_string(const std::string& s) {
    if (s == "gaussian") return ProcessKind::Gaussian;
    if (s == "br") return ProcessKind::BR;
    if (s == "inverted_br") return ProcessKind::InvertedBR;
    if (s == "max_mixture") return ProcessKind::MaxMixture;
    if (s == "gaussian_mixture") return ProcessKind::GaussianMixture;
    throw config_error("unknown process kind '" + s + "'");
}

std::string to_string(ProcessKind k) {
    switch (k) {
        case ProcessKind::Gaussian: return "gaussian";
        case ProcessKind::BR: return "br";
        case ProcessKind::InvertedBR: return "inverted_br";
        case ProcessKind::MaxMixture: return "max_mixture";
        case ProcessKind::GaussianMixture: return "gaussian_mixture";
    }
    return "?";
}

SiteSet grid_sites(int nx, int ny, double xmin, double xmax, double ymin, double ymax) {
    if (nx < 2 || ny < 2) throw config_error("grid_sites: need at least a 2x2 grid");
    std::vector<Site> sites;
    sites.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    int k = 1;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            sites.push_back({"s" + std::to_string(k++), xmin + (xmax - xmin) * ix / (nx - 1.0),
                             ymin + (ymax - ymin) * iy / (ny - 1.0)});
    return SiteSet(std::move(sites), Plane::G);
}

namespace {

Eigen::Vector2d coords(const SiteSet& sites, std::size_t i) {
    return {sites[i].x, sites[i].y};
}

/// Cholesky factor with a single automatic jitter retry.
Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd m, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    m.diagonal().array() += 1e-10;
    llt.compute(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    throw numeric_error(std::string(what) +
                        ": covariance factorization failed even with 1e-10 jitter");
}

}  // namespace

Eigen::MatrixXd correlation_matrix(const SiteSet& sites, const MaternSpec& spec) {
    const auto d = static_cast<Eigen::Index>(sites.size());
    Eigen::MatrixXd r(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        r(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < d; ++j)
            r(i, j) = r(j, i) = spec(coords(sites, static_cast<std::size_t>(i)),
                                     coords(sites, static_cast<std::size_t>(j)));
    }
    return r;
}

Eigen::MatrixXd variogram_matrix(const SiteSet& sites, const VariogramSpec& spec) {
    const auto d = static_cast<Eigen::Index>(sites.size());
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j)
            g(i, j) = g(j, i) = spec(coords(sites, static_cast<std::size_t>(i)),
                                     coords(sites, static_cast<std::size_t>(j)));
    return g;
}

ObservationMatrix simulate_gaussian(const SiteSet& sites, const MaternSpec& spec, int n,
                                    std::uint64_t seed) {
    const auto d = static_cast<Eigen::Index>(sites.size());
    const Eigen::MatrixXd l = cholesky_with_jitter(correlation_matrix(sites, spec),
                                                   "simulate_gaussian");
    Rng rng(seed);
    ObservationMatrix out;
    out.scale = Scale::Gaussian;
    out.site_ids = sites.ids();
    out.values.resize(n, d);
    Eigen::VectorXd z(d);
    for (int t = 0; t < n; ++t) {
        for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
        out.values.row(t) = (l * z).transpose();
    }
    return out;
}

ObservationMatrix simulate_br(const SiteSet& sites, const VariogramSpec& vario, int n,
                              std::uint64_t seed) {
    const auto d = static_cast<Eigen::Index>(sites.size());
    const Eigen::MatrixXd gamma = variogram_matrix(sites, vario);

    // Centred Gaussian increments anchored at the first site:
    // cov(U_i, U_j) = gamma(i,0) + gamma(j,0) - gamma(i,j), U_0 = 0.
    Eigen::MatrixXd cov(d - 1, d - 1);
    for (Eigen::Index i = 1; i < d; ++i)
        for (Eigen::Index j = 1; j < d; ++j)
            cov(i - 1, j - 1) = gamma(i, 0) + gamma(j, 0) - gamma(i, j);
    const Eigen::MatrixXd l = cholesky_with_jitter(std::move(cov), "simulate_br");

    Rng rng(seed);
    ObservationMatrix out;
    out.scale = Scale::Frechet;
    out.site_ids = sites.ids();
    out.values.resize(n, d);

    Eigen::VectorXd u(d), xi(d - 1), log_y(d), z(d);
    for (int t = 0; t < n; ++t) {
        z.setZero();
        // Extremal-functions algorithm: for each site, simulate the Poisson
        // points whose spectral function is extremal there.
        for (Eigen::Index k = 0; k < d; ++k) {
            double inv_zeta = rng.exponential();
            double zeta = 1.0 / inv_zeta;
            while (zeta > z[k]) {
                for (Eigen::Index i = 0; i < d - 1; ++i) xi[i] = rng.normal();
                u[0] = 0.0;
                u.tail(d - 1) = l.template triangularView<Eigen::Lower>() * xi;
                for (Eigen::Index j = 0; j < d; ++j) log_y[j] = u[j] - u[k] - gamma(j, k);
                bool extremal = true;
                for (Eigen::Index m = 0; m < k; ++m) {
                    if (zeta * std::exp(log_y[m]) >= z[m]) {
                        extremal = false;
                        break;
                    }
                }
                if (extremal)
                    for (Eigen::Index j = 0; j < d; ++j)
                        z[j] = std::max(z[j], zeta * std::exp(log_y[j]));
                inv_zeta += rng.exponential();
                zeta = 1.0 / inv_zeta;
            }
        }
        out.values.row(t) = z.transpose();
    }
    return out;
}

ObservationMatrix invert_process(const ObservationMatrix& obs) {
    if (obs.scale != Scale::Frechet)
        throw config_error("invert_process: input must be on frechet scale");
    for (Eigen::Index j = 0; j < obs.d(); ++j)
        for (Eigen::Index i = 0; i < obs.n(); ++i)
            if (!(obs.values(i, j) > 0.0))
                throw numeric_error("invert_process: nonpositive value encountered");
    ObservationMatrix out;
    out.scale = Scale::Exponential;
    out.site_ids = obs.site_ids;
    out.values = obs.values.cwiseInverse();
    return out;
}

ObservationMatrix simulate_max_mixture(const SiteSet& sites, double omega,
                                       const VariogramSpec& br_spec, const MaternSpec& gauss_spec,
                                       int n, std::uint64_t seed) {
    if (!(omega >= 0.0 && omega <= 1.0))
        throw config_error("simulate_max_mixture: omega must be in [0,1]");
    const ObservationMatrix x = simulate_br(sites, br_spec, n, derive_seed(seed, 1));
    const ObservationMatrix y = simulate_gaussian(sites, gauss_spec, n, derive_seed(seed, 2));
    ObservationMatrix out;
    out.scale = Scale::Frechet;
    out.site_ids = sites.ids();
    out.values.resize(n, x.d());
    for (Eigen::Index t = 0; t < out.n(); ++t) {
        for (Eigen::Index j = 0; j < out.d(); ++j) {
            const double y_frechet = -1.0 / std::log(norm_cdf(y.values(t, j)));
            out.values(t, j) = std::max(omega * x.values(t, j), (1.0 - omega) * y_frechet);
        }
    }
    return out;
}

ObservationMatrix simulate_gaussian_mixture(const SiteSet& sites, std::size_t s0_index, double p,
                                            const MaternSpec& spec_s, const MaternSpec& spec_ns,
                                            int n, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0))
        throw config_error("simulate_gaussian_mixture: p must be in [0,1]");
    const auto d = static_cast<Eigen::Index>(sites.size());
    const auto s0 = static_cast<Eigen::Index>(s0_index);
    if (s0 >= d) throw config_error("simulate_gaussian_mixture: s0 index out of range");

    // Conditional law given the value at s0: mean r*v, covariance R - r r^T
    // over the remaining sites.
    struct Conditional {
        Eigen::VectorXd r;   // cross-correlations with s0, s0 removed
        Eigen::MatrixXd l;   // Cholesky factor of the conditional covariance
    };
    const auto build = [&](const MaternSpec& spec) {
        const Eigen::MatrixXd full = correlation_matrix(sites, spec);
        Conditional c;
        c.r.resize(d - 1);
        Eigen::MatrixXd sub(d - 1, d - 1);
        Eigen::Index a = 0;
        for (Eigen::Index i = 0; i < d; ++i) {
            if (i == s0) continue;
            c.r[a] = full(i, s0);
            Eigen::Index b = 0;
            for (Eigen::Index j = 0; j < d; ++j) {
                if (j == s0) continue;
                sub(a, b) = full(i, j);
                ++b;
            }
            ++a;
        }
        c.l = cholesky_with_jitter(sub - c.r * c.r.transpose(), "simulate_gaussian_mixture");
        return c;
    };
    const Conditional cond_s = build(spec_s);
    const Conditional cond_ns = build(spec_ns);

    Rng rng(seed);
    ObservationMatrix out;
    out.scale = Scale::Gaussian;
    out.site_ids = sites.ids();
    out.values.resize(n, d);
    Eigen::VectorXd xi(d - 1);
    for (int t = 0; t < n; ++t) {
        const double v = rng.normal();
        const Conditional& c = norm_cdf(v) <= p ? cond_s : cond_ns;
        for (Eigen::Index i = 0; i < d - 1; ++i) xi[i] = rng.normal();
        const Eigen::VectorXd field =
            c.r * v + c.l.template triangularView<Eigen::Lower>() * xi;
        Eigen::Index a = 0;
        for (Eigen::Index j = 0; j < d; ++j)
            out.values(t, j) = (j == s0) ? v : field[a++];
    }
    return out;
}

ObservationMatrix simulate(const SiteSet& sites, const ProcessSpec& spec) {
    ObservationMatrix out;
    switch (spec.kind) {
        case ProcessKind::Gaussian:
            out = simulate_gaussian(sites, spec.corr, spec.n, spec.seed);
            break;
        case ProcessKind::BR:
            out = simulate_br(sites, spec.vario, spec.n, spec.seed);
            break;
        case ProcessKind::InvertedBR:
            out = invert_process(simulate_br(sites, spec.vario, spec.n, spec.seed));
            break;
        case ProcessKind::MaxMixture:
            out = simulate_max_mixture(sites, spec.omega, spec.vario, spec.corr, spec.n,
                                       spec.seed);
            break;
        case ProcessKind::GaussianMixture: {
            std::size_t s0 = 0;
            bool found = false;
            for (std::size_t i = 0; i < sites.size(); ++i) {
                if (sites[i].id == spec.s0_id) {
                    s0 = i;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw config_error("simulate: gaussian_mixture s0 site '" + spec.s0_id +
                                   "' not found");
            out = simulate_gaussian_mixture(sites, s0, spec.p, spec.corr, spec.corr_ns, spec.n,
                                            spec.seed);
            break;
        }
    }
    if (spec.invert) out = invert_process(out);
    return out;
}

}  // namespace extdef
