#include "extdef/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "extdef/errors.hpp"

namespace extdef {

namespace {

struct Simplex {
    std::vector<Eigen::VectorXd> x;
    std::vector<double> f;

    void sort() {
        const std::size_t k = x.size();
        std::vector<std::size_t> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
        std::vector<Eigen::VectorXd> xs(k);
        std::vector<double> fs(k);
        for (std::size_t i = 0; i < k; ++i) {
            xs[i] = x[idx[i]];
            fs[i] = f[idx[i]];
        }
        x.swap(xs);
        f.swap(fs);
    }

    double diameter() const {
        double d = 0.0;
        for (std::size_t i = 1; i < x.size(); ++i) d = std::max(d, (x[i] - x[0]).lpNorm<Eigen::Infinity>());
        return d;
    }
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& steps,
                             const NelderMeadOptions& opts) {
    const auto n = x0.size();
    if (steps.size() != n) throw config_error("nelder_mead: steps size mismatch");
    const double nd = static_cast<double>(std::max<Eigen::Index>(n, 2));
    const double alpha = 1.0;
    const double gamma = 1.0 + 2.0 / nd;
    const double beta = 0.75 - 0.5 / nd;
    const double sigma = 1.0 - 1.0 / nd;

    NelderMeadResult res;
    res.x = x0;
    res.value = f(x0);
    res.evals = 1;
    if (!std::isfinite(res.value))
        throw numeric_error("nelder_mead: objective not finite at the starting point");
    if (n == 0) {
        res.converged = true;
        return res;
    }

    double step_scale = 1.0;
    for (int round = 0; round <= opts.restarts && res.evals < opts.max_evals; ++round) {
        Simplex s;
        s.x.assign(static_cast<std::size_t>(n) + 1, res.x);
        s.f.assign(static_cast<std::size_t>(n) + 1, res.value);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd xi = res.x;
            double step = steps[i] * step_scale;
            if (step == 0.0) step = 1e-4;
            // Halve steps that land in a rejected (+inf) region.
            for (int tries = 0; tries < 8; ++tries) {
                xi[i] = res.x[i] + step;
                s.f[static_cast<std::size_t>(i) + 1] = f(xi);
                ++res.evals;
                if (std::isfinite(s.f[static_cast<std::size_t>(i) + 1])) break;
                step *= -0.5;
            }
            s.x[static_cast<std::size_t>(i) + 1] = xi;
        }

        while (res.evals < opts.max_evals) {
            s.sort();
            if (s.f[0] < res.value) {
                res.value = s.f[0];
                res.x = s.x[0];
            }
            const double f_scale = std::fabs(s.f[0]) + 1.0;
            if (s.f[static_cast<std::size_t>(n)] - s.f[0] < opts.ftol * f_scale ||
                s.diameter() < opts.xtol) {
                res.converged = true;
                break;
            }

            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i) centroid += s.x[static_cast<std::size_t>(i)];
            centroid /= static_cast<double>(n);

            const Eigen::VectorXd& worst = s.x[static_cast<std::size_t>(n)];
            const double f_worst = s.f[static_cast<std::size_t>(n)];
            const double f_second = s.f[static_cast<std::size_t>(n) - 1];

            Eigen::VectorXd xr = centroid + alpha * (centroid - worst);
            const double fr = f(xr);
            ++res.evals;

            if (fr < s.f[0]) {
                Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
                const double fe = f(xe);
                ++res.evals;
                if (fe < fr) {
                    s.x[static_cast<std::size_t>(n)] = xe;
                    s.f[static_cast<std::size_t>(n)] = fe;
                } else {
                    s.x[static_cast<std::size_t>(n)] = xr;
                    s.f[static_cast<std::size_t>(n)] = fr;
                }
            } else if (fr < f_second) {
                s.x[static_cast<std::size_t>(n)] = xr;
                s.f[static_cast<std::size_t>(n)] = fr;
            } else {
                const bool outside = fr < f_worst;
                Eigen::VectorXd xc;
                if (outside)
                    xc = centroid + beta * (xr - centroid);
                else
                    xc = centroid - beta * (centroid - worst);
                const double fc = f(xc);
                ++res.evals;
                if (fc < (outside ? fr : f_worst)) {
                    s.x[static_cast<std::size_t>(n)] = xc;
                    s.f[static_cast<std::size_t>(n)] = fc;
                } else {
                    for (std::size_t i = 1; i <= static_cast<std::size_t>(n); ++i) {
                        s.x[i] = s.x[0] + sigma * (s.x[i] - s.x[0]);
                        s.f[i] = f(s.x[i]);
                        ++res.evals;
                    }
                }
            }
        }

        s.sort();
        if (s.f[0] < res.value) {
            res.value = s.f[0];
            res.x = s.x[0];
        }
        step_scale *= 0.25;
    }
    return res;
}

}  // namespace extdef
