#include "extdef/observations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "extdef/errors.hpp"
#include "extdef/special.hpp"

namespace extdef {

std::string to_string(Scale s) {
    switch (s) {
        case Scale::Raw: return "raw";
        case Scale::Uniform: return "uniform";
        case Scale::Exponential: return "exponential";
        case Scale::Frechet: return "frechet";
        case Scale::Gaussian: return "gaussian";
    }
    return "?";
}

void ObservationMatrix::validate() const {
    if (n() < 2) throw config_error("ObservationMatrix: need at least 2 observations");
    if (d() < 2) throw config_error("ObservationMatrix: need at least 2 sites");
    if (static_cast<Eigen::Index>(site_ids.size()) != d())
        throw config_error("ObservationMatrix: site_ids length does not match column count");
    for (Eigen::Index j = 0; j < d(); ++j) {
        for (Eigen::Index i = 0; i < n(); ++i) {
            const double v = values(i, j);
            if (!std::isfinite(v))
                throw config_error("ObservationMatrix: non-finite value at row " +
                                   std::to_string(i + 1) + ", site '" + site_ids[j] + "'");
            if (scale == Scale::Uniform && !(v > 0.0 && v < 1.0))
                throw config_error("ObservationMatrix: uniform scale requires values in (0,1)");
            if (scale == Scale::Exponential && v < 0.0)
                throw config_error("ObservationMatrix: exponential scale requires values >= 0");
            if (scale == Scale::Frechet && !(v > 0.0))
                throw config_error("ObservationMatrix: frechet scale requires values > 0");
        }
    }
}

ObservationMatrix ObservationMatrix::as_raw() const {
    ObservationMatrix out = *this;
    out.scale = Scale::Raw;
    return out;
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& column) {
    const Eigen::Index n = column.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return column[a] < column[b]; });
    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && column[order[j + 1]] == column[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // average of 1-based ranks
        for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

ObservationMatrix rank_transform(const ObservationMatrix& obs, Scale target) {
    if (obs.scale != Scale::Raw && obs.scale != Scale::Uniform)
        throw config_error("rank_transform: input must be on raw or uniform scale, got " +
                           to_string(obs.scale));
    if (target == Scale::Raw) throw config_error("rank_transform: target cannot be raw");
    obs.validate();

    const Eigen::Index n = obs.n();
    ObservationMatrix out;
    out.scale = target;
    out.site_ids = obs.site_ids;
    out.values.resize(n, obs.d());

    for (Eigen::Index j = 0; j < obs.d(); ++j) {
        const Eigen::VectorXd col = obs.values.col(j);
        if (col.maxCoeff() == col.minCoeff())
            throw config_error("rank_transform: column for site '" + obs.site_ids[j] +
                               "' is constant");
        const Eigen::VectorXd r = average_ranks(col);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = r[i] / static_cast<double>(n + 1);
            double v = u;
            switch (target) {
                case Scale::Uniform: v = u; break;
                case Scale::Exponential: v = -std::log1p(-u); break;
                case Scale::Frechet: v = -1.0 / std::log(u); break;
                case Scale::Gaussian: v = norm_quantile(u); break;
                case Scale::Raw: break;
            }
            out.values(i, j) = v;
        }
    }
    return out;
}

ObservationMatrix to_exponential_margins(const ObservationMatrix& obs) {
    if (obs.scale == Scale::Exponential) return obs;
    if (obs.scale == Scale::Raw || obs.scale == Scale::Uniform)
        return rank_transform(obs, Scale::Exponential);
    // Simulator output on other scales: ranks are scale-free, so transform
    // the values as observed data.
    return rank_transform(obs.as_raw(), Scale::Exponential);
}

}  // namespace extdef
