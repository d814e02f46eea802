#include "extdef/tps.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "extdef/errors.hpp"

namespace extdef {

double tps_basis(double h) {
    if (h <= 0.0) return 0.0;
    return h * h * std::log(h);
}

Eigen::VectorXd complete_deltas(const Eigen::VectorXd& free_deltas,
                                const std::vector<std::size_t>& anchors,
                                const SiteSet& g_sites) {
    const auto m = static_cast<Eigen::Index>(anchors.size());
    if (m < 3) throw config_error("complete_deltas: need at least 3 anchors");
    if (free_deltas.size() != m - 3)
        throw config_error("complete_deltas: expected " + std::to_string(m - 3) +
                           " free deltas, got " + std::to_string(free_deltas.size()));

    Eigen::Matrix3d A;
    for (int k = 0; k < 3; ++k) {
        const Site& s = g_sites[anchors[static_cast<std::size_t>(k)]];
        A(0, k) = 1.0;
        A(1, k) = s.x;
        A(2, k) = s.y;
    }
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (Eigen::Index i = 3; i < m; ++i) {
        const Site& s = g_sites[anchors[static_cast<std::size_t>(i)]];
        rhs[0] -= free_deltas[i - 3];
        rhs[1] -= free_deltas[i - 3] * s.x;
        rhs[2] -= free_deltas[i - 3] * s.y;
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
    if (!lu.isInvertible())
        throw numeric_error("complete_deltas: first three anchors are collinear");
    const Eigen::Vector3d head = lu.solve(rhs);

    Eigen::VectorXd full(m);
    full.head<3>() = head;
    full.tail(m - 3) = free_deltas;
    return full;
}

Eigen::Vector2d deform_point(const SplineParams& params, const SiteSet& g_sites, double x,
                             double y) {
    const double b1 = params.b1, b2 = params.b2, rho = params.rho;
    double fx = b1 * b1 * x + rho * b1 * b2 * y;
    double fy = b2 * b2 * y + rho * b1 * b2 * x;
    for (std::size_t i = 0; i < params.anchors.size(); ++i) {
        const Site& a = g_sites[params.anchors[i]];
        const double g = tps_basis(std::hypot(x - a.x, y - a.y));
        fx += params.delta1[static_cast<Eigen::Index>(i)] * g;
        fy += params.delta2[static_cast<Eigen::Index>(i)] * g;
    }
    return {fx, fy};
}

SiteSet apply_deformation(const SplineParams& params, const SiteSet& sites) {
    std::vector<Site> mapped;
    mapped.reserve(sites.size());
    for (const auto& s : sites.sites()) {
        const Eigen::Vector2d p = deform_point(params, sites, s.x, s.y);
        mapped.push_back({s.id, p[0], p[1]});
    }
    return SiteSet(std::move(mapped), Plane::D, Metric::Euclidean);
}

double jacobian_determinant(const SplineParams& params, const SiteSet& g_sites, double x,
                            double y) {
    const double b1 = params.b1, b2 = params.b2, rho = params.rho;
    // d/dx [h^2 log h] = (2 log h + 1)(x - xi); 0 in the limit h -> 0.
    double j11 = b1 * b1, j12 = rho * b1 * b2;
    double j21 = rho * b1 * b2, j22 = b2 * b2;
    for (std::size_t i = 0; i < params.anchors.size(); ++i) {
        const Site& a = g_sites[params.anchors[i]];
        const double dx = x - a.x, dy = y - a.y;
        const double h = std::hypot(dx, dy);
        if (h <= 0.0) continue;
        const double w = 2.0 * std::log(h) + 1.0;
        const double d1 = params.delta1[static_cast<Eigen::Index>(i)];
        const double d2 = params.delta2[static_cast<Eigen::Index>(i)];
        j11 += d1 * w * dx;
        j12 += d1 * w * dy;
        j21 += d2 * w * dx;
        j22 += d2 * w * dy;
    }
    return j11 * j22 - j12 * j21;
}

bool check_bijectivity(const SplineParams& params, const SiteSet& g_sites,
                       const BoundingBox& domain, int resolution) {
    if (resolution < 16) throw config_error("check_bijectivity: resolution must be >= 16");
    // The optimizer warm-starts at the identity (determinant +1), so any
    // sign change passes through a fold; requiring a strictly positive
    // determinant everywhere also rejects globally reflected affine maps
    // (|rho| >= 1).
    for (int iy = 0; iy < resolution; ++iy) {
        const double y = domain.ymin +
                         (domain.ymax - domain.ymin) * iy / static_cast<double>(resolution - 1);
        for (int ix = 0; ix < resolution; ++ix) {
            const double x = domain.xmin +
                             (domain.xmax - domain.xmin) * ix / static_cast<double>(resolution - 1);
            const double det = jacobian_determinant(params, g_sites, x, y);
            if (!(det > 0.0) || !std::isfinite(det)) return false;
        }
    }
    return true;
}

}  // namespace extdef
