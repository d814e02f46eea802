#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "extdef/sites.hpp"

namespace extdef {

/// Restricted thin-plate spline: affine part (b1, b2, rho) plus radial
/// basis terms at m anchor sites. Each delta vector satisfies the moment
/// constraints sum(delta) = sum(delta*x) = sum(delta*y) = 0 over the anchor
/// coordinates, leaving 2m-3 free spline parameters for m >= 3. The shape
/// parameter of the dependence model (kappa, or theta2 for correlation
/// methods) rides along for the joint optimization.
struct SplineParams {
    double b1 = 1.0;
    double b2 = 1.0;
    double rho = 0.0;
    std::vector<std::size_t> anchors;  // indices into the G-plane SiteSet
    Eigen::VectorXd delta1;            // length m
    Eigen::VectorXd delta2;
    double shape = 1.0;

    std::size_t m() const { return anchors.size(); }
};

/// Radial basis g(h) = h^2 log h, with g(0) = 0 by continuity.
double tps_basis(double h);

/// Completes (delta_1, delta_2, delta_3) from the m-3 free trailing values
/// so the full vector satisfies the three moment constraints. The first
/// three anchors must not be collinear.
Eigen::VectorXd complete_deltas(const Eigen::VectorXd& free_deltas,
                                const std::vector<std::size_t>& anchors,
                                const SiteSet& g_sites);

/// Maps a single G-plane point through the spline.
Eigen::Vector2d deform_point(const SplineParams& params, const SiteSet& g_sites, double x,
                             double y);

/// Maps every site to the D plane (plane = D, metric = euclidean).
SiteSet apply_deformation(const SplineParams& params, const SiteSet& sites);

/// Analytic Jacobian determinant of the spline map at (x, y).
double jacobian_determinant(const SplineParams& params, const SiteSet& g_sites, double x,
                            double y);

/// True iff the analytic Jacobian determinant is strictly positive on a
/// resolution x resolution grid over the domain. Replaces checking folds
/// by eye.
bool check_bijectivity(const SplineParams& params, const SiteSet& g_sites,
                       const BoundingBox& domain, int resolution = 64);

}  // namespace extdef
