#include "extdef/sites.hpp"

#include <cmath>
#include <unordered_set>

#include "extdef/errors.hpp"

namespace extdef {

namespace {
constexpr double kEarthRadiusKm = 6371.0;
constexpr double kDegToRad = 0.017453292519943295;
}  // namespace

double haversine_km(double lon1, double lat1, double lon2, double lat2) {
    const double phi1 = lat1 * kDegToRad, phi2 = lat2 * kDegToRad;
    const double dphi = (lat2 - lat1) * kDegToRad;
    const double dlam = (lon2 - lon1) * kDegToRad;
    const double a = std::sin(0.5 * dphi) * std::sin(0.5 * dphi) +
                     std::cos(phi1) * std::cos(phi2) * std::sin(0.5 * dlam) * std::sin(0.5 * dlam);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

SiteSet::SiteSet(std::vector<Site> sites, Plane plane, Metric metric)
    : sites_(std::move(sites)), plane_(plane), metric_(metric) {
    if (sites_.empty()) throw config_error("SiteSet: empty site list");
    std::unordered_set<std::string> seen;
    for (const auto& s : sites_) {
        if (!std::isfinite(s.x) || !std::isfinite(s.y))
            throw config_error("SiteSet: non-finite coordinate for site '" + s.id + "'");
        if (!seen.insert(s.id).second)
            throw config_error("SiteSet: duplicate site id '" + s.id + "'");
    }
    if (metric_ == Metric::GreatEarth) {
        if (plane_ != Plane::G)
            throw config_error("SiteSet: great-earth metric is only valid on the G plane");
        for (const auto& s : sites_) {
            if (std::fabs(s.y) > 90.0 || std::fabs(s.x) > 360.0)
                throw config_error("SiteSet: site '" + s.id +
                                   "' is not in lon/lat range required by great-earth metric");
        }
    }
}

std::vector<std::string> SiteSet::ids() const {
    std::vector<std::string> out;
    out.reserve(sites_.size());
    for (const auto& s : sites_) out.push_back(s.id);
    return out;
}

double SiteSet::distance(std::size_t i, std::size_t j) const {
    const Site& a = sites_[i];
    const Site& b = sites_[j];
    if (metric_ == Metric::GreatEarth) return haversine_km(a.x, a.y, b.x, b.y);
    return std::hypot(a.x - b.x, a.y - b.y);
}

Eigen::MatrixXd SiteSet::distance_matrix() const {
    const auto d = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j)
            h(i, j) = h(j, i) = distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return h;
}

BoundingBox SiteSet::bounding_box(double expand_frac) const {
    BoundingBox bb{sites_[0].x, sites_[0].x, sites_[0].y, sites_[0].y};
    for (const auto& s : sites_) {
        bb.xmin = std::min(bb.xmin, s.x);
        bb.xmax = std::max(bb.xmax, s.x);
        bb.ymin = std::min(bb.ymin, s.y);
        bb.ymax = std::max(bb.ymax, s.y);
    }
    const double mx = (bb.xmax - bb.xmin) * expand_frac;
    const double my = (bb.ymax - bb.ymin) * expand_frac;
    bb.xmin -= mx;
    bb.xmax += mx;
    bb.ymin -= my;
    bb.ymax += my;
    return bb;
}

}  // namespace extdef
