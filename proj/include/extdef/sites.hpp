#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace extdef {

/// G = geographic plane, D = deformed (latent) plane.
enum class Plane { G, D };

/// Distance metric between sites. GreatEarth is haversine on lon/lat
/// degrees with mean Earth radius 6371 km; only valid on the G plane.
enum class Metric { Euclidean, GreatEarth };

struct Site {
    std::string id;
    double x = 0.0;
    double y = 0.0;
};

struct BoundingBox {
    double xmin, xmax, ymin, ymax;
};

/// Ordered collection of sampling locations.
class SiteSet {
public:
    SiteSet(std::vector<Site> sites, Plane plane, Metric metric = Metric::Euclidean);

    std::size_t size() const { return sites_.size(); }
    const Site& operator[](std::size_t i) const { return sites_[i]; }
    const std::vector<Site>& sites() const { return sites_; }
    Plane plane() const { return plane_; }
    Metric metric() const { return metric_; }

    std::vector<std::string> ids() const;

    double distance(std::size_t i, std::size_t j) const;
    Eigen::MatrixXd distance_matrix() const;

    /// Axis-aligned bounding box, optionally expanded by a relative margin
    /// on each side.
    BoundingBox bounding_box(double expand_frac = 0.0) const;

private:
    std::vector<Site> sites_;
    Plane plane_;
    Metric metric_;
};

double haversine_km(double lon1, double lat1, double lon2, double lat2);

}  // namespace extdef
