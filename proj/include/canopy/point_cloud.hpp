#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "canopy/errors.hpp"

namespace canopy {

// A single LiDAR return. Before normalization z is an elevation; after
// normalization z is the height above ground and ground returns are gone.
struct Point {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    bool ground = false;
    std::optional<std::uint32_t> source_id; // synthetic provenance (tree index)
};

struct Bounds2D {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();

    bool valid() const { return min_x <= max_x && min_y <= max_y; }
    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double area() const { return valid() ? width() * height() : 0.0; }

    void expand(double x, double y) {
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
    }
};

inline Bounds2D compute_bounds(const std::vector<Point>& points) {
    Bounds2D b;
    for (const Point& p : points) b.expand(p.x, p.y);
    return b;
}

// An ordered collection of returns plus the horizontal area used for
// density. The area defaults to the bounding box; workflows that know the
// true extent (plot + buffer, synthetic stand) override it.
struct PointCloud {
    std::vector<Point> points;
    double area_m2 = 0.0;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

inline PointCloud make_cloud(std::vector<Point> points,
                             std::optional<double> area_override = std::nullopt) {
    PointCloud cloud;
    cloud.points = std::move(points);
    cloud.area_m2 = area_override ? *area_override : compute_bounds(cloud.points).area();
    return cloud;
}

// Point density and the average footprint (AFP) derived from it. AFP is the
// grid cell width used throughout stratification.
struct DensityStats {
    double density_pt_m2 = 0.0;
    double afp_m = 0.0;
};

inline double compute_afp(double density_pt_m2) {
    return 1.0 / std::sqrt(density_pt_m2);
}

inline DensityStats compute_density(const PointCloud& cloud) {
    if (cloud.empty())
        throw InvalidInputError("compute_density: point cloud is empty");
    if (!(cloud.area_m2 > 0.0) || !std::isfinite(cloud.area_m2))
        throw InvalidInputError("compute_density: horizontal area must be positive");
    DensityStats stats;
    stats.density_pt_m2 = static_cast<double>(cloud.size()) / cloud.area_m2;
    stats.afp_m = compute_afp(stats.density_pt_m2);
    return stats;
}

} // namespace canopy
