#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "canopy/errors.hpp"
#include "canopy/point_cloud.hpp"
#include "canopy/raster.hpp"

namespace canopy {

// Iterative 8-neighbor mean fill until no void remains. Each pass reads
// only the previous pass's state (Jacobi update), so the result does not
// depend on traversal order.
inline void fill_dem_voids(DemRaster& dem) {
    while (!dem.all_filled()) {
        DemRaster next = dem;
        bool progress = false;
        for (int r = 0; r < dem.rows; ++r) {
            for (int c = 0; c < dem.cols; ++c) {
                if (dem.has(c, r)) continue;
                double acc = 0.0;
                int n = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        if (dem.has(c + dc, r + dr)) {
                            acc += dem.at(c + dc, r + dr);
                            ++n;
                        }
                    }
                if (n > 0) {
                    next.set(c, r, acc / n);
                    progress = true;
                }
            }
        }
        if (!progress)
            throw InvalidInputError("fill_dem_voids: no filled cell to grow from");
        dem = std::move(next);
    }
}

// Ground surface from classified ground returns: per-cell mean elevation,
// then void fill.
inline DemRaster rasterize_dem(const std::vector<Point>& ground_points,
                               double cell_size = 1.0) {
    if (ground_points.empty())
        throw InvalidInputError("rasterize_dem: no ground points");
    if (!(cell_size > 0.0))
        throw InvalidInputError("rasterize_dem: cell size must be positive");

    const Bounds2D b = compute_bounds(ground_points);
    DemRaster dem;
    dem.origin_x = b.min_x;
    dem.origin_y = b.min_y;
    dem.cell_size = cell_size;
    dem.resize(raster_axis_cells(b.width(), cell_size),
               raster_axis_cells(b.height(), cell_size));

    std::vector<double> sum(dem.values.size(), 0.0);
    std::vector<std::uint32_t> count(dem.values.size(), 0);
    for (const Point& p : ground_points) {
        const std::size_t i = dem.index(dem.col_of(p.x), dem.row_of(p.y));
        sum[i] += p.z;
        ++count[i];
    }
    for (int r = 0; r < dem.rows; ++r)
        for (int c = 0; c < dem.cols; ++c) {
            const std::size_t i = dem.index(c, r);
            if (count[i] > 0) dem.set(c, r, sum[i] / count[i]);
        }

    fill_dem_voids(dem);
    return dem;
}

// Height normalization: subtract the ground elevation under each return and
// drop ground returns. Negative results (DEM smoothing above a return) clamp
// to zero so bin 0 of the height histograms stays well defined.
inline PointCloud normalize_heights(const PointCloud& cloud, const DemRaster& dem,
                                    std::vector<std::uint32_t>* kept_indices = nullptr) {
    PointCloud out;
    out.area_m2 = cloud.area_m2;
    out.points.reserve(cloud.size());
    if (kept_indices) kept_indices->clear();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point& p = cloud.points[i];
        if (p.ground) continue;
        if (!dem.in_extent(p.x, p.y)) {
            std::ostringstream msg;
            msg << "normalize_heights: point " << i << " at (" << p.x << ", " << p.y
                << ") lies outside the DEM extent";
            throw OutOfBoundsError(msg.str());
        }
        Point q = p;
        q.z = std::max(0.0, p.z - dem.at(dem.col_of(p.x), dem.row_of(p.y)));
        out.points.push_back(q);
        if (kept_indices) kept_indices->push_back(static_cast<std::uint32_t>(i));
    }
    return out;
}

// Ground removal for clouds whose z is already height above ground.
inline PointCloud drop_ground(const PointCloud& cloud,
                              std::vector<std::uint32_t>* kept_indices = nullptr) {
    PointCloud out;
    out.area_m2 = cloud.area_m2;
    out.points.reserve(cloud.size());
    if (kept_indices) kept_indices->clear();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point& p = cloud.points[i];
        if (p.ground) continue;
        Point q = p;
        q.z = std::max(0.0, p.z);
        out.points.push_back(q);
        if (kept_indices) kept_indices->push_back(static_cast<std::uint32_t>(i));
    }
    return out;
}

} // namespace canopy
