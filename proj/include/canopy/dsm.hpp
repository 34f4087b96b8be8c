#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "canopy/errors.hpp"
#include "canopy/raster.hpp"
#include "canopy/stratify.hpp"

namespace canopy {
namespace detail {

struct XY {
    double x, y;
};

inline double cross(const XY& o, const XY& a, const XY& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Monotone chain convex hull, CCW, no duplicate endpoint.
inline std::vector<XY> convex_hull(std::vector<XY> pts) {
    std::sort(pts.begin(), pts.end(), [](const XY& a, const XY& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const XY& a, const XY& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<XY> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

inline bool inside_hull(const std::vector<XY>& hull, double x, double y) {
    if (hull.size() < 3) return false;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const XY& a = hull[i];
        const XY& b = hull[(i + 1) % hull.size()];
        if (cross(a, b, XY{x, y}) < 0) return false;
    }
    return true;
}

} // namespace detail

// Per-layer top surface: max height per cell, voids inside the layer's
// convex footprint filled by iterative 8-neighbor max, then an optional 3x3
// mean pass to knock down single-return spikes before marker detection.
inline DsmRaster build_dsm(const CanopyLayer& layer, double cell_size = 0.5,
                           bool smooth = true) {
    if (layer.points.empty())
        throw InvalidInputError("build_dsm: empty layer");
    if (!(cell_size > 0.0))
        throw InvalidInputError("build_dsm: cell size must be positive");

    const Bounds2D b = compute_bounds(layer.points.points);
    DsmRaster dsm;
    dsm.origin_x = b.min_x;
    dsm.origin_y = b.min_y;
    dsm.cell_size = cell_size;
    dsm.resize(raster_axis_cells(b.width(), cell_size),
               raster_axis_cells(b.height(), cell_size));

    for (const Point& p : layer.points.points) {
        const int c = dsm.col_of(p.x), r = dsm.row_of(p.y);
        if (!dsm.has(c, r) || p.z > dsm.at(c, r)) dsm.set(c, r, p.z);
    }

    std::vector<detail::XY> xy;
    xy.reserve(layer.points.size());
    for (const Point& p : layer.points.points) xy.push_back({p.x, p.y});
    const std::vector<detail::XY> hull = detail::convex_hull(std::move(xy));

    if (hull.size() >= 3) {
        std::vector<std::uint8_t> wanted(dsm.values.size(), 0);
        bool any_void = false;
        for (int r = 0; r < dsm.rows; ++r)
            for (int c = 0; c < dsm.cols; ++c) {
                if (dsm.has(c, r)) continue;
                if (detail::inside_hull(hull, dsm.cell_center_x(c), dsm.cell_center_y(r))) {
                    wanted[dsm.index(c, r)] = 1;
                    any_void = true;
                }
            }
        while (any_void) {
            DsmRaster next = dsm;
            any_void = false;
            bool progress = false;
            for (int r = 0; r < dsm.rows; ++r)
                for (int c = 0; c < dsm.cols; ++c) {
                    if (!wanted[dsm.index(c, r)] || dsm.has(c, r)) continue;
                    double best = 0.0;
                    bool found = false;
                    for (int dr = -1; dr <= 1; ++dr)
                        for (int dc = -1; dc <= 1; ++dc) {
                            if (dr == 0 && dc == 0) continue;
                            if (dsm.has(c + dc, r + dr)) {
                                best = found ? std::max(best, dsm.at(c + dc, r + dr))
                                             : dsm.at(c + dc, r + dr);
                                found = true;
                            }
                        }
                    if (found) {
                        next.set(c, r, best);
                        progress = true;
                    } else {
                        any_void = true;
                    }
                }
            dsm = std::move(next);
            if (!progress) break;
        }
    }

    if (smooth) {
        DsmRaster smoothed = dsm;
        for (int r = 0; r < dsm.rows; ++r)
            for (int c = 0; c < dsm.cols; ++c) {
                if (!dsm.has(c, r)) continue;
                double acc = 0.0;
                int n = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                        if (dsm.has(c + dc, r + dr)) {
                            acc += dsm.at(c + dc, r + dr);
                            ++n;
                        }
                smoothed.set(c, r, acc / n);
            }
        dsm = std::move(smoothed);
    }
    return dsm;
}

} // namespace canopy
