#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "canopy/errors.hpp"
#include "canopy/grid_index.hpp"
#include "canopy/histogram.hpp"
#include "canopy/parallel.hpp"
#include "canopy/point_cloud.hpp"

namespace canopy {

// Vertical stratification: per grid cell, the height histogram of a circular
// locale around the cell is smoothed and its salient curves (concave runs)
// are read as canopy layers; the cell's cut height is the midpoint of the
// gap between the two topmost curves. Cells whose locale is unimodal or too
// sparse take the whole column into the current top layer. Stripping repeats
// on the remainder, with density (hence AFP and locale radius) recomputed
// each pass, until the cloud is empty.

struct StratifyParams {
    double bin_width_m = 0.25;
    double smooth_sigma_m = 5.0;
    double locale_factor = 6.0;
    double locale_min_radius_m = 1.5;
    double min_curve_mass = 1.0;
    std::size_t sparse_locale_min_points = 8;
    double ground_veg_max_height_m = 4.0;
    unsigned threads = 0;
};

inline double locale_radius(double afp, double factor = 6.0, double min_radius = 1.5) {
    if (!(afp > 0.0))
        throw InvalidInputError("locale_radius: afp must be positive");
    return std::max(factor * afp, min_radius);
}

// Heights of all points within the closed disc of the given radius around
// the cell's center.
inline std::vector<double> collect_locale(const GridIndex& grid, const PointCloud& cloud,
                                          int col, int row, double radius) {
    std::vector<double> heights;
    if (grid.empty()) return heights;
    const double cx = grid.cell_center_x(col);
    const double cy = grid.cell_center_y(row);
    const double r2 = radius * radius;
    const int reach = static_cast<int>(std::ceil(radius / grid.cell_width)) + 1;
    const int c_lo = std::max(0, col - reach), c_hi = std::min(grid.cols - 1, col + reach);
    const int r_lo = std::max(0, row - reach), r_hi = std::min(grid.rows - 1, row + reach);
    for (int r = r_lo; r <= r_hi; ++r)
        for (int c = c_lo; c <= c_hi; ++c)
            for (std::uint32_t id : grid.cell_points(c, r)) {
                const Point& p = cloud.points[id];
                const double dx = p.x - cx, dy = p.y - cy;
                if (dx * dx + dy * dy <= r2) heights.push_back(p.z);
            }
    return heights;
}

// Per-cell cut heights for one stripping pass; cells without a threshold
// take their whole column.
struct ThresholdField {
    int cols = 0;
    int rows = 0;
    std::vector<std::optional<double>> cut;

    const std::optional<double>& at(int col, int row) const {
        return cut[static_cast<std::size_t>(row) * cols + col];
    }
};

inline ThresholdField compute_threshold_field(const GridIndex& grid, const PointCloud& cloud,
                                              double radius, const StratifyParams& params) {
    ThresholdField field;
    field.cols = grid.cols;
    field.rows = grid.rows;
    field.cut.assign(grid.cell_count(), std::nullopt);
    if (grid.empty()) return field;

    const std::vector<double> kernel =
        gaussian_kernel(params.smooth_sigma_m / params.bin_width_m);

    std::vector<std::uint32_t> occupied;
    occupied.reserve(grid.cell_count());
    for (std::uint32_t cell = 0; cell < grid.cell_count(); ++cell)
        if (grid.cell_start[cell + 1] > grid.cell_start[cell]) occupied.push_back(cell);

    parallel_for(
        occupied.size(),
        [&](std::size_t i) {
            const std::uint32_t cell = occupied[i];
            const int col = static_cast<int>(cell % grid.cols);
            const int row = static_cast<int>(cell / grid.cols);
            const std::vector<double> heights =
                collect_locale(grid, cloud, col, row, radius);
            if (heights.size() < params.sparse_locale_min_points) return; // take-all
            const HeightHistogram hist =
                build_height_histogram(heights, params.bin_width_m);
            const SmoothedHistogram smooth =
                gaussian_smooth(hist, params.smooth_sigma_m, kernel);
            const std::vector<SalientCurve> curves =
                find_salient_curves(smooth, params.min_curve_mass);
            field.cut[cell] = cell_threshold(curves, params.bin_width_m);
        },
        params.threads);
    return field;
}

struct LayerCellRecord {
    int col = 0;
    int row = 0;
    std::optional<double> threshold; // nullopt = take-all cell
    double min_z = 0.0;
    double max_z = 0.0;
    std::uint32_t point_count = 0;

    double starting_height() const { return threshold ? *threshold : min_z; }
    double thickness() const { return max_z - starting_height(); }
};

struct LayerSummary {
    double starting_height_m = 0.0; // median over contributing cells
    double thickness_m = 0.0;       // median over contributing cells
    double density_pt_m2 = 0.0;
};

// One stripped 2.5D canopy layer. source_indices map layer points back to
// the cloud that was stratified.
struct CanopyLayer {
    PointCloud points;
    std::vector<std::uint32_t> source_indices;
    std::vector<LayerCellRecord> per_cell;
    LayerSummary summary;
    double strip_afp_m = 0.0;
    bool ground_vegetation = false;

    double max_point_height() const {
        double m = 0.0;
        for (const Point& p : points.points) m = std::max(m, p.z);
        return m;
    }
};

inline LayerSummary layer_summary(const CanopyLayer& layer, double area_m2) {
    if (layer.points.empty())
        throw InvalidInputError("layer_summary: empty layer");
    if (!(area_m2 > 0.0))
        throw InvalidInputError("layer_summary: area must be positive");

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };

    std::vector<double> starts, thicknesses;
    starts.reserve(layer.per_cell.size());
    thicknesses.reserve(layer.per_cell.size());
    for (const LayerCellRecord& rec : layer.per_cell) {
        starts.push_back(rec.starting_height());
        thicknesses.push_back(rec.thickness());
    }

    LayerSummary s;
    s.starting_height_m = median(std::move(starts));
    s.thickness_m = median(std::move(thicknesses));
    s.density_pt_m2 = static_cast<double>(layer.points.size()) / area_m2;
    return s;
}

struct StripResult {
    CanopyLayer layer;
    PointCloud remainder;
    std::vector<std::uint32_t> remainder_indices;
};

namespace detail {

// Split the cloud by the threshold field. Cells without a cut take all
// their points.
inline StripResult split_by_field(const PointCloud& cloud, const GridIndex& grid,
                                  const ThresholdField& field, double afp,
                                  const StratifyParams& params, double area_m2) {
    StripResult res;
    res.layer.points.area_m2 = area_m2;
    res.remainder.area_m2 = area_m2;
    res.layer.strip_afp_m = afp;

    struct CellAgg {
        double min_z = 0.0, max_z = 0.0;
        std::uint32_t count = 0;
    };
    std::vector<CellAgg> agg(grid.cell_count());

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point& p = cloud.points[i];
        auto [c, r] = grid.cell_of(p.x, p.y);
        c = std::min(std::max(c, 0), grid.cols - 1);
        r = std::min(std::max(r, 0), grid.rows - 1);
        const std::size_t cell = static_cast<std::size_t>(r) * grid.cols + c;
        const std::optional<double>& cut = field.cut[cell];
        if (!cut || p.z >= *cut) {
            res.layer.points.points.push_back(p);
            res.layer.source_indices.push_back(static_cast<std::uint32_t>(i));
            CellAgg& a = agg[cell];
            if (a.count == 0) {
                a.min_z = a.max_z = p.z;
            } else {
                a.min_z = std::min(a.min_z, p.z);
                a.max_z = std::max(a.max_z, p.z);
            }
            ++a.count;
        } else {
            res.remainder.points.push_back(p);
            res.remainder_indices.push_back(static_cast<std::uint32_t>(i));
        }
    }

    for (int r = 0; r < grid.rows; ++r)
        for (int c = 0; c < grid.cols; ++c) {
            const std::size_t cell = static_cast<std::size_t>(r) * grid.cols + c;
            if (agg[cell].count == 0) continue;
            LayerCellRecord rec;
            rec.col = c;
            rec.row = r;
            rec.threshold = field.cut[cell];
            rec.min_z = agg[cell].min_z;
            rec.max_z = agg[cell].max_z;
            rec.point_count = agg[cell].count;
            res.layer.per_cell.push_back(rec);
        }

    if (!res.layer.points.empty()) {
        res.layer.summary = layer_summary(res.layer, area_m2);
        res.layer.ground_vegetation =
            res.layer.max_point_height() < params.ground_veg_max_height_m;
    }
    return res;
}

} // namespace detail

// Strip the current top canopy layer. Always removes at least one point: if
// the per-cell rule strips nothing (locale/cell mismatch), the pass retries
// as take-all so the loop in stratify terminates.
inline StripResult strip_top_layer(const PointCloud& cloud,
                                   const StratifyParams& params = {}) {
    if (cloud.empty())
        throw InvalidInputError("strip_top_layer: empty cloud");

    const DensityStats stats = compute_density(cloud);
    const GridIndex grid = build_grid(cloud, stats.afp_m);
    const double radius =
        locale_radius(stats.afp_m, params.locale_factor, params.locale_min_radius_m);
    const ThresholdField field = compute_threshold_field(grid, cloud, radius, params);

    StripResult res =
        detail::split_by_field(cloud, grid, field, stats.afp_m, params, cloud.area_m2);
    if (res.layer.points.empty()) {
        ThresholdField take_all;
        take_all.cols = field.cols;
        take_all.rows = field.rows;
        take_all.cut.assign(field.cut.size(), std::nullopt);
        res = detail::split_by_field(cloud, grid, take_all, stats.afp_m, params,
                                     cloud.area_m2);
    }
    return res;
}

// Stratify a normalized, ground-free cloud into canopy layers, top to
// bottom. Layers partition the input point set; source_indices refer to the
// input cloud.
inline std::vector<CanopyLayer> stratify(const PointCloud& cloud,
                                         const StratifyParams& params = {}) {
    if (cloud.empty())
        throw InvalidInputError("stratify: empty cloud");

    std::vector<CanopyLayer> layers;
    PointCloud remainder = cloud;
    std::vector<std::uint32_t> index_map(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        index_map[i] = static_cast<std::uint32_t>(i);

    while (!remainder.empty()) {
        StripResult res = strip_top_layer(remainder, params);
        for (std::uint32_t& id : res.layer.source_indices) id = index_map[id];
        std::vector<std::uint32_t> next_map;
        next_map.reserve(res.remainder_indices.size());
        for (std::uint32_t id : res.remainder_indices) next_map.push_back(index_map[id]);
        index_map = std::move(next_map);
        remainder = std::move(res.remainder);
        layers.push_back(std::move(res.layer));
    }
    return layers;
}

} // namespace canopy
