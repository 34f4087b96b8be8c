#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "canopy/config.hpp"
#include "canopy/dem.hpp"
#include "canopy/dsm.hpp"
#include "canopy/errors.hpp"
#include "canopy/stratify.hpp"
#include "canopy/watershed.hpp"

namespace canopy {

// A segmented tree crown. member_point_ids index the cloud the crown was
// built from (the layer cloud at segmentation time; segment_trees remaps
// them to the pipeline's input cloud).
struct Crown {
    int id = 0;
    int layer_index = 0;
    double apex_x = 0.0;
    double apex_y = 0.0;
    double apex_z = 0.0;
    std::vector<std::uint32_t> member_point_ids;
    double footprint_area_m2 = 0.0;
    double avg_width_m = 0.0;
};

inline double equivalent_circle_width(double area_m2) {
    return 2.0 * std::sqrt(area_m2 / std::numbers::pi);
}

// Assemble crowns from a watershed labeling: each point joins the crown of
// its cell's label; points over unlabeled cells attach to the nearest
// labeled cell's crown rather than being dropped. Crown ids start at
// first_id in marker order.
inline std::vector<Crown> crowns_from_labels(const CanopyLayer& layer,
                                             const LabelRaster& labels,
                                             int layer_index = 0, int first_id = 0) {
    int max_label = -1;
    std::vector<std::uint32_t> cells_per_label;
    for (int r = 0; r < labels.rows; ++r)
        for (int c = 0; c < labels.cols; ++c)
            if (labels.has(c, r)) max_label = std::max(max_label, labels.at(c, r));
    cells_per_label.assign(static_cast<std::size_t>(max_label + 1), 0);
    for (int r = 0; r < labels.rows; ++r)
        for (int c = 0; c < labels.cols; ++c)
            if (labels.has(c, r)) ++cells_per_label[labels.at(c, r)];

    auto nearest_label = [&](int col, int row) -> int {
        // Expanding ring search; ties by squared distance then (col, row).
        const int reach = std::max(labels.cols, labels.rows);
        for (int ring = 1; ring <= reach; ++ring) {
            int best = -1;
            long best_d2 = 0;
            for (int r = row - ring; r <= row + ring; ++r)
                for (int c = col - ring; c <= col + ring; ++c) {
                    if (std::max(std::abs(c - col), std::abs(r - row)) != ring) continue;
                    if (!labels.has(c, r)) continue;
                    const long d2 = static_cast<long>(c - col) * (c - col) +
                                    static_cast<long>(r - row) * (r - row);
                    if (best < 0 || d2 < best_d2) {
                        best = labels.at(c, r);
                        best_d2 = d2;
                    }
                }
            if (best >= 0) return best;
        }
        return -1;
    };

    std::vector<Crown> crowns(cells_per_label.size());
    for (std::size_t k = 0; k < crowns.size(); ++k) {
        crowns[k].id = first_id + static_cast<int>(k);
        crowns[k].layer_index = layer_index;
        crowns[k].footprint_area_m2 =
            cells_per_label[k] * labels.cell_size * labels.cell_size;
        crowns[k].avg_width_m = equivalent_circle_width(crowns[k].footprint_area_m2);
    }

    for (std::size_t i = 0; i < layer.points.size(); ++i) {
        const Point& p = layer.points.points[i];
        const int c = labels.col_of(p.x), r = labels.row_of(p.y);
        int label = labels.has(c, r) ? labels.at(c, r) : nearest_label(c, r);
        if (label < 0) continue; // no labeling at all (zero markers)
        Crown& crown = crowns[static_cast<std::size_t>(label)];
        crown.member_point_ids.push_back(static_cast<std::uint32_t>(i));
        if (crown.member_point_ids.size() == 1 || p.z > crown.apex_z) {
            crown.apex_x = p.x;
            crown.apex_y = p.y;
            crown.apex_z = p.z;
        }
    }

    // Markers can land on cells whose points all sit elsewhere; drop crowns
    // that ended up with no members.
    std::vector<Crown> out;
    out.reserve(crowns.size());
    for (Crown& c : crowns)
        if (!c.member_point_ids.empty()) out.push_back(std::move(c));
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k].id = first_id + static_cast<int>(k);
    return out;
}

// Noise rule: drop crowns narrower than min_width_m on average or entirely
// below min_apex_height_m. Both tests are strict, so exact boundary crowns
// survive.
inline std::vector<Crown> filter_noise(std::vector<Crown> crowns,
                                       double min_width_m = 1.5,
                                       double min_apex_height_m = 4.0,
                                       int* dropped = nullptr) {
    std::vector<Crown> kept;
    kept.reserve(crowns.size());
    int n_dropped = 0;
    for (Crown& c : crowns) {
        if (c.avg_width_m < min_width_m || c.apex_z < min_apex_height_m)
            ++n_dropped;
        else
            kept.push_back(std::move(c));
    }
    if (dropped) *dropped += n_dropped;
    return kept;
}

struct SegmentationResult {
    std::vector<Crown> crowns; // member ids refer to the input cloud
    std::vector<int> per_layer_crown_counts;
    int dropped_noise_count = 0;
    std::vector<CanopyLayer> layers;
    bool stratified = true;
};

namespace detail {

// Whole cloud as a single take-all layer (the DSM-only baseline).
inline CanopyLayer whole_cloud_layer(const PointCloud& cloud, const StratifyParams& params) {
    const DensityStats stats = compute_density(cloud);
    const GridIndex grid = build_grid(cloud, stats.afp_m);
    ThresholdField take_all;
    take_all.cols = grid.cols;
    take_all.rows = grid.rows;
    take_all.cut.assign(grid.cell_count(), std::nullopt);
    StripResult res =
        split_by_field(cloud, grid, take_all, stats.afp_m, params, cloud.area_m2);
    return std::move(res.layer);
}

} // namespace detail

// Full pipeline: normalize (or drop pre-normalized ground returns), stratify
// unless disabled, then per layer DSM -> markers -> watershed -> crowns ->
// noise filter. Ground-vegetation layers are kept in the layer list but not
// segmented.
inline SegmentationResult segment_trees(const PointCloud& cloud,
                                        const std::optional<DemRaster>& dem,
                                        const PipelineConfig& config = {}) {
    if (cloud.empty())
        throw InvalidInputError("segment_trees: empty cloud");

    std::vector<std::uint32_t> kept;
    const PointCloud normalized =
        dem ? normalize_heights(cloud, *dem, &kept) : drop_ground(cloud, &kept);
    if (normalized.empty())
        throw InvalidInputError("segment_trees: no non-ground points");

    SegmentationResult result;
    result.stratified = config.stratification_enabled;
    const StratifyParams sparams = config.stratify_params();
    if (config.stratification_enabled) {
        result.layers = stratify(normalized, sparams);
    } else {
        result.layers.push_back(detail::whole_cloud_layer(normalized, sparams));
    }

    int next_id = 0;
    for (std::size_t li = 0; li < result.layers.size(); ++li) {
        const CanopyLayer& layer = result.layers[li];
        if (layer.ground_vegetation) {
            result.per_layer_crown_counts.push_back(0);
            continue;
        }
        const double layer_afp = compute_afp(layer.summary.density_pt_m2);
        const double cell = std::max(config.dsm_cell_m, layer_afp);
        const DsmRaster dsm = build_dsm(layer, cell, config.dsm_smooth);
        const std::vector<Marker> markers = detect_maxima(dsm, config.marker_min_height_m);
        const LabelRaster labels = watershed(dsm, markers);
        std::vector<Crown> crowns =
            crowns_from_labels(layer, labels, static_cast<int>(li), next_id);
        crowns = filter_noise(crowns, config.noise_min_width_m, config.noise_min_height_m,
                              &result.dropped_noise_count);
        // Remap member ids: layer cloud -> normalized cloud -> input cloud.
        for (Crown& c : crowns)
            for (std::uint32_t& id : c.member_point_ids)
                id = kept[layer.source_indices[id]];
        result.per_layer_crown_counts.push_back(static_cast<int>(crowns.size()));
        for (Crown& c : crowns) {
            c.id = next_id++;
            result.crowns.push_back(std::move(c));
        }
    }
    return result;
}

} // namespace canopy
