#pragma once

#include "canopy/stratify.hpp"

namespace canopy {

// Pipeline knobs with their operational defaults: 25 cm histogram bins, 5 m
// smoothing sigma, locale radius 6 x AFP floored at 1.5 m, noise crowns
// below 1.5 m average width or entirely below 4 m, 0.5 m DSM cells, match
// tolerances of 30% height difference and 15 degrees lean, 4.7 m plot
// buffer.
struct PipelineConfig {
    double bin_width_m = 0.25;
    double smooth_sigma_m = 5.0;
    double locale_factor = 6.0;
    double locale_min_radius_m = 1.5;
    double noise_min_width_m = 1.5;
    double noise_min_height_m = 4.0;
    double dsm_cell_m = 0.5;
    double match_height_tol = 0.30;
    double match_lean_tol_deg = 15.0;
    double plot_buffer_m = 4.7;
    bool stratification_enabled = true;

    // Internal machinery defaults, not part of the cited parameter set.
    double marker_min_height_m = 2.0;
    bool dsm_smooth = true;
    unsigned threads = 0;

    StratifyParams stratify_params() const {
        StratifyParams p;
        p.bin_width_m = bin_width_m;
        p.smooth_sigma_m = smooth_sigma_m;
        p.locale_factor = locale_factor;
        p.locale_min_radius_m = locale_min_radius_m;
        p.ground_veg_max_height_m = noise_min_height_m;
        p.threads = threads;
        return p;
    }
};

} // namespace canopy
