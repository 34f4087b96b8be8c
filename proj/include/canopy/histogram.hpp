#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "canopy/errors.hpp"

namespace canopy {

// Height histogram of one locale, bin 0 at height 0, fixed bin width
// (25 cm by default).
struct HeightHistogram {
    double bin_width = 0.25;
    std::vector<std::uint32_t> counts;

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (std::uint32_t c : counts) t += c;
        return t;
    }
};

inline HeightHistogram build_height_histogram(const std::vector<double>& heights,
                                              double bin_width = 0.25) {
    if (!(bin_width > 0.0))
        throw InvalidInputError("build_height_histogram: bin width must be positive");
    HeightHistogram hist;
    hist.bin_width = bin_width;
    for (double h : heights) {
        if (h < 0.0)
            throw InvalidInputError("build_height_histogram: negative height");
        const std::size_t bin = static_cast<std::size_t>(std::floor(h / bin_width));
        if (bin >= hist.counts.size()) hist.counts.resize(bin + 1, 0);
        ++hist.counts[bin];
    }
    return hist;
}

// Gaussian-smoothed histogram. The smeared mass extends one kernel radius
// past both ends of the source histogram, so `first_bin` is negative and the
// total mass (padded tails included) equals the source count. Bin b sits at
// heights [b*bin_width, (b+1)*bin_width).
struct SmoothedHistogram {
    double bin_width = 0.25;
    double sigma_m = 5.0;
    int first_bin = 0;
    std::vector<double> values;

    int last_bin() const { return first_bin + static_cast<int>(values.size()) - 1; }
    double value_at_bin(int bin) const {
        const int i = bin - first_bin;
        if (i < 0 || i >= static_cast<int>(values.size())) return 0.0;
        return values[static_cast<std::size_t>(i)];
    }
    double total_mass() const {
        double t = 0.0;
        for (double v : values) t += v;
        return t;
    }
};

// Normalized Gaussian taps for offsets -R..R with R = ceil(4*sigma_bins).
inline std::vector<double> gaussian_kernel(double sigma_bins) {
    if (!(sigma_bins > 0.0))
        throw InvalidInputError("gaussian_kernel: sigma must be positive");
    const int radius = static_cast<int>(std::ceil(4.0 * sigma_bins - 1e-12));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const double v = std::exp(-0.5 * (k / sigma_bins) * (k / sigma_bins));
        kernel[k + radius] = v;
        sum += v;
    }
    for (double& v : kernel) v /= sum;
    return kernel;
}

inline SmoothedHistogram gaussian_smooth(const HeightHistogram& hist, double sigma_m,
                                         const std::vector<double>& kernel) {
    SmoothedHistogram out;
    out.bin_width = hist.bin_width;
    out.sigma_m = sigma_m;
    if (hist.counts.empty()) return out;

    const int radius = (static_cast<int>(kernel.size()) - 1) / 2;
    const int n = static_cast<int>(hist.counts.size());
    out.first_bin = -radius;
    out.values.assign(static_cast<std::size_t>(n + 2 * radius), 0.0);
    for (int j = 0; j < n; ++j) {
        const double c = hist.counts[static_cast<std::size_t>(j)];
        if (c == 0.0) continue;
        double* dst = out.values.data() + j; // bin (j - radius) onward
        for (std::size_t k = 0; k < kernel.size(); ++k) dst[k] += c * kernel[k];
    }
    return out;
}

inline SmoothedHistogram gaussian_smooth(const HeightHistogram& hist,
                                         double sigma_m = 5.0) {
    if (!(sigma_m > 0.0))
        throw InvalidInputError("gaussian_smooth: sigma must be positive");
    if (hist.counts.empty()) {
        SmoothedHistogram out;
        out.bin_width = hist.bin_width;
        out.sigma_m = sigma_m;
        return out;
    }
    return gaussian_smooth(hist, sigma_m, gaussian_kernel(sigma_m / hist.bin_width));
}

// A maximal run of bins whose central second difference is negative: one
// canopy layer's height mode. Bin ids are absolute (padded tail bins are
// negative).
struct SalientCurve {
    int start_bin = 0;
    int end_bin = 0;
    double peak_value = 0.0;
    double mass = 0.0;

    double lower_edge_m(double bin_width) const { return start_bin * bin_width; }
    double upper_edge_m(double bin_width) const { return (end_bin + 1) * bin_width; }
};

// Curves ordered top-down. Runs whose smoothed mass falls below
// min_curve_mass (one point-equivalent by default) are numerical ripples and
// are dropped; pass 0 to keep everything.
inline std::vector<SalientCurve> find_salient_curves(const SmoothedHistogram& smooth,
                                                     double min_curve_mass = 1.0) {
    std::vector<SalientCurve> curves;
    const int m = static_cast<int>(smooth.values.size());
    if (m < 3) return curves;

    double peak = 0.0;
    for (double v : smooth.values) peak = std::max(peak, v);
    const double tol = -1e-12 * peak; // float ripple on flat stretches is not curvature

    int run_start = -1;
    auto close_run = [&](int run_end) {
        SalientCurve c;
        c.start_bin = smooth.first_bin + run_start;
        c.end_bin = smooth.first_bin + run_end;
        for (int i = run_start; i <= run_end; ++i) {
            c.peak_value = std::max(c.peak_value, smooth.values[static_cast<std::size_t>(i)]);
            c.mass += smooth.values[static_cast<std::size_t>(i)];
        }
        if (c.mass >= min_curve_mass) curves.push_back(c);
        run_start = -1;
    };

    for (int i = 1; i + 1 < m; ++i) {
        const double d2 = smooth.values[static_cast<std::size_t>(i - 1)] -
                          2.0 * smooth.values[static_cast<std::size_t>(i)] +
                          smooth.values[static_cast<std::size_t>(i + 1)];
        if (d2 < tol) {
            if (run_start < 0) run_start = i;
        } else if (run_start >= 0) {
            close_run(i - 1);
        }
    }
    if (run_start >= 0) close_run(m - 2);

    std::sort(curves.begin(), curves.end(),
              [](const SalientCurve& a, const SalientCurve& b) {
                  return a.start_bin > b.start_bin;
              });
    return curves;
}

// Cut height for stripping the top layer in one cell: the midpoint of the
// gap between the top curve's lower edge and the second curve's upper edge.
// Fewer than two curves means the whole column belongs to the top layer.
inline std::optional<double> cell_threshold(const std::vector<SalientCurve>& top_down,
                                            double bin_width = 0.25) {
    if (top_down.size() < 2) return std::nullopt;
    const double top_lower = top_down[0].lower_edge_m(bin_width);
    const double second_upper = top_down[1].upper_edge_m(bin_width);
    return std::max(0.0, 0.5 * (top_lower + second_upper));
}

} // namespace canopy
