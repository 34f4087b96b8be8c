#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "canopy/errors.hpp"
#include "canopy/evaluation.hpp"
#include "canopy/point_cloud.hpp"

namespace canopy {

// Deterministic RNG: mt19937_64 is fully specified by the standard and the
// transforms below avoid the implementation-defined std distributions, so a
// (spec, seed) pair reproduces bit-identical clouds on any platform.
struct Rng {
    std::mt19937_64 engine;

    explicit Rng(std::uint64_t seed) : engine(seed) {}

    double u01() { return (engine() >> 11) * 0x1.0p-53; } // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }
    double normal(double mean, double sd) {
        const double u1 = 1.0 - u01(); // (0, 1], keeps log finite
        const double u2 = u01();
        return mean + sd * std::sqrt(-2.0 * std::log(u1)) *
                          std::cos(2.0 * std::numbers::pi * u2);
    }
};

enum class CrownShape { cone, ellipsoid };

struct TreeSpec {
    double stem_x = 0.0;
    double stem_y = 0.0;
    double total_height_m = 0.0;
    double crown_base_m = 0.0;
    double crown_radius_m = 0.0;
    CrownShape shape = CrownShape::cone;
    int story = 0; // 0 = over-story
};

struct StorySpec {
    int count = 0;
    double mean_height_m = 20.0;
    double height_sd_m = 2.0;
    std::optional<double> height_min_m; // extra clamps beyond the +-4 sd window
    std::optional<double> height_max_m;
    double crown_base_ratio = 0.4;      // fraction of total height
    std::optional<double> crown_base_m; // absolute override
    double crown_radius_m = 2.5;
    double crown_radius_jitter_m = 0.0; // uniform +- jitter
    double min_spacing_m = 2.0;
    double edge_margin_m = 0.0;
    CrownShape shape = CrownShape::cone;
};

struct StandSpec {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 30.0;
    double max_y = 30.0;
    std::vector<StorySpec> stories; // descending mean height
    double pulse_density_pt_m2 = 25.0;
    double transmission = 1.0; // per story crossed, in (0, 1]

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double area() const { return width() * height(); }
};

inline void validate(const StandSpec& spec) {
    if (!(spec.width() > 0.0) || !(spec.height() > 0.0))
        throw InvalidInputError("stand spec: empty extent");
    if (!(spec.pulse_density_pt_m2 > 0.0))
        throw InvalidInputError("stand spec: pulse density must be positive");
    if (!(spec.transmission > 0.0) || spec.transmission > 1.0)
        throw InvalidInputError("stand spec: transmission must be in (0, 1]");
    for (std::size_t s = 0; s + 1 < spec.stories.size(); ++s)
        if (spec.stories[s].mean_height_m < spec.stories[s + 1].mean_height_m)
            throw InvalidInputError("stand spec: stories must be ordered by "
                                    "descending mean height");
    for (const StorySpec& st : spec.stories) {
        if (st.count < 0) throw InvalidInputError("stand spec: negative tree count");
        if (!(st.crown_radius_m > 0.0))
            throw InvalidInputError("stand spec: crown radius must be positive");
    }
}

// Place trees story by story: uniform stems with minimum-spacing rejection
// within the story, heights normal-drawn and clamped to +-4 sd (plus any
// explicit story clamps).
inline std::vector<TreeSpec> generate_stand(const StandSpec& spec, std::uint64_t seed) {
    validate(spec);
    Rng rng(seed);
    std::vector<TreeSpec> trees;

    for (std::size_t s = 0; s < spec.stories.size(); ++s) {
        const StorySpec& story = spec.stories[s];
        const std::size_t story_first = trees.size();
        const double m = story.edge_margin_m;
        const double lo_x = spec.min_x + m, hi_x = spec.max_x - m;
        const double lo_y = spec.min_y + m, hi_y = spec.max_y - m;
        if (story.count > 0 && (lo_x >= hi_x || lo_y >= hi_y))
            throw GenerationError("generate_stand: edge margin leaves no room");

        for (int i = 0; i < story.count; ++i) {
            double x = 0.0, y = 0.0;
            bool placed = false;
            for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
                x = rng.uniform(lo_x, hi_x);
                y = rng.uniform(lo_y, hi_y);
                placed = true;
                for (std::size_t j = story_first; j < trees.size(); ++j) {
                    if (std::hypot(x - trees[j].stem_x, y - trees[j].stem_y) <
                        story.min_spacing_m) {
                        placed = false;
                        break;
                    }
                }
            }
            if (!placed)
                throw GenerationError("generate_stand: could not satisfy minimum "
                                      "spacing after 200 attempts");

            double h = rng.normal(story.mean_height_m, story.height_sd_m);
            h = std::clamp(h, story.mean_height_m - 4.0 * story.height_sd_m,
                           story.mean_height_m + 4.0 * story.height_sd_m);
            if (story.height_min_m) h = std::max(h, *story.height_min_m);
            if (story.height_max_m) h = std::min(h, *story.height_max_m);
            h = std::max(h, 0.1);

            double base = story.crown_base_m ? *story.crown_base_m
                                             : story.crown_base_ratio * h;
            base = std::clamp(base, 0.0, 0.95 * h);

            double radius = story.crown_radius_m;
            if (story.crown_radius_jitter_m > 0.0)
                radius += story.crown_radius_jitter_m * (2.0 * rng.u01() - 1.0);
            radius = std::max(radius, 0.3);

            TreeSpec t;
            t.stem_x = x;
            t.stem_y = y;
            t.total_height_m = h;
            t.crown_base_m = base;
            t.crown_radius_m = radius;
            t.shape = story.shape;
            t.story = static_cast<int>(s);
            trees.push_back(t);
        }
    }
    return trees;
}

// Upper crown envelope height at horizontal distance d from the stem.
inline double envelope_height(const TreeSpec& t, double d) {
    const double span = t.total_height_m - t.crown_base_m;
    const double frac = std::min(d / t.crown_radius_m, 1.0);
    if (t.shape == CrownShape::cone) return t.crown_base_m + span * (1.0 - frac);
    // Upper half-ellipsoid: equator at the crown base plane.
    return t.crown_base_m + span * std::sqrt(std::max(0.0, 1.0 - frac * frac));
}

struct SimCloud {
    PointCloud cloud; // area = extent area; source_id set on tree returns
    std::vector<StemRecord> stems;
};

inline std::vector<StemRecord> ground_truth_stems(const std::vector<TreeSpec>& stand,
                                                  const std::string& plot_id = "synth") {
    std::vector<StemRecord> stems;
    stems.reserve(stand.size());
    for (const TreeSpec& t : stand) {
        StemRecord s;
        s.plot_id = plot_id;
        s.x = t.stem_x;
        s.y = t.stem_y;
        s.height_m = t.total_height_m;
        s.crown_class = t.story == 0 ? CrownClass::codominant : CrownClass::intermediate;
        s.live = true;
        stems.push_back(std::move(s));
    }
    return stems;
}

namespace detail {

// Coarse disc buckets so overlap queries stay cheap on large stands.
struct StoryIndex {
    double cell = 4.0;
    double min_x = 0.0, min_y = 0.0;
    int cols = 1, rows = 1;
    std::vector<std::vector<std::uint32_t>> buckets;

    void build(const StandSpec& spec, const std::vector<TreeSpec>& trees, int story) {
        double max_r = 0.0;
        for (const TreeSpec& t : trees)
            if (t.story == story) max_r = std::max(max_r, t.crown_radius_m);
        cell = std::max(1.0, max_r);
        min_x = spec.min_x;
        min_y = spec.min_y;
        cols = std::max(1, static_cast<int>(std::ceil(spec.width() / cell)));
        rows = std::max(1, static_cast<int>(std::ceil(spec.height() / cell)));
        buckets.assign(static_cast<std::size_t>(cols) * rows, {});
        for (std::uint32_t i = 0; i < trees.size(); ++i) {
            const TreeSpec& t = trees[i];
            if (t.story != story) continue;
            const int c_lo = clamp_col((t.stem_x - t.crown_radius_m - min_x) / cell);
            const int c_hi = clamp_col((t.stem_x + t.crown_radius_m - min_x) / cell);
            const int r_lo = clamp_row((t.stem_y - t.crown_radius_m - min_y) / cell);
            const int r_hi = clamp_row((t.stem_y + t.crown_radius_m - min_y) / cell);
            for (int r = r_lo; r <= r_hi; ++r)
                for (int c = c_lo; c <= c_hi; ++c)
                    buckets[static_cast<std::size_t>(r) * cols + c].push_back(i);
        }
    }

    int clamp_col(double v) const {
        return std::clamp(static_cast<int>(std::floor(v)), 0, cols - 1);
    }
    int clamp_row(double v) const {
        return std::clamp(static_cast<int>(std::floor(v)), 0, rows - 1);
    }

    bool covers(const std::vector<TreeSpec>& trees, double x, double y) const {
        const int c = clamp_col((x - min_x) / cell);
        const int r = clamp_row((y - min_y) / cell);
        for (std::uint32_t i : buckets[static_cast<std::size_t>(r) * cols + c]) {
            const TreeSpec& t = trees[i];
            if (std::hypot(x - t.stem_x, y - t.stem_y) <= t.crown_radius_m) return true;
        }
        return false;
    }
};

} // namespace detail

// Simulated LiDAR sampling over the crown envelopes: surface density is
// pulse density attenuated by transmission once per higher story whose
// crowns cover the location; ground returns fill in at the rate left after
// crossing every story above.
inline SimCloud sample_points(const std::vector<TreeSpec>& stand, const StandSpec& spec,
                              std::uint64_t seed) {
    validate(spec);
    Rng rng(seed);

    const int n_stories = static_cast<int>(spec.stories.size());
    std::vector<detail::StoryIndex> index(static_cast<std::size_t>(n_stories));
    for (int s = 0; s < n_stories; ++s) index[s].build(spec, stand, s);

    auto stories_covering = [&](double x, double y, int below_story) {
        int k = 0;
        for (int s = 0; s < below_story; ++s)
            if (index[s].covers(stand, x, y)) ++k;
        return k;
    };

    SimCloud sim;
    sim.cloud.area_m2 = spec.area();

    for (std::uint32_t ti = 0; ti < stand.size(); ++ti) {
        const TreeSpec& t = stand[ti];
        const double disc_area = std::numbers::pi * t.crown_radius_m * t.crown_radius_m;
        const long n = std::lround(disc_area * spec.pulse_density_pt_m2);
        for (long i = 0; i < n; ++i) {
            const double d = t.crown_radius_m * std::sqrt(rng.u01());
            const double theta = 2.0 * std::numbers::pi * rng.u01();
            const double x = t.stem_x + d * std::cos(theta);
            const double y = t.stem_y + d * std::sin(theta);
            const int k = stories_covering(x, y, t.story);
            const double keep = std::pow(spec.transmission, k);
            const double accept = rng.u01();
            if (accept >= keep) continue;
            Point p;
            p.x = x;
            p.y = y;
            p.z = envelope_height(t, d);
            p.source_id = ti;
            sim.cloud.points.push_back(p);
        }
    }

    const long n_ground = std::lround(spec.area() * spec.pulse_density_pt_m2);
    for (long i = 0; i < n_ground; ++i) {
        const double x = rng.uniform(spec.min_x, spec.max_x);
        const double y = rng.uniform(spec.min_y, spec.max_y);
        const int k = stories_covering(x, y, n_stories);
        const double keep = std::pow(spec.transmission, k);
        const double accept = rng.u01();
        if (accept >= keep) continue;
        Point p;
        p.x = x;
        p.y = y;
        p.z = 0.0;
        p.ground = true;
        sim.cloud.points.push_back(p);
    }

    sim.stems = ground_truth_stems(stand);
    return sim;
}

} // namespace canopy
