#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "canopy/histogram.hpp"
#include "canopy/synth.hpp"

using namespace canopy;

namespace {

// Independent oracle: maximal runs of strictly negative central second
// difference over the smoothed values, as plain index pairs.
std::vector<std::pair<int, int>> second_difference_runs(const SmoothedHistogram& s) {
    std::vector<std::pair<int, int>> runs;
    const int m = static_cast<int>(s.values.size());
    int start = -1;
    for (int i = 1; i + 1 < m; ++i) {
        const double d2 = s.values[i - 1] - 2.0 * s.values[i] + s.values[i + 1];
        if (d2 < 0.0) {
            if (start < 0) start = i;
        } else if (start >= 0) {
            runs.push_back({s.first_bin + start, s.first_bin + i - 1});
            start = -1;
        }
    }
    if (start >= 0) runs.push_back({s.first_bin + start, s.first_bin + m - 2});
    return runs;
}

} // namespace

TEST_CASE("height histogram binning") {
    SECTION("low heights land in bin zero") {
        const HeightHistogram h = build_height_histogram({0.1, 0.2});
        REQUIRE(h.counts.size() == 1);
        CHECK(h.counts[0] == 2);
    }
    SECTION("10 m lands in bin 40") {
        const HeightHistogram h = build_height_histogram({10.0});
        REQUIRE(h.counts.size() == 41);
        CHECK(h.counts[40] == 1);
    }
    SECTION("empty input gives an empty histogram") {
        CHECK(build_height_histogram({}).counts.empty());
    }
    SECTION("negative height is an error") {
        CHECK_THROWS_AS(build_height_histogram({-0.5}), InvalidInputError);
    }
}

TEST_CASE("gaussian smoothing") {
    SECTION("kernel is normalized") {
        const std::vector<double> k = gaussian_kernel(20.0);
        double sum = 0.0;
        for (double v : k) sum += v;
        CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
        CHECK(k.size() == 161); // +-4 sigma at sigma = 20 bins
    }
    SECTION("constant interior is unchanged") {
        HeightHistogram h;
        h.counts.assign(200, 5);
        const SmoothedHistogram s = gaussian_smooth(h, 5.0);
        // Bin 100 is more than a kernel radius from both ends.
        CHECK(s.value_at_bin(100) == Catch::Approx(5.0).epsilon(1e-6));
    }
    SECTION("unit impulse reproduces the kernel peak") {
        HeightHistogram h;
        h.counts.assign(1, 1);
        const SmoothedHistogram s = gaussian_smooth(h, 5.0);
        CHECK(s.value_at_bin(0) == Catch::Approx(0.019947).margin(2e-5));
        CHECK(s.first_bin == -80);
    }
    SECTION("empty histogram smooths to empty") {
        CHECK(gaussian_smooth(HeightHistogram{}, 5.0).values.empty());
    }
    SECTION("mass is conserved including the padded tails") {
        Rng rng(5);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> heights;
            const int n = 1 + static_cast<int>(rng.u01() * 400);
            for (int i = 0; i < n; ++i) heights.push_back(rng.uniform(0.0, 35.0));
            const HeightHistogram h = build_height_histogram(heights);
            const SmoothedHistogram s = gaussian_smooth(h, 5.0);
            CHECK(s.total_mass() ==
                  Catch::Approx(static_cast<double>(h.total())).epsilon(1e-6));
        }
    }
}

TEST_CASE("salient curves") {
    SECTION("a single cohort yields one curve containing its peak") {
        Rng rng(17);
        std::vector<double> heights;
        for (int i = 0; i < 500; ++i) heights.push_back(20.0 + rng.normal(0.0, 1.5));
        for (double& h : heights) h = std::max(h, 0.0);
        const SmoothedHistogram s = gaussian_smooth(build_height_histogram(heights));
        const std::vector<SalientCurve> curves = find_salient_curves(s);
        REQUIRE(curves.size() == 1);
        CHECK(curves[0].start_bin <= 80); // bin of 20 m
        CHECK(curves[0].end_bin >= 80);
    }
    SECTION("two cohorts 15 m apart yield two curves") {
        Rng rng(29);
        std::vector<double> heights;
        for (int i = 0; i < 2000; ++i) {
            heights.push_back(std::max(0.0, 10.0 + rng.normal(0.0, 2.0)));
            heights.push_back(std::max(0.0, 25.0 + rng.normal(0.0, 2.0)));
        }
        const SmoothedHistogram s = gaussian_smooth(build_height_histogram(heights));
        const std::vector<SalientCurve> curves = find_salient_curves(s);
        REQUIRE(curves.size() == 2);
        // Ordered top-down; each curve contains its cohort's mode bin.
        CHECK(curves[0].start_bin <= 100);
        CHECK(curves[0].end_bin >= 100);
        CHECK(curves[1].start_bin <= 40);
        CHECK(curves[1].end_bin >= 40);

        // Against the brute-force run scan (mass filter off).
        const std::vector<SalientCurve> all = find_salient_curves(s, 0.0);
        const auto runs = second_difference_runs(s);
        REQUIRE(all.size() == runs.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            const auto it =
                std::find_if(runs.begin(), runs.end(), [&](const auto& r) {
                    return r.first == all[i].start_bin && r.second == all[i].end_bin;
                });
            CHECK(it != runs.end());
        }
    }
    SECTION("a linear ramp has no curvature") {
        SmoothedHistogram s;
        s.values.resize(50);
        for (std::size_t i = 0; i < s.values.size(); ++i)
            s.values[i] = 1.0 + 0.5 * static_cast<double>(i);
        CHECK(find_salient_curves(s, 0.0).empty());
    }
    SECTION("every strict local maximum lies inside a curve") {
        Rng rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> heights;
            const int cohorts = 1 + static_cast<int>(rng.u01() * 3);
            for (int c = 0; c < cohorts; ++c) {
                const double mean = rng.uniform(5.0, 30.0);
                for (int i = 0; i < 300; ++i)
                    heights.push_back(std::max(0.0, mean + rng.normal(0.0, 2.0)));
            }
            const SmoothedHistogram s = gaussian_smooth(build_height_histogram(heights));
            const std::vector<SalientCurve> curves = find_salient_curves(s, 0.0);
            for (std::size_t i = 1; i + 1 < s.values.size(); ++i) {
                if (!(s.values[i] > s.values[i - 1] && s.values[i] > s.values[i + 1]))
                    continue;
                if (!(s.values[i] > 0.0)) continue;
                const int bin = s.first_bin + static_cast<int>(i);
                bool contained = false;
                for (const SalientCurve& c : curves)
                    contained |= (c.start_bin <= bin && bin <= c.end_bin);
                CHECK(contained);
            }
        }
    }
}

TEST_CASE("cell threshold from the top two curves") {
    SECTION("midpoint of the gap") {
        SalientCurve top;
        top.start_bin = 80; // lower edge 20 m
        top.end_bin = 119;
        SalientCurve second;
        second.start_bin = 32;
        second.end_bin = 63; // upper edge 16 m
        const auto t = cell_threshold({top, second});
        REQUIRE(t.has_value());
        CHECK(*t == Catch::Approx(18.0));
    }
    SECTION("degenerate zero-width gap") {
        SalientCurve top;
        top.start_bin = 48; // lower edge 12 m
        top.end_bin = 90;
        SalientCurve second;
        second.start_bin = 10;
        second.end_bin = 47; // upper edge 12 m
        const auto t = cell_threshold({top, second});
        REQUIRE(t.has_value());
        CHECK(*t == Catch::Approx(12.0));
    }
    SECTION("fewer than two curves means take-all") {
        SalientCurve only;
        only.start_bin = 10;
        only.end_bin = 30;
        CHECK_FALSE(cell_threshold({only}).has_value());
        CHECK_FALSE(cell_threshold({}).has_value());
    }
}
