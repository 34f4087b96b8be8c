#include <catch2/catch_amalgamated.hpp>

#include "canopy/dem.hpp"
#include "canopy/grid_index.hpp"
#include "canopy/point_cloud.hpp"
#include "canopy/synth.hpp"

using namespace canopy;

namespace {

PointCloud cloud_of_n(std::size_t n, double area) {
    std::vector<Point> pts(n);
    return make_cloud(std::move(pts), area);
}

Point pt(double x, double y, double z, bool ground = false) {
    Point p;
    p.x = x;
    p.y = y;
    p.z = z;
    p.ground = ground;
    return p;
}

} // namespace

TEST_CASE("density and AFP") {
    SECTION("5000 points over 100 m2") {
        const DensityStats s = compute_density(cloud_of_n(5000, 100.0));
        CHECK(s.density_pt_m2 == Catch::Approx(50.0));
        CHECK(s.afp_m == Catch::Approx(0.141421).epsilon(1e-5));
    }
    SECTION("identity case") {
        const DensityStats s = compute_density(cloud_of_n(400, 400.0));
        CHECK(s.density_pt_m2 == 1.0);
        CHECK(s.afp_m == 1.0);
    }
    SECTION("100 points over 25 m2") {
        const DensityStats s = compute_density(cloud_of_n(100, 25.0));
        CHECK(s.density_pt_m2 == 4.0);
        CHECK(s.afp_m == 0.5);
    }
    SECTION("invalid inputs") {
        CHECK_THROWS_AS(compute_density(cloud_of_n(0, 10.0)), InvalidInputError);
        CHECK_THROWS_AS(compute_density(cloud_of_n(10, 0.0)), InvalidInputError);
        CHECK_THROWS_AS(compute_density(cloud_of_n(10, -4.0)), InvalidInputError);
    }
    SECTION("afp/density round trip") {
        Rng rng(7);
        for (int i = 0; i < 200; ++i) {
            const double density = std::exp(rng.uniform(-3.0, 6.0));
            const double afp = compute_afp(density);
            CHECK(afp * afp * density == Catch::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("dem rasterization and void fill") {
    SECTION("constant field fills everywhere") {
        DemRaster dem;
        dem.resize(3, 3);
        dem.set(0, 0, 300.0);
        fill_dem_voids(dem);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) CHECK(dem.at(c, r) == Catch::Approx(300.0));
    }
    SECTION("mean of points sharing a cell") {
        const DemRaster dem = rasterize_dem({pt(0.2, 0.2, 100.0), pt(0.4, 0.3, 100.0)});
        REQUIRE(dem.cols == 1);
        REQUIRE(dem.rows == 1);
        CHECK(dem.at(0, 0) == Catch::Approx(100.0));
    }
    SECTION("void between two cells becomes the neighbor mean") {
        // Cells [0.2,1.2) [1.2,2.2) [2.2,3.2]: A and C filled, B void.
        const DemRaster dem = rasterize_dem({pt(0.5, 0.5, 100.0), pt(2.9, 0.5, 200.0)});
        REQUIRE(dem.cols == 3);
        REQUIRE(dem.rows == 1);
        CHECK(dem.at(0, 0) == Catch::Approx(100.0));
        CHECK(dem.at(1, 0) == Catch::Approx(150.0)); // one fill pass, mean of A and C
        CHECK(dem.at(2, 0) == Catch::Approx(200.0));
    }
    SECTION("no ground points is an error") {
        CHECK_THROWS_AS(rasterize_dem({}), InvalidInputError);
    }
    SECTION("fill terminates on sparse random rasters") {
        Rng rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<Point> pts;
            const int n = 1 + static_cast<int>(rng.u01() * 8);
            for (int i = 0; i < n; ++i)
                pts.push_back(pt(rng.uniform(0.0, 40.0), rng.uniform(0.0, 40.0),
                                 rng.uniform(200.0, 300.0)));
            const DemRaster dem = rasterize_dem(pts);
            CHECK(dem.all_filled());
        }
    }
}

TEST_CASE("height normalization") {
    DemRaster dem;
    dem.origin_x = 0.0;
    dem.origin_y = 0.0;
    dem.cell_size = 1.0;
    dem.resize(4, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) dem.set(c, r, 300.0);

    SECTION("subtracts the ground elevation") {
        const PointCloud out =
            normalize_heights(make_cloud({pt(1.5, 1.5, 320.0)}, 16.0), dem);
        REQUIRE(out.size() == 1);
        CHECK(out.points[0].z == Catch::Approx(20.0));
    }
    SECTION("clamps below-ground returns to zero") {
        const PointCloud out =
            normalize_heights(make_cloud({pt(1.5, 1.5, 299.5)}, 16.0), dem);
        REQUIRE(out.size() == 1);
        CHECK(out.points[0].z == 0.0);
    }
    SECTION("removes ground returns") {
        const PointCloud out = normalize_heights(
            make_cloud({pt(1.5, 1.5, 301.0, true), pt(2.5, 2.5, 310.0)}, 16.0), dem);
        REQUIRE(out.size() == 1);
        CHECK(out.points[0].z == Catch::Approx(10.0));
    }
    SECTION("names the point that falls outside the DEM") {
        const PointCloud bad = make_cloud({pt(9.0, 9.0, 310.0)}, 16.0);
        CHECK_THROWS_WITH(normalize_heights(bad, dem),
                          Catch::Matchers::ContainsSubstring("(9, 9)"));
    }
    SECTION("idempotent over a zero DEM") {
        DemRaster zero;
        zero.cell_size = 1.0;
        zero.resize(4, 4);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) zero.set(c, r, 0.0);
        Rng rng(3);
        std::vector<Point> pts;
        for (int i = 0; i < 50; ++i)
            pts.push_back(pt(rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0),
                             rng.uniform(0.0, 30.0)));
        const PointCloud cloud = make_cloud(pts, 16.0);
        const PointCloud out = normalize_heights(cloud, zero);
        REQUIRE(out.size() == cloud.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            CHECK(out.points[i].z == cloud.points[i].z);
    }
}

TEST_CASE("grid binning") {
    SECTION("nearby points share a cell") {
        const GridIndex g =
            build_grid(make_cloud({pt(0.2, 0.3, 1.0), pt(0.8, 0.9, 2.0)}, 1.0), 1.0);
        CHECK(g.cell_of(0.2, 0.3) == g.cell_of(0.8, 0.9));
        CHECK(g.cell_points(0, 0).size() == 2);
    }
    SECTION("half-open cells: max edge point gets the floor cell") {
        const GridIndex g =
            build_grid(make_cloud({pt(0.0, 0.0, 1.0), pt(1.0, 0.0, 2.0)}, 1.0), 1.0);
        const auto [c, r] = g.cell_of(1.0, 0.0);
        CHECK(c == 1);
        CHECK(r == 0);
        CHECK(g.cell_points(1, 0).size() == 1);
    }
    SECTION("empty cloud gives an empty grid") {
        const GridIndex g = build_grid(PointCloud{}, 1.0);
        CHECK(g.empty());
    }
    SECTION("non-positive width is an error") {
        CHECK_THROWS_AS(build_grid(cloud_of_n(3, 1.0), 0.0), InvalidInputError);
    }
    SECTION("cells partition the cloud") {
        Rng rng(23);
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<Point> pts;
            const int n = 1 + static_cast<int>(rng.u01() * 500);
            for (int i = 0; i < n; ++i)
                pts.push_back(pt(rng.uniform(0.0, 20.0), rng.uniform(0.0, 20.0),
                                 rng.uniform(0.0, 30.0)));
            const PointCloud cloud = make_cloud(pts, 400.0);
            const GridIndex g = build_grid(cloud, 0.3 + rng.u01());
            std::vector<bool> seen(cloud.size(), false);
            std::size_t total = 0;
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c)
                    for (std::uint32_t id : g.cell_points(c, r)) {
                        CHECK_FALSE(seen[id]);
                        seen[id] = true;
                        ++total;
                    }
            CHECK(total == cloud.size());
        }
    }
}
