#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "loewner/region.hpp"
#include "loewner/rng.hpp"

using namespace loewner;

TEST_CASE("hyperbolic geodesics are orthogonal circle arcs", "[region]") {
    cplx p = std::polar(1.0, 0.3), q = std::polar(1.0, 2.0);
    CurvePath g = hyperbolic_geodesic(p, q, 64);
    REQUIRE(g.pts.size() == 65);
    CHECK(std::abs(g.pts.front() - p) < 1e-14);
    CHECK(std::abs(g.pts.back() - q) < 1e-14);

    cplx c;
    double r;
    REQUIRE(geodesic_circle(p, q, c, r));
    // orthogonality to the unit circle: |c|^2 = 1 + r^2
    CHECK(std::norm(c) == Catch::Approx(1.0 + r * r).epsilon(1e-12));
    for (const cplx& z : g.pts) {
        CHECK(std::abs(std::abs(z - c) - r) < 1e-12);
        CHECK(std::abs(z) < 1.0 + 1e-12); // arc stays in the closed disk
    }
    // interior points are strictly inside
    CHECK(std::abs(g.pts[32]) < 1.0 - 1e-3);

    // antipodal endpoints degenerate to a diameter
    CurvePath d = hyperbolic_geodesic(cplx(1, 0), cplx(-1, 0), 16);
    for (const cplx& z : d.pts) CHECK(std::abs(z.imag()) < 1e-14);
}

TEST_CASE("geodesic endpoint neighborhood membership", "[region]") {
    double eps = 0.3;
    Region A = chordal_geodesic_neighborhood(eps, 256, 0.05);

    // the horizontal diameter lies well inside
    CHECK(A.contains_point(cplx(0.0, 0.0), 0.0));
    CHECK(A.contains_point(cplx(0.5, 0.0), 0.0));
    CHECK(A.contains_point(cplx(-0.5, 0.0), 0.0));
    // far above / below the geodesics is outside
    CHECK_FALSE(A.contains_point(cplx(0.0, 0.9), 0.0));
    CHECK_FALSE(A.contains_point(cplx(0.0, -0.9), 0.0));
    // outside the disk is never inside
    CHECK_FALSE(A.contains_point(cplx(1.5, 0.0), 0.0));
    // marked endpoints rescue points in the tolerance disks
    CHECK(A.contains_point(cplx(0.99, 0.04), 0.0));
    CHECK(A.contains_point(cplx(-0.99, -0.04), 0.0));

    // clearance shrinks the region
    cplx near_edge(0.0, 0.0);
    double d = A.boundary_distance(near_edge);
    CHECK(A.contains_point(near_edge, 0.5 * d));
    CHECK_FALSE(A.contains_point(near_edge, 2.0 * d));
}

TEST_CASE("radial sector neighborhood membership", "[region]") {
    double eps = 0.3;
    Region A = radial_semicircle_neighborhood(eps, 256, 0.05);
    CHECK(A.contains_point(cplx(0.5, 0.0), 0.0));
    CHECK(A.contains_point(cplx(0.5, 0.25), 0.0));
    CHECK_FALSE(A.contains_point(cplx(0.5, 0.45), 0.0));
    CHECK_FALSE(A.contains_point(cplx(-0.5, 0.0), 0.0)); // behind the center disk
    CHECK(A.contains_point(cplx(0.0, 0.0), 0.0));        // inside the |z|<eps disk
    CHECK(A.contains_point(cplx(-0.2, 0.1), 0.0));       // still inside |z|<eps
}

TEST_CASE("tube regions follow their core", "[region]") {
    CurvePath core;
    core.chart = Chart::D;
    for (int k = 0; k <= 50; ++k) core.pts.push_back(cplx(-0.8 + 1.6 * k / 50.0, 0.0));
    Region tube = tube_neighborhood(core, 0.1, 0.02);
    CHECK(tube.is_tube());
    CHECK(tube.contains_point(cplx(0.0, 0.05), 0.0));
    CHECK_FALSE(tube.contains_point(cplx(0.0, 0.2), 0.0));
    CHECK(tube.contains_point(cplx(0.3, -0.09), 0.0));
    CHECK_FALSE(tube.contains_point(cplx(0.3, -0.09), 0.05));
}

TEST_CASE("raster accelerator agrees with exact membership", "[region]") {
    RngStream rng(2024);
    for (double clearance : {0.0, 0.02}) {
        Region A = chordal_geodesic_neighborhood(0.25, 256, 0.05);
        RegionRaster raster(A, clearance, 256);
        for (int i = 0; i < 4000; ++i) {
            cplx z(2.4 * rng.next_double() - 1.2, 2.4 * rng.next_double() - 1.2);
            bool exact = A.contains_point(z, clearance);
            bool fast = raster.contains(z);
            REQUIRE(exact == fast);
        }
        Region B = radial_semicircle_neighborhood(0.25, 256, 0.05);
        RegionRaster rb(B, clearance, 256);
        for (int i = 0; i < 4000; ++i) {
            cplx z(2.4 * rng.next_double() - 1.2, 2.4 * rng.next_double() - 1.2);
            REQUIRE(B.contains_point(z, clearance) == rb.contains(z));
        }
    }
}

TEST_CASE("polyline simplicity and intersection predicates", "[region]") {
    std::vector<cplx> spiral;
    for (int k = 0; k <= 200; ++k) {
        double s = k / 200.0;
        spiral.push_back(std::polar(0.2 + 0.6 * s, 6.0 * s));
    }
    CHECK(polyline_is_simple(spiral));

    std::vector<cplx> eight{cplx(0, 0), cplx(1, 1), cplx(1, 0), cplx(0, 1)};
    CHECK_FALSE(polyline_is_simple(eight));

    CHECK(segments_intersect(cplx(0, 0), cplx(1, 1), cplx(0, 1), cplx(1, 0)));
    CHECK_FALSE(segments_intersect(cplx(0, 0), cplx(1, 0), cplx(0, 1), cplx(1, 1)));
    // collinear overlap counts as intersection
    CHECK(segments_intersect(cplx(0, 0), cplx(2, 0), cplx(1, 0), cplx(3, 0)));

    std::vector<cplx> a{cplx(0, 0), cplx(1, 0)};
    std::vector<cplx> b{cplx(0.5, 0.05), cplx(1, 1)};
    CHECK(polylines_touch(a, b, 0.1));
    CHECK_FALSE(polylines_touch(a, b, 0.01));
}

TEST_CASE("region json round structure sanity", "[region]") {
    Region full = full_disk_region();
    CHECK(full.contains_point(cplx(0.0, 0.0), 0.0));
    CHECK(full.contains_point(cplx(0.9, 0.0), 0.0));
    CHECK_FALSE(full.contains_point(cplx(1.1, 0.0), 0.0));
    CHECK_FALSE(full.contains_point(cplx(0.999, 0.0), 0.01));

    CurvePath c;
    c.chart = Chart::D;
    c.pts = {cplx(0.9, 0.0), cplx(0.0, 0.0), cplx(-0.5, 0.2)};
    CHECK(region_contains(full, c, 0.0));
    c.pts.push_back(cplx(0.0, 1.05));
    CHECK_FALSE(region_contains(full, c, 0.0));
}
