#include <doctest.h>

#include "oracles.hpp"
#include "tetml/geometry.hpp"
#include "tetml/rng.hpp"

using namespace tetml;

namespace {

std::array<Vec3, 4> random_tet(Rng& rng) {
    for (;;) {
        std::array<Vec3, 4> v;
        for (auto& p : v) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (std::abs(tet_volume(v)) > 1e-3) return v;
    }
}

} // namespace

TEST_CASE("volume of the reference simplex is 1/6") {
    std::array<Vec3, 4> v = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    CHECK(tet_volume(v) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    std::swap(v[2], v[3]);
    CHECK(tet_volume(v) == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("diameter is the longest edge") {
    std::array<Vec3, 4> v = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    CHECK(tet_diameter(v) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("triangle area") {
    CHECK(triangle_area({0, 0, 0}, {1, 0, 0}, {0, 1, 0}) == doctest::Approx(0.5));
    CHECK(triangle_area({0, 0, 0}, {2, 0, 0}, {0, 0, 3}) == doctest::Approx(3.0));
}

TEST_CASE("barycentric coordinates reproduce corners and sum to one") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto v = random_tet(rng);
        for (int i = 0; i < 4; ++i) {
            auto lam = barycentric(v, v[(size_t)i]);
            for (int k = 0; k < 4; ++k)
                CHECK(lam[(size_t)k] == doctest::Approx(i == k ? 1.0 : 0.0).epsilon(1e-9));
        }
        Vec3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        auto lam = barycentric(v, p);
        CHECK(lam[0] + lam[1] + lam[2] + lam[3] == doctest::Approx(1.0).epsilon(1e-10));
        // barycentric interpolation of the coordinates gives the point back
        Vec3 q = v[0] * lam[0] + v[1] * lam[1] + v[2] * lam[2] + v[3] * lam[3];
        CHECK(norm(q - p) < 1e-9);
    }
}

TEST_CASE("point containment") {
    std::array<Vec3, 4> v = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    CHECK(point_in_tet(v, {0.25, 0.25, 0.25}));
    CHECK(point_in_tet(v, {0, 0, 0}));                 // corner is inside the closure
    CHECK(point_in_tet(v, {0.5, 0.5, 0}));             // face point
    CHECK_FALSE(point_in_tet(v, {0.5, 0.5, 0.5}));     // outside the slanted face
    CHECK_FALSE(point_in_tet(v, {-0.1, 0.2, 0.2}));
}

TEST_CASE("shape ratio is scale invariant and positive") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto v = random_tet(rng);
        double r = shape_ratio(v);
        CHECK(r > 0);
        std::array<Vec3, 4> w;
        for (int i = 0; i < 4; ++i) w[(size_t)i] = v[(size_t)i] * 3.7;
        CHECK(shape_ratio(w) == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("quadrature oracle: exact volume and linear moments") {
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        auto v = random_tet(rng);
        double vol = std::abs(tet_volume(v));
        CHECK(oracle::integrate_tet(v, [](const Vec3&) { return 1.0; }) ==
              doctest::Approx(vol).epsilon(1e-13));
        // linear integrand: integral equals volume times the centroid value
        Vec3 cen = (v[0] + v[1] + v[2] + v[3]) * 0.25;
        auto lin = [](const Vec3& p) { return 2 * p.x - 3 * p.y + 0.5 * p.z + 1; };
        CHECK(oracle::integrate_tet(v, lin) == doctest::Approx(vol * lin(cen)).epsilon(1e-12));
    }
}
