#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "loewner/rng.hpp"

using namespace loewner;

TEST_CASE("rng is deterministic and splittable", "[rng]") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    RngStream root(7);
    RngStream c1 = root.child("alpha");
    RngStream c2 = root.child("beta");
    RngStream c3 = root.child(3);
    std::set<std::uint64_t> firsts{c1.next_u64(), c2.next_u64(), c3.next_u64(),
                                   root.next_u64()};
    REQUIRE(firsts.size() == 4); // streams do not collide on the first draw

    // children are a pure function of the parent key, not of its position
    RngStream root2(7);
    root2.next_u64();
    root2.next_u64();
    RngStream c1b = root2.child("alpha");
    REQUIRE(c1b.next_u64() == RngStream(7).child("alpha").next_u64());
}

TEST_CASE("uniform and gaussian draws look sane", "[rng]") {
    RngStream r(123);
    const int n = 200000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        double u = r.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    REQUIRE(std::abs(mean - 0.5) < 4.0 / std::sqrt(12.0 * n));
    REQUIRE(std::abs(var - 1.0 / 12.0) < 0.002);

    RngStream g(321);
    sum = sum2 = 0;
    for (int i = 0; i < n; ++i) {
        double x = g.next_gaussian();
        sum += x;
        sum2 += x * x;
    }
    mean = sum / n;
    var = sum2 / n - mean * mean;
    REQUIRE(std::abs(mean) < 4.0 / std::sqrt(double(n)));
    REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("gaussian consumes exactly two uniforms", "[rng]") {
    RngStream a(99), b(99);
    a.next_gaussian();
    b.next_u64();
    b.next_u64();
    REQUIRE(a.next_u64() == b.next_u64());
}
