// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "twotone/rng.hpp"

using namespace twotone;

TEST_CASE("splitmix64 reference vectors")
{
    Rng a(0);
    CHECK(a.next() == 0xE220A8397B1DCDAFull);
    CHECK(a.next() == 0x6E789E6AA1B965F4ull);
    CHECK(a.next() == 0x06C45D188009454Full);

    Rng b(1);
    CHECK(b.next() == 0x910A2DEC89025CC1ull);
    CHECK(b.next() == 0xBEEB8DA1658EEC67ull);
    CHECK(b.next() == 0xF893A2EEFB32555Eull);
}

TEST_CASE("uniform uses the top 53 bits")
{
    Rng r(0);
    CHECK(r.uniform() == 0.88331080821364261);
}

TEST_CASE("fnv1a64 reference vectors")
{
    CHECK(fnv1a64("") == 0xCBF29CE484222325ull);
    CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8Cull);
    CHECK(fnv1a64("foobar") == 0x85944171F73967E8ull);
}

TEST_CASE("substreams depend on the seed only")
{
    Rng r(42);
    const auto fresh = r.substream("x").next();
    r.next();
    r.next();
    CHECK(r.substream("x").next() == fresh);
    CHECK(r.substream("y").next() != fresh);
    CHECK(Rng(42 ^ fnv1a64("x")).next() == fresh);
}

TEST_CASE("gaussian pairs have unit variance")
{
    Rng r(7);
    double s1 = 0.0, s2 = 0.0, cross = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto [g1, g2] = r.gaussian_pair();
        s1 += g1 * g1;
        s2 += g2 * g2;
        cross += g1 * g2;
    }
    CHECK(s1 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(cross / n) < 0.01);
}
