#include <doctest.h>

#include <cmath>
#include <set>

#include "doetree/rng.hpp"

using namespace doetree;

TEST_CASE("philox block function is deterministic and key-sensitive") {
    std::array<std::uint32_t, 4> ctr = {1, 2, 3, 4};
    auto a = philox4x32(ctr, 42);
    auto b = philox4x32(ctr, 42);
    CHECK(a == b);
    auto c = philox4x32(ctr, 43);
    CHECK(a != c);
    ctr[0] = 2;
    CHECK(philox4x32(ctr, 42) != a);
}

TEST_CASE("streams replay and substreams diverge") {
    Rng r1(7, 0), r2(7, 0);
    for (int i = 0; i < 100; ++i) CHECK(r1.next_u64() == r2.next_u64());

    Rng base(7, 0);
    Rng s1 = base.substream(1);
    Rng s2 = base.substream(2);
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (s1.next_u32() == s2.next_u32()) ++same;
    CHECK(same == 0);
}

TEST_CASE("uniform and normal moments") {
    Rng rng(123, 9);
    const int n = 200000;
    double su = 0, su2 = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        su += u;
        su2 += u * u;
        double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(std::fabs(su / n - 0.5) < 0.005);
    CHECK(std::fabs(su2 / n - 1.0 / 3.0) < 0.005);
    CHECK(std::fabs(sn / n) < 0.01);
    CHECK(std::fabs(sn2 / n - 1.0) < 0.02);
}

TEST_CASE("chi-squared draws match the target mean for small and large dof") {
    Rng rng(5, 2);
    for (int dof : {3, 80, 400}) {
        double s = 0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) s += rng.chi_squared(dof);
        double mean = s / n;
        CHECK(std::fabs(mean - dof) < 5.0 * std::sqrt(2.0 * dof / n));
    }
}

TEST_CASE("uniform_below is unbiased over a small range") {
    Rng rng(11, 3);
    int counts[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 50000; ++i) ++counts[rng.uniform_below(5)];
    for (int c : counts) CHECK(std::fabs(c / 50000.0 - 0.2) < 0.01);
}
