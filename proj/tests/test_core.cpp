#include <doctest.h>

#include <set>

#include "bu/error.hpp"
#include "bu/rng.hpp"
#include "bu/tensor.hpp"

using namespace bu;

TEST_CASE("tensor rejects a shape that disagrees with its data") {
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), InvalidInput);
    const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.rank() == 2);
    CHECK(t.at(1, 2) == 6);
    CHECK(t.all_finite());
    CHECK_FALSE(Tensor::vector({1, std::nan("")}).all_finite());
}

TEST_CASE("rng streams are reproducible and separated by name") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(Rng::derive(1, "data") == Rng::derive(1, "data"));
    CHECK(Rng::derive(1, "data") != Rng::derive(1, "init"));
    CHECK(Rng::derive(1, "data") != Rng::derive(2, "data"));
}

TEST_CASE("rng uniform draws stay in range") {
    Rng r(9);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const auto k = r.uniform_index(7);
        CHECK(k < 7);
        seen.insert(k);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("rng normal has roughly unit moments") {
    Rng r(10);
    double s = 0, s2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.05);
    CHECK(std::abs(s2 / n - 1.0) < 0.05);
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
