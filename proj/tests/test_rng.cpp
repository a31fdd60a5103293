#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "raid/math.hpp"
#include "raid/rng.hpp"

using namespace raid;

TEST_CASE("rng streams are reproducible and seed-sensitive") {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 64; ++i) {
        const uint64_t x = a.next();
        CHECK(x == b.next());
        if (x != c.next()) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("derive_seed is stable and key-sensitive") {
    const uint64_t s1 = derive_seed(7, "toy/f1/rep003|data");
    CHECK(s1 == derive_seed(7, "toy/f1/rep003|data"));
    CHECK(s1 != derive_seed(7, "toy/f1/rep003|mcmc"));
    CHECK(s1 != derive_seed(8, "toy/f1/rep003|data"));
}

TEST_CASE("uniform and below stay in range with sane moments") {
    Rng r(1);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == Catch::Approx(0.5).margin(0.005));

    std::array<int, 7> hits{};
    for (int i = 0; i < 70000; ++i) {
        const uint64_t k = r.below(7);
        REQUIRE(k < 7);
        ++hits[k];
    }
    for (int h : hits) CHECK(std::abs(h - 10000) < 400);
}

TEST_CASE("normal draws match first two moments") {
    Rng r(5);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        s += z;
        s2 += z * z;
    }
    const double mean = s / n;
    CHECK(mean == Catch::Approx(0.0).margin(0.01));
    CHECK(s2 / n - mean * mean == Catch::Approx(1.0).margin(0.02));
}

namespace {
double trunc_mean(double mu, double sigma, double lo, double hi) {
    const double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
    // complement form keeps the far-tail subtraction well conditioned
    const double za = 0.5 * std::erfc(a / std::sqrt(2.0));
    const double zb = 0.5 * std::erfc(b / std::sqrt(2.0));
    const double z = za - zb;
    const double pa = std::exp(math::normal_logpdf(a, 0.0, 1.0));
    const double pb = std::exp(math::normal_logpdf(b, 0.0, 1.0));
    return mu + sigma * (pa - pb) / z;
}
}  // namespace

TEST_CASE("truncated normal respects bounds and interval moments") {
    Rng r(11);
    const double mu = 0.4, sigma = 1.3, lo = -0.5, hi = 1.2;
    const int n = 200000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.truncated_normal(mu, sigma, lo, hi);
        REQUIRE(x >= lo);
        REQUIRE(x <= hi);
        s += x;
    }
    CHECK(s / n == Catch::Approx(trunc_mean(mu, sigma, lo, hi)).margin(0.005));
}

TEST_CASE("truncated normal far tail uses a working rejection path") {
    Rng r(12);
    const int n = 50000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.truncated_normal(0.0, 1.0, 8.0, 9.0);
        REQUIRE(x >= 8.0);
        REQUIRE(x <= 9.0);
        s += x;
    }
    CHECK(s / n == Catch::Approx(trunc_mean(0.0, 1.0, 8.0, 9.0)).margin(0.005));
}

TEST_CASE("pick_log_weights matches softmax frequencies and shift invariance") {
    Rng r(21);
    std::vector<double> logw{std::log(0.2), std::log(0.5), std::log(0.3)};
    std::array<int, 3> hits{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++hits[r.pick_log_weights(logw)];
    CHECK(hits[0] / double(n) == Catch::Approx(0.2).margin(0.01));
    CHECK(hits[1] / double(n) == Catch::Approx(0.5).margin(0.01));
    CHECK(hits[2] / double(n) == Catch::Approx(0.3).margin(0.01));

    Rng r1(99), r2(99);
    std::vector<double> shifted = logw;
    for (double& w : shifted) w += 123.0;
    for (int i = 0; i < 2000; ++i) CHECK(r1.pick_log_weights(logw) == r2.pick_log_weights(shifted));
}

TEST_CASE("shuffle produces uniform permutations") {
    Rng r(31);
    std::map<std::array<int, 3>, int> counts;
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        std::array<int, 3> v{0, 1, 2};
        std::vector<int> tmp(v.begin(), v.end());
        r.shuffle(tmp);
        std::copy(tmp.begin(), tmp.end(), v.begin());
        ++counts[v];
    }
    REQUIRE(counts.size() == 6);
    for (const auto& [perm, c] : counts)
        CHECK(c / double(n) == Catch::Approx(1.0 / 6.0).margin(0.01));
}
