#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "mrms/representations.hpp"

using namespace mrms;
using Catch::Approx;

namespace {

std::vector<double> random_series(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = dist(rng);
    return x;
}

}  // namespace

TEST_CASE("z_normalize basics") {
    SECTION("closed form for [1,2,3,4]") {
        auto z = z_normalize({1, 2, 3, 4});
        REQUIRE(z[0] == Approx(-1.3416407865).margin(1e-6));
        REQUIRE(z[1] == Approx(-0.4472135955).margin(1e-6));
        REQUIRE(z[2] == Approx(0.4472135955).margin(1e-6));
        REQUIRE(z[3] == Approx(1.3416407865).margin(1e-6));
        double mean = 0.0, var = 0.0;
        for (double v : z) mean += v;
        mean /= 4.0;
        for (double v : z) var += (v - mean) * (v - mean);
        var /= 4.0;
        REQUIRE(mean == Approx(0.0).margin(1e-12));
        REQUIRE(var == Approx(1.0).margin(1e-12));
    }
    SECTION("zero-variance guard") {
        auto z = z_normalize({5, 5, 5, 5});
        for (double v : z) REQUIRE(v == 0.0);
    }
    SECTION("idempotent on already normalized input") {
        auto z1 = z_normalize({0.3, -1.2, 2.0, 0.7, -0.5});
        auto z2 = z_normalize(z1);
        for (std::size_t i = 0; i < z1.size(); ++i) REQUIRE(z2[i] == Approx(z1[i]).margin(1e-12));
    }
    SECTION("non-finite input rejected") {
        REQUIRE_THROWS_AS(z_normalize({1.0, std::nan(""), 2.0}), std::invalid_argument);
    }
}

TEST_CASE("derivative") {
    SECTION("forward difference with edge replication") {
        auto d = derivative({1, 2, 4, 7}, 1);
        REQUIRE(d == std::vector<double>{1, 2, 3, 3});
    }
    SECTION("constant -> zeros") {
        auto d = derivative({3, 3, 3, 3, 3}, 1);
        for (double v : d) REQUIRE(v == 0.0);
    }
    SECTION("linear ramp, order 2 -> zeros") {
        auto d = derivative({0, 1, 2, 3, 4, 5}, 2);
        for (double v : d) REQUIRE(v == 0.0);
    }
    SECTION("order 1 twice equals order 2 exactly") {
        std::mt19937_64 rng(7);
        auto x = random_series(40, rng);
        auto twice = derivative(derivative(x, 1), 1);
        auto second = derivative(x, 2);
        REQUIRE(twice == second);
    }
    SECTION("invalid order rejected") {
        REQUIRE_THROWS_AS(derivative({1, 2, 3}, 3), std::invalid_argument);
    }
}

TEST_CASE("fft_magnitude") {
    SECTION("pure cosine has a single peak of L/2") {
        const std::size_t L = 32;
        std::vector<double> x(L);
        for (std::size_t t = 0; t < L; ++t)
            x[t] = std::cos(2.0 * M_PI * 3.0 * static_cast<double>(t) / static_cast<double>(L));
        auto mag = fft_magnitude(x);
        REQUIRE(mag[3] == Approx(16.0).margin(1e-9));
        for (std::size_t k = 0; k <= L / 2; ++k)
            if (k != 3) REQUIRE(std::abs(mag[k]) < 1e-9);
        for (std::size_t k = L / 2 + 1; k < L; ++k) REQUIRE(mag[k] == 0.0);
    }
    SECTION("zero in, zero out") {
        auto mag = fft_magnitude(std::vector<double>(16, 0.0));
        for (double v : mag) REQUIRE(v == 0.0);
    }
    SECTION("matches the direct-sum oracle, odd lengths included") {
        std::mt19937_64 rng(11);
        for (std::size_t L : {8u, 33u, 128u}) {
            for (int rep = 0; rep < 10; ++rep) {
                auto x = random_series(L, rng);
                REQUIRE(oracle::max_rel_err(fft_magnitude(x), oracle::naive_fft_magnitude(x)) <
                        1e-9);
            }
        }
    }
}

TEST_CASE("dct") {
    SECTION("constant series concentrates in X[0]") {
        auto c = dct({1, 1, 1, 1});
        REQUIRE(c[0] == Approx(2.0).margin(1e-12));
        for (std::size_t k = 1; k < 4; ++k) REQUIRE(std::abs(c[k]) < 1e-12);
    }
    SECTION("zero in, zero out") {
        auto c = dct(std::vector<double>(12, 0.0));
        for (double v : c) REQUIRE(std::abs(v) < 1e-15);
    }
    SECTION("matches the direct cosine-sum oracle") {
        std::mt19937_64 rng(13);
        for (std::size_t L : {8u, 33u, 128u}) {
            for (int rep = 0; rep < 10; ++rep) {
                auto x = random_series(L, rng);
                REQUIRE(oracle::max_rel_err(dct(x), oracle::naive_dct(x)) < 1e-9);
            }
        }
    }
}

TEST_CASE("acf") {
    SECTION("lag zero is 1 for non-degenerate input") {
        auto r = acf(z_normalize({0.4, -1.0, 2.2, 0.3, -0.9, 1.4}));
        REQUIRE(r[0] == Approx(1.0).margin(1e-12));
    }
    SECTION("alternating series") {
        auto r = acf({1, -1, 1, -1});
        REQUIRE(r[1] == Approx(-0.75).margin(1e-12));
    }
    SECTION("zero-variance guard") {
        auto r = acf(std::vector<double>(8, 0.0));
        for (double v : r) REQUIRE(v == 0.0);
    }
    SECTION("bounded by [-1, 1] on z-normalized input") {
        std::mt19937_64 rng(17);
        for (int rep = 0; rep < 20; ++rep) {
            auto r = acf(z_normalize(random_series(50, rng)));
            for (double v : r) {
                REQUIRE(v <= 1.0 + 1e-12);
                REQUIRE(v >= -1.0 - 1e-12);
            }
        }
    }
}

TEST_CASE("hilbert_magnitude") {
    SECTION("unit cosine envelope is 1") {
        const std::size_t L = 64;
        std::vector<double> x(L);
        for (std::size_t t = 0; t < L; ++t)
            x[t] = std::cos(2.0 * M_PI * 4.0 * static_cast<double>(t) / static_cast<double>(L));
        auto env = hilbert_magnitude(x);
        for (std::size_t t = 4; t + 4 < L; ++t) {
            REQUIRE(env[t] >= 0.99);
            REQUIRE(env[t] <= 1.01);
        }
    }
    SECTION("zero in, zero out") {
        auto env = hilbert_magnitude(std::vector<double>(16, 0.0));
        for (double v : env) REQUIRE(v == 0.0);
    }
    SECTION("matches the direct analytic-signal oracle") {
        std::mt19937_64 rng(19);
        for (std::size_t L : {8u, 33u, 128u}) {
            for (int rep = 0; rep < 10; ++rep) {
                auto x = random_series(L, rng);
                REQUIRE(oracle::max_rel_err(hilbert_magnitude(x),
                                            oracle::naive_hilbert_magnitude(x)) < 1e-9);
            }
        }
    }
}

TEST_CASE("dwt_approx") {
    SECTION("constant series") {
        auto a = dwt_approx({1, 1, 1, 1});
        const double s = std::sqrt(2.0);
        for (double v : a) REQUIRE(v == Approx(s).margin(1e-12));
    }
    SECTION("averaging removes alternation") {
        auto a = dwt_approx({2, 0, 2, 0});
        const double s = std::sqrt(2.0);
        for (double v : a) REQUIRE(v == Approx(s).margin(1e-12));
    }
    SECTION("zero in, zero out") {
        auto a = dwt_approx(std::vector<double>(10, 0.0));
        for (double v : a) REQUIRE(v == 0.0);
    }
    SECTION("odd length keeps length via edge replication") {
        auto a = dwt_approx({1, 2, 3, 4, 5});
        REQUIRE(a.size() == 5);
        REQUIRE(a[4] == Approx(5.0 * std::sqrt(2.0)).margin(1e-12));
    }
}

TEST_CASE("all transforms preserve length") {
    std::mt19937_64 rng(23);
    for (std::size_t L : {8u, 9u, 33u, 100u}) {
        auto x = z_normalize(random_series(L, rng));
        for (RepKind kind : kAllRepKinds) REQUIRE(compute_representation(x, kind).size() == L);
    }
}

TEST_CASE("build_stack") {
    std::mt19937_64 rng(29);
    Series s;
    s.values = random_series(40, rng);
    s.label = 0;

    SECTION("TIME-only stack equals the z-normalized input") {
        auto stack = build_stack(s, {RepKind::TIME});
        auto z = z_normalize(s.values);
        REQUIRE(stack.rows() == 1);
        for (std::size_t t = 0; t < z.size(); ++t) REQUIRE(stack.row(0)[t] == Approx(z[t]).margin(1e-12));
    }
    SECTION("all eight channels are normalized or all-zero") {
        std::vector<RepKind> kinds(kAllRepKinds.begin(), kAllRepKinds.end());
        auto stack = build_stack(s, kinds);
        REQUIRE(stack.rows() == 8);
        for (std::size_t r = 0; r < 8; ++r) {
            double mean = 0.0, var = 0.0;
            for (std::size_t t = 0; t < stack.length; ++t) mean += stack.row(r)[t];
            mean /= static_cast<double>(stack.length);
            for (std::size_t t = 0; t < stack.length; ++t)
                var += (stack.row(r)[t] - mean) * (stack.row(r)[t] - mean);
            var /= static_cast<double>(stack.length);
            const bool all_zero = var < 1e-20 && std::abs(mean) < 1e-12;
            if (!all_zero) {
                REQUIRE(mean == Approx(0.0).margin(1e-9));
                REQUIRE(var == Approx(1.0).margin(1e-9));
            }
        }
    }
    SECTION("constant derivative channel becomes zeros") {
        Series ramp;
        ramp.label = 0;
        ramp.values.resize(32);
        for (std::size_t t = 0; t < 32; ++t) ramp.values[t] = static_cast<double>(t);
        auto stack = build_stack(ramp, {RepKind::TIME, RepKind::DT1});
        for (std::size_t t = 0; t < stack.length; ++t) REQUIRE(stack.row(1)[t] == 0.0);
    }
    SECTION("duplicate kinds rejected") {
        REQUIRE_THROWS_AS(build_stack(s, {RepKind::TIME, RepKind::TIME}), std::invalid_argument);
    }
    SECTION("deterministic: identical inputs give bit-identical stacks") {
        std::vector<RepKind> kinds(kAllRepKinds.begin(), kAllRepKinds.end());
        auto a = build_stack(s, kinds);
        auto b = build_stack(s, kinds);
        REQUIRE(a.channels == b.channels);
    }
}

TEST_CASE("rep kind names round-trip") {
    for (RepKind k : kAllRepKinds) REQUIRE(rep_kind_from_name(rep_kind_name(k)) == k);
    REQUIRE_THROWS_AS(rep_kind_from_name("NOPE"), std::invalid_argument);
    REQUIRE(preset_kinds("raw") == std::vector<RepKind>{RepKind::TIME});
    REQUIRE(preset_kinds("minimal") ==
            std::vector<RepKind>{RepKind::TIME, RepKind::DT1, RepKind::FFT_MAG});
    REQUIRE(preset_kinds("default").size() == 8);
    REQUIRE_THROWS_AS(preset_kinds("bogus"), std::invalid_argument);
}
