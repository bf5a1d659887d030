#include <catch_amalgamated.hpp>

#include <chrono>
#include <random>

#include "evdetect/rng.hpp"
#include "evdetect/soft_dtw.hpp"
#include "oracles.hpp"

using namespace evdetect;

namespace {

std::vector<real> random_seq(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<real> d(-1, 1);
    std::vector<real> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

} // namespace

TEST_CASE("identical sequences cost zero at gamma 0") {
    std::vector<real> x{0.5, 1.5, -2.0, 0.25};
    REQUIRE(soft_dtw(x, x, 0) == real(0));
}

TEST_CASE("single-cell alignment equals the squared distance for any gamma") {
    std::vector<real> x{0}, y{1};
    for (real gamma : {real(0), real(0.1), real(1), real(10)})
        REQUIRE_THAT(soft_dtw(x, y, gamma), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("worked 2x2 example: soft-min over three paths, can be negative") {
    std::vector<real> x{1, 2}, y{1, 2};
    const real expected = -std::log(real(1) + real(2) * std::exp(real(-1)));
    REQUIRE_THAT(soft_dtw(x, y, 1), Catch::Matchers::WithinAbs(expected, 1e-9));
    REQUIRE(soft_dtw(x, y, 1) < 0);
    // Independent route: brute-force enumeration of the 3 alignment paths.
    REQUIRE_THAT(oracle::brute_force_soft_dtw(x, y, 1),
                 Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("DP equals brute-force path enumeration on small inputs") {
    auto rng = make_rng(7);
    std::uniform_int_distribution<std::size_t> len(1, 5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto x = random_seq(len(rng), rng);
        const auto y = random_seq(len(rng), rng);
        for (real gamma : {real(0.3), real(1), real(3)}) {
            const real dp = soft_dtw(x, y, gamma);
            const real bf = oracle::brute_force_soft_dtw(x, y, gamma);
            REQUIRE_THAT(dp, Catch::Matchers::WithinAbs(bf, 1e-10));
        }
    }
}

TEST_CASE("gamma -> 0 recovers hard DTW within 1e-2 on 50 random pairs") {
    auto rng = make_rng(99);
    std::uniform_int_distribution<std::size_t> len(2, 12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_seq(len(rng), rng);
        const auto y = random_seq(len(rng), rng);
        const real soft = soft_dtw(x, y, real(1e-3));
        const real hard = oracle::hard_dtw(x, y);
        REQUIRE(std::abs(soft - hard) < 1e-2);
    }
}

TEST_CASE("soft value never exceeds the hard value for gamma > 0") {
    auto rng = make_rng(13);
    std::uniform_int_distribution<std::size_t> len(2, 10);
    for (int trial = 0; trial < 40; ++trial) {
        const auto x = random_seq(len(rng), rng);
        const auto y = random_seq(len(rng), rng);
        const real hard = oracle::hard_dtw(x, y);
        for (real gamma : {real(0.01), real(0.3), real(2)})
            REQUIRE(soft_dtw(x, y, gamma) <= hard + 1e-12);
    }
}

TEST_CASE("symmetry in the two sequences") {
    auto rng = make_rng(17);
    std::uniform_int_distribution<std::size_t> len(2, 10);
    for (int trial = 0; trial < 30; ++trial) {
        const auto x = random_seq(len(rng), rng);
        const auto y = random_seq(len(rng), rng);
        REQUIRE_THAT(soft_dtw(x, y, 1), Catch::Matchers::WithinAbs(soft_dtw(y, x, 1), 1e-10));
    }
}

TEST_CASE("gradient matches finite differences") {
    auto rng = make_rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        auto x = random_seq(6, rng);
        auto y = random_seq(7, rng);
        for (real gamma : {real(0.1), real(1)}) {
            std::vector<real> grad;
            soft_dtw(x, y, gamma, nullptr, &grad);
            const real h = real(1e-5);
            for (std::size_t j = 0; j < y.size(); ++j) {
                const real saved = y[j];
                y[j] = saved + h;
                const real fp = soft_dtw(x, y, gamma);
                y[j] = saved - h;
                const real fm = soft_dtw(x, y, gamma);
                y[j] = saved;
                const real numeric = (fp - fm) / (2 * h);
                const real denom = std::max({std::abs(grad[j]), std::abs(numeric), real(1e-8)});
                REQUIRE(std::abs(grad[j] - numeric) / denom < 1e-5);
            }
        }
    }
}

TEST_CASE("error contracts") {
    std::vector<real> x{1.0}, empty;
    REQUIRE_THROWS_AS(soft_dtw(empty, x, 1), ShapeError);
    REQUIRE_THROWS_AS(soft_dtw(x, empty, 1), ShapeError);
    REQUIRE_THROWS_AS(soft_dtw(x, x, -0.5), ConfigError);
    std::vector<real> grad;
    REQUIRE_THROWS_AS(soft_dtw(x, x, 0, nullptr, &grad), ConfigError);
}

TEST_CASE("workspace matrices are finite after a forward pass") {
    std::vector<real> x{1, 2, 3}, y{2, 1, 0, 4};
    SdtwWorkspace ws;
    soft_dtw(x, y, real(0.5), &ws);
    for (std::size_t i = 1; i <= ws.n; ++i)
        for (std::size_t j = 1; j <= ws.m; ++j)
            REQUIRE(std::isfinite(ws.dp_forward[i * (ws.m + 2) + j]));
    for (real c : ws.cost_matrix) REQUIRE(std::isfinite(c));
}

TEST_CASE("cost scales as Theta(n*m): doubling both lengths ~4x") {
    auto rng = make_rng(37);
    const auto x1 = random_seq(300, rng);
    const auto y1 = random_seq(300, rng);
    const auto x2 = random_seq(600, rng);
    const auto y2 = random_seq(600, rng);

    auto time_one = [](const std::vector<real>& a, const std::vector<real>& b) {
        SdtwWorkspace ws;
        const auto t0 = std::chrono::steady_clock::now();
        volatile real sink = soft_dtw(a, b, 1, &ws);
        (void)sink;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    // median of 5 to tame timer noise
    auto median5 = [&](const std::vector<real>& a, const std::vector<real>& b) {
        std::vector<double> t;
        for (int i = 0; i < 5; ++i) t.push_back(time_one(a, b));
        std::sort(t.begin(), t.end());
        return t[2];
    };
    time_one(x1, y1); // warm-up
    const double small = median5(x1, y1);
    const double big = median5(x2, y2);
    const double factor = big / small;
    INFO("small " << small << " s, big " << big << " s, factor " << factor);
    REQUIRE(factor >= 3.0);
    REQUIRE(factor <= 6.0);
}
