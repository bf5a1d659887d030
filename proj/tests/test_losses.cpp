#include <catch_amalgamated.hpp>

#include <random>

#include "evdetect/losses.hpp"
#include "evdetect/rng.hpp"

using namespace evdetect;

namespace {

Matrix from_rows(std::vector<std::vector<real>> rows) {
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy(rows[r].begin(), rows[r].end(), m.row(r));
    return m;
}

} // namespace

TEST_CASE("l2 loss is the mean of per-sample Euclidean norms") {
    Matrix x = from_rows({{0, 3, 4}});
    Matrix zero = from_rows({{0, 0, 0}});
    REQUIRE(l2_loss(x, x) == real(0));
    REQUIRE_THAT(l2_loss(x, zero), Catch::Matchers::WithinAbs(5.0, 1e-15));

    // norms 5 and 1, mean 3
    Matrix x2 = from_rows({{0, 3, 4}, {1, 0, 0}});
    Matrix z2 = from_rows({{0, 0, 0}, {0, 0, 0}});
    REQUIRE_THAT(l2_loss(x2, z2), Catch::Matchers::WithinAbs(3.0, 1e-15));

    Matrix wrong(1, 2);
    REQUIRE_THROWS_AS(l2_loss(x, wrong), ShapeError);
}

TEST_CASE("cosine loss sign convention") {
    Matrix x = from_rows({{1, 2, 3}});
    REQUIRE_THAT(cosine_similarity(x, x), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(cosine_loss(x, x), Catch::Matchers::WithinAbs(0.0, 1e-12));

    Matrix ortho = from_rows({{-2, 1, 0}});
    REQUIRE_THAT(cosine_similarity(x, ortho), Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(cosine_loss(x, ortho), Catch::Matchers::WithinAbs(1.0, 1e-12));

    Matrix neg = from_rows({{-1, -2, -3}});
    REQUIRE_THAT(cosine_similarity(x, neg), Catch::Matchers::WithinAbs(-1.0, 1e-12));
    REQUIRE_THAT(cosine_loss(x, neg), Catch::Matchers::WithinAbs(2.0, 1e-12));

    Matrix zero = from_rows({{0, 0, 0}});
    REQUIRE_THROWS_AS(cosine_loss(x, zero), NumericError);
}

TEST_CASE("combined loss degenerate and compositional cases") {
    auto rng = make_rng(3);
    std::uniform_real_distribution<real> d(real(0.1), real(1));
    Matrix x(3, 8), xhat(3, 8);
    for (auto& v : x.data) v = d(rng);
    for (auto& v : xhat.data) v = d(rng);

    SECTION("lambda (1,0,0) equals l2 exactly") {
        REQUIRE(combined_loss(x, xhat, {1, 0, 0}, 1) == l2_loss(x, xhat));
    }
    SECTION("lambda (0,0,1) with perfect reconstruction is zero") {
        REQUIRE_THAT(combined_loss(x, x, {0, 0, 1}, 1),
                     Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
    SECTION("lambda (1,1,1) equals the sum of the three terms") {
        const real sum = l2_loss(x, xhat) + sdtw_loss(x, xhat, 1) + cosine_loss(x, xhat);
        REQUIRE_THAT(combined_loss(x, xhat, {1, 1, 1}, 1),
                     Catch::Matchers::WithinAbs(sum, 1e-12));
    }
    SECTION("gradient is the weighted sum of term gradients") {
        Matrix g_combined, g1, g2, g3;
        combined_loss(x, xhat, {real(0.5), real(2), real(0.25)}, 1, &g_combined);
        l2_loss(x, xhat, &g1);
        sdtw_loss(x, xhat, 1, &g2);
        cosine_loss(x, xhat, &g3);
        for (std::size_t i = 0; i < g_combined.data.size(); ++i)
            REQUIRE_THAT(g_combined.data[i],
                         Catch::Matchers::WithinAbs(
                             0.5 * g1.data[i] + 2 * g2.data[i] + 0.25 * g3.data[i], 1e-12));
    }
}

TEST_CASE("invalid weights are rejected") {
    Matrix x(1, 2), h(1, 2);
    x.data = {1, 2};
    h.data = {1, 1};
    REQUIRE_THROWS_AS(combined_loss(x, h, {0, 0, 0}, 1), ConfigError);
    REQUIRE_THROWS_AS(combined_loss(x, h, {-1, 0, 1}, 1), ConfigError);
}
