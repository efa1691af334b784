#include "doctest.h"

#include "scl/cones.hpp"
#include "scl/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace scl;

namespace {

Cone two_asset_cone(double lambda) { return Cone::from_costs(TransactionCostSpec::uniform(2, lambda)); }

Cone orthant2() { return Cone::from_generators(2, {1, 0, 0, 1}); }

} // namespace

TEST_CASE("transaction cost spec validation") {
    CHECK_THROWS_AS(TransactionCostSpec(2, {0.1, 0.1, 0.1, 0.0}), std::invalid_argument); // diag
    CHECK_THROWS_AS(TransactionCostSpec(2, {0.0, -0.1, 0.1, 0.0}), std::invalid_argument);
    CHECK_NOTHROW(TransactionCostSpec::uniform(3, 0.05));
}

TEST_CASE("properness gate rejects a half-plane") {
    // cone{e1, -e1, e2} contains the x-axis as a line
    CHECK_THROWS_AS(Cone::from_generators(2, {1, 0, -1, 0, 0, 1}, false), std::invalid_argument);
    // zero fees in both directions create a line as well
    CHECK_THROWS_AS(Cone::from_costs(TransactionCostSpec::uniform(2, 0.0)), std::invalid_argument);
}

TEST_CASE("membership: orthant and fee cone") {
    const Cone k = two_asset_cone(0.1);
    CHECK(k.contains(std::vector<double>{0, 0}));
    CHECK(k.contains(std::vector<double>{1, 1}));
    CHECK_FALSE(k.contains(std::vector<double>{-1, 1.05}));
    CHECK(k.contains(std::vector<double>{-1, 1.1}));
    CHECK(k.contains_orthant());

    const Cone o = orthant2();
    CHECK(o.contains(std::vector<double>{1, 1}));
    CHECK_FALSE(o.contains(std::vector<double>{-0.01, 1}));
}

TEST_CASE("cone addition closure on random members") {
    const Cone k = two_asset_cone(0.25);
    rng::Stream st(42);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x(2, 0.0), y(2, 0.0), s(2);
        for (int g = 0; g < k.n_generators(); ++g) {
            const auto gen = k.generator(g);
            const double a = st.u01(), b = st.u01();
            for (int c = 0; c < 2; ++c) {
                x[c] += a * gen[c];
                y[c] += b * gen[c];
            }
        }
        for (int c = 0; c < 2; ++c) s[c] = x[c] + y[c];
        CHECK(k.contains(x));
        CHECK(k.contains(y));
        CHECK(k.contains(s));
    }
}

TEST_CASE("dual cone: orthant is self-dual") {
    const Cone o = orthant2();
    REQUIRE(o.has_dual());
    const Cone od = dual(o);
    CHECK(od.contains(std::vector<double>{1, 0}));
    CHECK(od.contains(std::vector<double>{0, 1}));
    CHECK_FALSE(od.contains(std::vector<double>{-0.1, 1}));
    CHECK_FALSE(o.dual_strictly_positive());
}

TEST_CASE("dual cone of a 10% fee market") {
    const Cone k = two_asset_cone(0.1);
    REQUIRE(k.has_dual());
    // expected rays (1, 1/1.1) and (1, 1.1) up to scaling
    const Cone kd = dual(k);
    auto in_dual = [&](double a, double b) { return kd.contains(std::vector<double>{a, b}); };
    CHECK(in_dual(1.0, 1.0 / 1.1));
    CHECK(in_dual(1.0, 1.1));
    CHECK(in_dual(1.0, 1.0));
    CHECK_FALSE(in_dual(1.0, 1.2));
    CHECK_FALSE(in_dual(1.0, 1.0 / 1.2));
    CHECK(k.dual_strictly_positive());
}

TEST_CASE("bipolar check on random samples") {
    const Cone k = two_asset_cone(0.2);
    const Cone kdd = dual(dual(k));
    rng::Stream st(7);
    for (int i = 0; i < 300; ++i) {
        std::vector<double> x{3.0 * st.normal(), 3.0 * st.normal()};
        CHECK(k.contains(x, 1e-7) == kdd.contains(x, 1e-7));
    }
}

TEST_CASE("liquidation examples") {
    const Cone k = two_asset_cone(0.1);
    CHECK(liquidation(k, std::vector<double>{1, 0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(liquidation(k, std::vector<double>{0, 1}) == doctest::Approx(1.0 / 1.1).epsilon(1e-12));
    CHECK(liquidation(k, std::vector<double>{0, -1}) == doctest::Approx(-1.1).epsilon(1e-12));
}

TEST_CASE("purchase examples and the reflection identity") {
    const Cone k = two_asset_cone(0.1);
    CHECK(purchase(k, std::vector<double>{1, 0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(purchase(k, std::vector<double>{0, 1}) == doctest::Approx(1.1).epsilon(1e-12));
    rng::Stream st(11);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> x{4.0 * st.normal(), 4.0 * st.normal()};
        std::vector<double> mx{-x[0], -x[1]};
        CHECK(std::abs(purchase(k, x) + liquidation(k, mx)) <= 1e-12);
    }
}

TEST_CASE("liquidation is concave and positively homogeneous; purchase convex") {
    const Cone k = two_asset_cone(0.3);
    rng::Stream st(13);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x{2 * st.normal(), 2 * st.normal()};
        std::vector<double> y{2 * st.normal(), 2 * st.normal()};
        std::vector<double> mid{0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])};
        CHECK(liquidation(k, mid) >= 0.5 * (liquidation(k, x) + liquidation(k, y)) - 1e-9);
        CHECK(purchase(k, mid) <= 0.5 * (purchase(k, x) + purchase(k, y)) + 1e-9);
        const double c = 0.1 + 3.0 * st.u01();
        std::vector<double> cx{c * x[0], c * x[1]};
        CHECK(liquidation(k, cx) == doctest::Approx(c * liquidation(k, x)).epsilon(1e-10));
    }
}

TEST_CASE("points in K liquidate to a nonnegative value") {
    const Cone k = two_asset_cone(0.15);
    rng::Stream st(17);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x(2, 0.0);
        for (int g = 0; g < k.n_generators(); ++g) {
            const double w = st.u01();
            const auto gen = k.generator(g);
            for (int c = 0; c < 2; ++c) x[c] += w * gen[c];
        }
        CHECK(liquidation(k, x) >= -1e-10);
    }
}

TEST_CASE("epsilon margin") {
    const Cone o = orthant2();
    const std::vector<double> ones{1, 1};
    CHECK(epsilon_margin(o, ones) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    // a dual generator against its orthogonal generator has zero margin
    CHECK(epsilon_margin(o, std::vector<double>{1, 0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(epsilon_margin(o, std::vector<double>{0, 0}), std::invalid_argument);

    const Cone k = two_asset_cone(0.1);
    const double lam_margin = 0.1 / (std::sqrt(2.0) * std::sqrt(1.1 * 1.1 + 1.0));
    CHECK(epsilon_margin(k, ones) == doctest::Approx(lam_margin).epsilon(1e-12));
    // the margin collapses as fees vanish
    double prev = epsilon_margin(two_asset_cone(0.2), ones);
    for (double lam : {0.1, 0.05, 0.01, 0.001}) {
        const double m = epsilon_margin(two_asset_cone(lam), ones);
        CHECK(m > 0.0);
        CHECK(m < prev);
        prev = m;
    }
}

TEST_CASE("lambda section vertices and the frictionless rejection") {
    const Cone k01 = two_asset_cone(0.1);
    const auto s01 = lambda_section(k01);
    REQUIRE(s01.n_vertices() == 2);
    // vertices (1, 1/1.1) and (1, 1.1) in some order
    double lo = 2, hi = 0;
    for (int v = 0; v < 2; ++v) {
        CHECK(s01.vertex(v)[0] == doctest::Approx(1.0));
        lo = std::min(lo, s01.vertex(v)[1]);
        hi = std::max(hi, s01.vertex(v)[1]);
    }
    CHECK(lo == doctest::Approx(1.0 / 1.1).epsilon(1e-12));
    CHECK(hi == doctest::Approx(1.1).epsilon(1e-12));

    const auto s05 = lambda_section(two_asset_cone(0.5));
    lo = 2, hi = 0;
    for (int v = 0; v < s05.n_vertices(); ++v) {
        lo = std::min(lo, s05.vertex(v)[1]);
        hi = std::max(hi, s05.vertex(v)[1]);
    }
    CHECK(lo == doctest::Approx(1.0 / 1.5).epsilon(1e-12));
    CHECK(hi == doctest::Approx(1.5).epsilon(1e-12));

    // the orthant has a dual ray with vanishing first coordinate
    CHECK_THROWS_AS(lambda_section(orthant2()), std::invalid_argument);
}

TEST_CASE("three-asset cone duality sanity") {
    const Cone k = Cone::from_costs(TransactionCostSpec::uniform(3, 0.1));
    REQUIRE(k.has_dual());
    const auto lam = lambda_section(k);
    rng::Stream st(23);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x{2 * st.normal(), 2 * st.normal(), 2 * st.normal()};
        CHECK(liquidation(k, x) == doctest::Approx(liquidation_via_lambda(lam, x)).epsilon(1e-8));
    }
}

TEST_CASE("json round trip") {
    const Cone k = two_asset_cone(0.1);
    const auto text = k.to_json();
    const Cone k2 = Cone::from_json(text);
    rng::Stream st(29);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x{2 * st.normal(), 2 * st.normal()};
        CHECK(k.contains(x) == k2.contains(x));
    }
}

TEST_CASE("dual unsupported above four dimensions") {
    std::vector<double> gens;
    for (int i = 0; i < 5; ++i) {
        std::vector<double> e(5, 0.0);
        e[i] = 1.0;
        gens.insert(gens.end(), e.begin(), e.end());
    }
    const Cone k = Cone::from_generators(5, gens);
    CHECK_FALSE(k.has_dual());
    CHECK_THROWS_AS(dual(k), std::invalid_argument);
}
