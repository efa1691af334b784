#include "doctest.h"

#include "scl/paths.hpp"
#include "scl/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

using namespace scl;

namespace {

FVPath path_from_jumps(const TimeGrid& grid, int dim,
                       const std::vector<std::pair<int, std::vector<double>>>& jumps) {
    std::vector<double> values(static_cast<std::size_t>(grid.n_nodes()) * dim, 0.0);
    for (const auto& [node, jump] : jumps)
        for (int k = node; k < grid.n_nodes(); ++k)
            for (int c = 0; c < dim; ++c) values[static_cast<std::size_t>(k) * dim + c] += jump[c];
    return FVPath::from_values(grid, dim, std::move(values));
}

} // namespace

TEST_CASE("total variation: zero, atom, multi-jump") {
    const TimeGrid grid(1.0, 4);
    CHECK(total_variation(FVPath(grid, 1)) == 0.0);

    // constant path c: the time-zero atom contributes |c|
    const FVPath c = path_from_jumps(grid, 1, {{0, {-2.5}}});
    CHECK(total_variation(c) == doctest::Approx(2.5));

    // d=2: jump (1,-2) at 0 and (0,3) at t_1
    const FVPath f = path_from_jumps(grid, 2, {{0, {1, -2}}, {1, {0, 3}}});
    CHECK(total_variation(f) == doctest::Approx(6.0));
}

TEST_CASE("mz distance closed forms") {
    const TimeGrid grid(1.0, 64);
    const FVPath zero(grid, 1);
    CHECK(mz_distance(zero, zero) == 0.0);

    const FVPath two = path_from_jumps(grid, 1, {{0, {2.0}}});
    CHECK(mz_distance(zero, two) == doctest::Approx(2.0)); // clipped to 1 on [0,1) plus 1 at T

    // indicator of [0.5, 1]: jump 1 at node 32
    const FVPath ind = path_from_jumps(grid, 1, {{32, {1.0}}});
    CHECK(mz_distance(ind, zero) == doctest::Approx(1.5));
}

TEST_CASE("mz metric axioms and clip bound on random paths") {
    const TimeGrid grid(0.7, 16);
    rng::Stream st(5);
    auto rand_path = [&](double scale) {
        std::vector<double> v(static_cast<std::size_t>(grid.n_nodes()) * 2);
        for (double& x : v) x = scale * st.normal();
        return FVPath::from_values(grid, 2, std::move(v));
    };
    for (int i = 0; i < 200; ++i) {
        const auto f = rand_path(1.5), g = rand_path(1.5), h = rand_path(1.5);
        const double dfg = mz_distance(f, g);
        CHECK(dfg == mz_distance(g, f));
        CHECK(mz_distance(f, h) <= dfg + mz_distance(g, h) + 1e-12);
        CHECK(dfg <= grid.horizon + 1.0 + 1e-12);
    }
    CHECK_THROWS_AS(mz_distance(FVPath(grid, 1), FVPath(grid, 2)), std::invalid_argument);
    CHECK_THROWS_AS(mz_distance(FVPath(grid, 1), FVPath(TimeGrid(0.7, 8), 1)),
                    std::invalid_argument);
}

TEST_CASE("stieltjes integral with the time-zero atom") {
    const TimeGrid grid(1.0, 4);
    const FVPath zero(grid, 1);
    std::vector<double> ones(grid.n_nodes(), 1.0);
    CHECK(stieltjes_integral(ones, zero, 0) == 0.0);

    // telescoping: integrating 1 against dg returns g(T), atom included
    const FVPath g = path_from_jumps(grid, 1, {{0, {0.7}}, {2, {-0.2}}, {4, {1.0}}});
    CHECK(stieltjes_integral(ones, g, 0) == doctest::Approx(g.value(4, 0)).epsilon(1e-15));

    // f(t)=t against a unit jump at t=0.5
    const TimeGrid g2(1.0, 2);
    std::vector<double> t_nodes{0.0, 0.5, 1.0};
    const FVPath jump = path_from_jumps(g2, 1, {{1, {1.0}}});
    CHECK(stieltjes_integral(t_nodes, jump, 0) == doctest::Approx(0.5));
}

TEST_CASE("jordan decomposition") {
    const TimeGrid grid(1.0, 4);
    const FVPath inc = path_from_jumps(grid, 1, {{0, {1.0}}, {1, {2.0}}, {3, {0.5}}});
    const auto jp = jordan(inc);
    CHECK(jp.plus == inc);
    CHECK(total_variation(jp.minus) == 0.0);

    const FVPath neg = path_from_jumps(grid, 1, {{0, {-3.0}}});
    const auto jn = jordan(neg);
    CHECK(total_variation(jn.plus) == 0.0);
    CHECK(jn.minus.value(4, 0) == doctest::Approx(3.0));

    const FVPath mix = path_from_jumps(grid, 1, {{1, {1.0}}, {2, {-2.0}}});
    const auto jm = jordan(mix);
    CHECK(jm.plus.value(4, 0) == doctest::Approx(1.0));
    CHECK(jm.minus.value(4, 0) == doctest::Approx(2.0));
}

TEST_CASE("jordan reconstruction and variation identity on random paths") {
    const TimeGrid grid(2.0, 12);
    rng::Stream st(6);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(static_cast<std::size_t>(grid.n_nodes()) * 3);
        for (double& x : v) x = 2.0 * st.normal();
        const FVPath f = FVPath::from_values(grid, 3, std::move(v));
        const auto jp = jordan(f);
        double tv_parts = 0.0;
        for (int c = 0; c < 3; ++c) {
            tv_parts += jp.plus.value(grid.n_steps, c) + jp.minus.value(grid.n_steps, c);
            for (int k = 0; k < f.n_nodes(); ++k)
                CHECK(jp.plus.value(k, c) - jp.minus.value(k, c) ==
                      doctest::Approx(f.value(k, c)).epsilon(1e-14));
        }
        CHECK(tv_parts == doctest::Approx(total_variation(f)).epsilon(1e-13));
    }
}

TEST_CASE("k-monotonicity") {
    const TimeGrid grid(1.0, 5);
    const Cone k = Cone::from_costs(TransactionCostSpec::uniform(2, 0.1));
    CHECK(is_k_monotone(FVPath(grid, 2), k, MonotoneDirection::increasing));
    CHECK(is_k_monotone(FVPath(grid, 2), k, MonotoneDirection::decreasing));

    // cumulative nonnegative increments are increasing for K containing the orthant
    const FVPath up = path_from_jumps(grid, 2, {{0, {1, 0}}, {2, {0.5, 2}}});
    CHECK(is_k_monotone(up, k, MonotoneDirection::increasing));
    CHECK_FALSE(is_k_monotone(up, k, MonotoneDirection::decreasing));

    // f(t) = -t k along a generator ray is decreasing
    std::vector<double> values;
    for (int n = 0; n < grid.n_nodes(); ++n) {
        const double t = grid.node(n);
        values.push_back(-t * 1.1);
        values.push_back(t * 1.0);
    }
    const FVPath ray = FVPath::from_values(grid, 2, std::move(values));
    CHECK(is_k_monotone(ray, k, MonotoneDirection::decreasing));
}

TEST_CASE("derivative with respect to variation") {
    const TimeGrid grid(1.0, 4);
    const Cone k = Cone::from_costs(TransactionCostSpec::uniform(2, 0.1));

    CHECK(rn_derivative(FVPath(grid, 2)).empty());

    // constant slope along a normalized generator direction
    const double norm1 = 1.1 + 1.0;
    std::vector<double> values;
    for (int n = 0; n < grid.n_nodes(); ++n) {
        const double t = grid.node(n);
        values.push_back(-t * 1.1 / norm1);
        values.push_back(t * 1.0 / norm1);
    }
    const FVPath ray = FVPath::from_values(grid, 2, std::move(values));
    const auto d = rn_derivative(ray);
    REQUIRE_FALSE(d.empty());
    for (int node = 1; node < grid.n_nodes(); ++node) {
        const auto dir = d.direction_at(node, 2);
        CHECK(dir[0] == doctest::Approx(-1.1 / norm1).epsilon(1e-12));
        CHECK(dir[1] == doctest::Approx(1.0 / norm1).epsilon(1e-12));
    }

    // single jump at zero: the direction is v / |v|_1 on the atom
    const FVPath atom = path_from_jumps(grid, 2, {{0, {-2.0, 1.0}}});
    const auto da = rn_derivative(atom);
    CHECK(da.weights[0] == doctest::Approx(3.0));
    CHECK(da.direction_at(0, 2)[0] == doctest::Approx(-2.0 / 3.0));
    CHECK(da.direction_at(0, 2)[1] == doctest::Approx(1.0 / 3.0));

    // two jumps in K stay in K after normalization, reconstruction is exact
    const FVPath two = path_from_jumps(grid, 2, {{1, {1.0, 0.0}}, {3, {1.1, -1.0}}});
    const auto dt = rn_derivative(two);
    std::vector<double> rebuilt(2, 0.0);
    for (int node = 0; node < grid.n_nodes(); ++node) {
        if (dt.weights[node] > 0.0) {
            const auto dir = dt.direction_at(node, 2);
            CHECK(k.contains(std::vector<double>{dir[0], dir[1]}, 1e-9));
            double l1 = std::abs(dir[0]) + std::abs(dir[1]);
            CHECK(l1 == doctest::Approx(1.0).epsilon(1e-12));
            rebuilt[0] += dt.weights[node] * dir[0];
            rebuilt[1] += dt.weights[node] * dir[1];
        }
        CHECK(rebuilt[0] == doctest::Approx(two.value(node, 0)).epsilon(1e-14));
        CHECK(rebuilt[1] == doctest::Approx(two.value(node, 1)).epsilon(1e-14));
    }
}

TEST_CASE("gram cross-check of the dual-basis argument") {
    const TimeGrid grid(1.0, 16);
    const Cone k = Cone::from_costs(TransactionCostSpec::uniform(2, 0.2));
    rng::Stream st(31);
    for (int i = 0; i < 20; ++i) {
        // K-decreasing path built from -K increments
        std::vector<double> values(static_cast<std::size_t>(grid.n_nodes()) * 2, 0.0);
        std::vector<double> cum(2, 0.0);
        for (int n = 0; n < grid.n_nodes(); ++n) {
            for (int g = 0; g < k.n_generators(); ++g) {
                const double w = st.u01() < 0.4 ? 0.3 * st.u01() : 0.0;
                const auto gen = k.generator(g);
                cum[0] -= w * gen[0];
                cum[1] -= w * gen[1];
            }
            values[static_cast<std::size_t>(n) * 2] = cum[0];
            values[static_cast<std::size_t>(n) * 2 + 1] = cum[1];
        }
        const FVPath f = FVPath::from_values(grid, 2, std::move(values));
        const auto gc = gram_monotonicity_check(f, k, MonotoneDirection::decreasing);
        CHECK(gc.scalar_components_monotone);
        CHECK(gc.max_reconstruction_error <= 1e-10);
    }
}

TEST_CASE("helly subsequence") {
    const TimeGrid grid(1.0, 8);

    // constant sequence: everything is kept
    const FVPath f = path_from_jumps(grid, 1, {{0, {1.0}}, {4, {-0.5}}});
    std::vector<FVPath> constant(5, f);
    const auto hc = helly_subsequence(constant, 2.0);
    CHECK(hc.indices.size() == 5);
    CHECK(hc.limit == f);

    // alternating f, g: one of the constant subsequences survives
    const FVPath g = path_from_jumps(grid, 1, {{0, {-1.0}}});
    std::vector<FVPath> alt{f, g, f, g, f, g};
    const auto ha = helly_subsequence(alt, 2.0);
    REQUIRE(ha.indices.size() >= 3);
    for (std::size_t i = 0; i < ha.indices.size(); ++i) CHECK(alt[ha.indices[i]] == ha.limit);

    CHECK_THROWS_AS(helly_subsequence(std::vector<FVPath>{}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(helly_subsequence(constant, 0.1), std::invalid_argument); // Var > bound
}

TEST_CASE("helly on quantized random paths: exact pointwise convergence") {
    const TimeGrid grid(1.0, 6);
    rng::Stream st(41);
    std::vector<FVPath> paths;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(static_cast<std::size_t>(grid.n_nodes()), 0.0);
        double cum = 0.0;
        for (int n = 0; n < grid.n_nodes(); ++n) {
            // quantized jumps in {-0.5, 0, 0.5}, variation <= 3.5 by construction
            const double u = st.u01();
            cum += u < 0.3 ? -0.5 : (u > 0.7 ? 0.5 : 0.0);
            v[n] = cum;
        }
        paths.push_back(FVPath::from_values(grid, 1, std::move(v)));
    }
    const auto h = helly_subsequence(paths, 3.5 + 1e-9);
    REQUIRE(!h.indices.empty());
    // monotone at every node, and distances to the limit are non-increasing
    for (int n = 0; n < grid.n_nodes(); ++n) {
        for (std::size_t i = 2; i < h.indices.size(); ++i) {
            const double a = paths[h.indices[i - 2]].value(n, 0);
            const double b = paths[h.indices[i - 1]].value(n, 0);
            const double c = paths[h.indices[i]].value(n, 0);
            CHECK(((a <= b && b <= c) || (a >= b && b >= c)));
        }
    }
    double prev = 1e300;
    for (int idx : h.indices) {
        const double d = mz_distance(paths[idx], h.limit);
        CHECK(d <= prev + 1e-12);
        prev = d;
    }
    CHECK(mz_distance(paths[h.indices.back()], h.limit) == 0.0);
}

TEST_CASE("csv round trip is bit exact") {
    const TimeGrid grid(1.0, 7);
    rng::Stream st(51);
    std::vector<double> v(static_cast<std::size_t>(grid.n_nodes()) * 2);
    for (double& x : v) x = std::exp(10.0 * st.normal()); // spread across magnitudes
    v[3] = -0.0;
    v[5] = 1.0 / 3.0;
    const FVPath f = FVPath::from_values(grid, 2, std::move(v));

    std::stringstream buf;
    write_csv(f, buf);
    const FVPath g = read_fv_csv(buf);
    REQUIRE(g.dim() == f.dim());
    REQUIRE(g.grid() == f.grid());
    for (int k = 0; k < f.n_nodes(); ++k)
        for (int c = 0; c < f.dim(); ++c) CHECK(g.value(k, c) == f.value(k, c));
}

TEST_CASE("distance matrix matches pairwise calls") {
    const TimeGrid grid(1.0, 8);
    rng::Stream st(61);
    std::vector<FVPath> paths;
    for (int i = 0; i < 9; ++i) {
        std::vector<double> v(static_cast<std::size_t>(grid.n_nodes()));
        for (double& x : v) x = st.normal();
        paths.push_back(FVPath::from_values(grid, 1, std::move(v)));
    }
    const auto m = mz_distance_matrix(paths, true);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j)
            CHECK(m[static_cast<std::size_t>(i) * 9 + j] ==
                  (i == j ? 0.0 : mz_distance(paths[i], paths[j])));
}
