#include "doctest.h"

#include "scl/market.hpp"
#include "scl/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

using namespace scl;
using namespace scl::market;

namespace {

PriceModel martingale2(double sigma) {
    return PriceModel::independent(PriceModel::Kind::martingale_gbm, {0.0, sigma}, {0.0, 0.0});
}

Cone cone01() { return Cone::from_costs(TransactionCostSpec::uniform(2, 0.1)); }

FVPath path_from_jumps(const TimeGrid& grid, int dim,
                       const std::vector<std::pair<int, std::vector<double>>>& jumps) {
    std::vector<double> values(static_cast<std::size_t>(grid.n_nodes()) * dim, 0.0);
    for (const auto& [node, jump] : jumps)
        for (int k = node; k < grid.n_nodes(); ++k)
            for (int c = 0; c < dim; ++c) values[static_cast<std::size_t>(k) * dim + c] += jump[c];
    return FVPath::from_values(grid, dim, std::move(values));
}

} // namespace

TEST_CASE("price model validation") {
    CHECK_THROWS_AS(PriceModel::independent(PriceModel::Kind::martingale_gbm, {0.1, 0.2}, {0, 0}),
                    std::invalid_argument); // numeraire must be flat
    CHECK_THROWS_AS(PriceModel::independent(PriceModel::Kind::martingale_gbm, {0.0, 0.2}, {0, 0.1}),
                    std::invalid_argument); // martingale needs zero drift
    auto m = martingale2(0.2);
    m.correlation = {1, 0, 0, -2}; // broken diagonal
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    // non-PSD correlation in three assets
    PriceModel m3 = PriceModel::independent(PriceModel::Kind::martingale_gbm, {0, 0.2, 0.3}, {0, 0, 0});
    m3.correlation = {1, 0, 0, 0, 1, 2, 0, 2, 1};
    CHECK_THROWS_AS(m3.validate(), std::invalid_argument);
}

TEST_CASE("degenerate volatility gives constant prices") {
    const TimeGrid grid(1.0, 16);
    const auto s = simulate_prices(martingale2(0.0), grid, 7, 20);
    for (int r = 0; r < s.n_paths; ++r)
        for (int k = 0; k < grid.n_nodes(); ++k)
            for (int i = 0; i < 2; ++i) CHECK(s.at(r, k, i) == 1.0);
}

TEST_CASE("martingale and lognormal terminal means") {
    const TimeGrid grid(1.0, 64);
    const int n = 100000;
    const auto s = simulate_prices(martingale2(0.2), grid, 2024, n);
    double mean = 0.0, m2 = 0.0;
    for (int r = 0; r < n; ++r) {
        const double x = s.at(r, 64, 1);
        mean += x;
        m2 += x * x;
    }
    mean /= n;
    const double sd = std::sqrt(std::max(0.0, m2 / n - mean * mean));
    CHECK(std::abs(mean - 1.0) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));

    const auto drifted = PriceModel::independent(PriceModel::Kind::drifted_gbm, {0.0, 0.2}, {0.0, 0.1});
    const auto sd_set = simulate_prices(drifted, grid, 2025, n);
    double mean_d = 0.0, m2_d = 0.0;
    for (int r = 0; r < n; ++r) {
        const double x = sd_set.at(r, 64, 1);
        mean_d += x;
        m2_d += x * x;
    }
    mean_d /= n;
    const double sd_d = std::sqrt(std::max(0.0, m2_d / n - mean_d * mean_d));
    CHECK(std::abs(mean_d - std::exp(0.1)) <= 3.0 * sd_d / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("evolve closed forms") {
    const TimeGrid grid(1.0, 8);
    const auto prices = simulate_prices(martingale2(0.2), grid, 11, 3);
    const PricePathView view{&prices, 0};
    const Cone k = cone01();
    const std::vector<double> x{1.0, 1.0};

    // doing nothing keeps the physical endowment
    const auto p0 = evolve(x, FVPath(grid, 2), view);
    for (int node = 0; node < p0.n_nodes; ++node) {
        CHECK(p0.physical_at(node)[0] == doctest::Approx(1.0));
        CHECK(p0.physical_at(node)[1] == doctest::Approx(1.0));
        CHECK(p0.monetary_at(node)[1] ==
              doctest::Approx(prices.at(0, node, 1)).epsilon(1e-14));
    }

    // immediate liquidation parks everything in the numeraire
    const double ell = liquidation(k, x);
    const auto lx = liquidation_strategy(k, x, grid);
    const auto pl = evolve(x, lx, view);
    for (int node = 0; node < pl.n_nodes; ++node) {
        CHECK(pl.physical_at(node)[0] == doctest::Approx(ell).epsilon(1e-12));
        CHECK(pl.physical_at(node)[1] == doctest::Approx(0.0));
    }
    CHECK(is_admissible(x, lx, view, k));

    // one monetary unit of the risky asset bought at time zero, S_0 = 1
    const FVPath buy = path_from_jumps(grid, 2, {{0, {-1.1, 1.0}}});
    const auto pb = evolve(x, buy, view);
    CHECK(pb.physical_at(0)[0] == doctest::Approx(-0.1));
    CHECK(pb.physical_at(0)[1] == doctest::Approx(2.0));
}

TEST_CASE("evolve is linear in the strategy and additive in the endowment") {
    const TimeGrid grid(1.0, 12);
    const auto prices = simulate_prices(martingale2(0.3), grid, 13, 2);
    const PricePathView view{&prices, 1};
    rng::Stream st(77);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> b1v(static_cast<std::size_t>(grid.n_nodes()) * 2);
        std::vector<double> b2v(b1v.size()), sumv(b1v.size());
        for (std::size_t i = 0; i < b1v.size(); ++i) {
            b1v[i] = st.normal();
            b2v[i] = st.normal();
            sumv[i] = b1v[i] + b2v[i];
        }
        const auto b1 = FVPath::from_values(grid, 2, b1v);
        const auto b2 = FVPath::from_values(grid, 2, b2v);
        const auto bs = FVPath::from_values(grid, 2, sumv);
        const std::vector<double> x{0.4, -0.2};
        const auto lhs = evolve(x, bs, view);
        const auto r1 = evolve(x, b1, view);
        const auto r2 = evolve(std::vector<double>{0.0, 0.0}, b2, view);
        for (int node = 0; node < lhs.n_nodes; ++node)
            for (int c = 0; c < 2; ++c)
                CHECK(lhs.physical_at(node)[c] ==
                      doctest::Approx(r1.physical_at(node)[c] + r2.physical_at(node)[c])
                          .epsilon(1e-12));
    }
}

TEST_CASE("admissibility") {
    const TimeGrid grid(1.0, 8);
    const auto prices = simulate_prices(martingale2(0.0), grid, 17, 1);
    const PricePathView view{&prices, 0};
    const Cone k = cone01();

    CHECK(is_admissible(std::vector<double>{1, 1}, FVPath(grid, 2), view, k));

    // buying on credit from a zero endowment
    const FVPath credit = path_from_jumps(grid, 2, {{0, {-1.0, 1.0 / 1.1 - 0.01}}});
    CHECK_FALSE(is_admissible(std::vector<double>{0, 0}, credit, view, k));
}

TEST_CASE("constraint residual truncation matches the direct predicates") {
    const TimeGrid grid(1.0, 8);
    const auto prices = simulate_prices(martingale2(0.2), grid, 19, 1);
    const PricePathView view{&prices, 0};
    const Cone k = cone01();
    const std::vector<double> x{1.0, 1.0};

    const auto r0 = constraint_residuals(x, FVPath(grid, 2), view, k);
    for (double r : r0) CHECK(r >= -1e-12);

    // a +e2 jump is a K-increasing move: some monotonicity residual turns negative
    const FVPath up = path_from_jumps(grid, 2, {{3, {0.0, 0.5}}});
    double min_res = 1e300;
    for (double r : constraint_residuals(x, up, view, k)) min_res = std::min(min_res, r);
    CHECK(min_res < -1e-6);
    CHECK_FALSE(is_k_monotone(up, k, MonotoneDirection::decreasing));

    // an inadmissible cash burn keeps monotonicity but breaks admissibility
    const FVPath burn = path_from_jumps(grid, 2, {{2, {-5.0, 0.0}}});
    CHECK(is_k_monotone(burn, k, MonotoneDirection::decreasing));
    CHECK_FALSE(is_admissible(x, burn, view, k));
    min_res = 1e300;
    for (double r : constraint_residuals(x, burn, view, k)) min_res = std::min(min_res, r);
    CHECK(min_res < -1e-6);
}

TEST_CASE("eps-consistent price system") {
    const Cone k = cone01();
    const auto cps = make_cps(martingale2(0.2), k);
    const double expected = 0.1 / (std::sqrt(2.0) * std::sqrt(1.1 * 1.1 + 1.0));
    CHECK(cps.epsilon == doctest::Approx(expected).epsilon(1e-12));
    CHECK(cps.q_density_terminal == 1.0);

    // degenerate volatility still admits the construction
    CHECK_NOTHROW(make_cps(martingale2(0.0), k));

    // drifted prices are rejected (no density modeling here)
    const auto drifted = PriceModel::independent(PriceModel::Kind::drifted_gbm, {0.0, 0.2}, {0.0, 0.05});
    CHECK_THROWS_AS(make_cps(drifted, k), std::invalid_argument);

    // vanishing fees collapse the margin
    double prev = cps.epsilon;
    for (double lam : {0.05, 0.01, 0.001}) {
        const auto c = make_cps(martingale2(0.2), Cone::from_costs(TransactionCostSpec::uniform(2, lam)));
        CHECK(c.epsilon < prev);
        CHECK(c.epsilon > 0.0);
        prev = c.epsilon;
    }
}

TEST_CASE("variation bound report") {
    const Cone k = cone01();
    const std::vector<double> x{1.0, 1.0};
    const auto cps = make_cps(martingale2(0.2), k);

    // zero strategies
    std::vector<double> zeros(100, 0.0);
    const auto rz = variation_bound_check(k, x, zeros, cps, 3);
    CHECK(rz.pass);
    CHECK(rz.estimate == 0.0);
    CHECK(rz.bound == doctest::Approx(purchase(k, x) / cps.epsilon));

    // immediate liquidation: Var = |l(x) - x1| + |x2|, well below the bound
    const double ell = liquidation(k, x);
    const double var_lx = std::abs(ell - x[0]) + std::abs(x[1]);
    CHECK(var_lx == doctest::Approx(1.0 / 1.1 + 1.0));
    std::vector<double> lxs(100, var_lx);
    const auto rl = variation_bound_check(k, x, lxs, cps, 3);
    CHECK(rl.pass);
    CHECK(var_lx <= rl.bound);

    // a sample far above the bound must flag
    std::vector<double> big(100, rl.bound * 2.0);
    CHECK_FALSE(variation_bound_check(k, x, big, cps, 3).pass);
}

TEST_CASE("supermartingale diagnostics") {
    const TimeGrid grid(1.0, 16);
    const Cone k = cone01();
    const std::vector<double> x{1.0, 1.0};
    const auto prices = simulate_prices(martingale2(0.2), grid, 23, 4000);

    // no trading: the wealth is a martingale, no flagged increase
    const auto rep0 = supermartingale_check(
        x, [&](PricePathView) { return FVPath(grid, 2); }, prices, k);
    CHECK(rep0.pass);

    // immediate liquidation: drop at the atom, flat afterwards
    const auto repl = supermartingale_check(
        x, [&](PricePathView view) { return liquidation_strategy(k, x, view.grid()); }, prices, k);
    CHECK(repl.pass);
    const double ell = liquidation(k, x);
    CHECK(repl.node_means.front() == doctest::Approx(ell).epsilon(1e-12));
    CHECK(repl.node_means.back() == doctest::Approx(ell).epsilon(1e-12));
    CHECK(ell < 2.0); // strictly below the pre-jump wealth x . 1

    // churning burns fees: strictly decreasing trend
    const auto churn = [&](PricePathView view) {
        std::vector<double> vals(static_cast<std::size_t>(grid.n_nodes()) * 2, 0.0);
        double cash = 0.0;
        for (int node = 0; node < grid.n_nodes(); ++node) {
            cash += 0.02 / 1.1 - 0.02 * 1.1; // buy then sell one slice
            vals[static_cast<std::size_t>(node) * 2] = cash;
        }
        (void)view;
        return FVPath::from_values(grid, 2, std::move(vals));
    };
    const auto repc = supermartingale_check(x, churn, prices, k);
    CHECK(repc.pass);
    CHECK(repc.node_means.back() < repc.node_means.front() - 0.01);

    // a strategy that conjures cash must be flagged as increasing
    const auto magic = [&](PricePathView) {
        return path_from_jumps(grid, 2, {{4, {0.5, 0.0}}});
    };
    CHECK_FALSE(supermartingale_check(x, magic, prices, k).pass);
}

TEST_CASE("uniform integrability sufficient condition") {
    const Cone k = cone01();
    std::vector<double> unit_density(1000, 1.0);

    // bounded utility with a dominating constant
    const auto rep = ui_condition_check(goals::Utility::capped_linear(1.0), k, unit_density, 0.5,
                                        2.0, 3.0, 71);
    CHECK(rep.growth_condition_pass);
    CHECK(rep.moment_condition_pass);
    CHECK(rep.moment_estimate == doctest::Approx(1.0));
    CHECK(rep.pass);

    // u(l) = l^0.5 with gamma = 0.5, C = 1 sits exactly on the envelope
    const auto rep2 = ui_condition_check(goals::Utility::power(0.5), k, unit_density, 0.5, 1.0,
                                         3.0, 73);
    CHECK(rep2.growth_condition_pass);

    // hypothesis violation: q <= 1/(1-gamma)
    CHECK_THROWS_AS(ui_condition_check(goals::Utility::capped_linear(1.0), k, unit_density, 0.5,
                                       1.0, 1.5, 75),
                    std::invalid_argument);

    // an unbounded steep utility fails the growth gate
    const auto rep3 = ui_condition_check(goals::Utility::power(0.9), k, unit_density, 0.5, 1.0,
                                         3.0, 77);
    CHECK_FALSE(rep3.growth_condition_pass);
}

TEST_CASE("admissible strategies have nonnegative terminal liquidation value") {
    const TimeGrid grid(1.0, 8);
    const Cone k = cone01();
    const auto prices = simulate_prices(martingale2(0.25), grid, 29, 50);
    rng::Stream st(83);
    const std::vector<double> x{1.0, 1.0};
    int admissible_seen = 0;
    for (int r = 0; r < 50; ++r) {
        const PricePathView view{&prices, r};
        // random K-decreasing tinkering, admissible or not
        std::vector<double> vals(static_cast<std::size_t>(grid.n_nodes()) * 2, 0.0);
        double c0 = 0, c1 = 0;
        for (int node = 0; node < grid.n_nodes(); ++node) {
            if (st.u01() < 0.4) {
                const double a = 0.2 * st.u01();
                if (st.u01() < 0.5) { c0 -= 1.1 * a; c1 += a; }
                else { c0 += a / 1.1; c1 -= a; }
            }
            vals[static_cast<std::size_t>(node) * 2] = c0;
            vals[static_cast<std::size_t>(node) * 2 + 1] = c1;
        }
        const auto b = FVPath::from_values(grid, 2, std::move(vals));
        if (is_admissible(x, b, view, k)) {
            ++admissible_seen;
            const auto p = evolve(x, b, view);
            CHECK(liquidation(k, p.monetary_at(p.n_nodes - 1)) >= -1e-9);
        }
    }
    CHECK(admissible_seen > 0);
}

TEST_CASE("price csv dump") {
    const TimeGrid grid(0.5, 2);
    const auto s = simulate_prices(martingale2(0.1), grid, 31, 2);
    std::ostringstream out;
    write_price_csv(s, out);
    const auto text = out.str();
    CHECK(text.rfind("path_id,t,S1,S2", 0) == 0);
    int rows = 0;
    for (char ch : text)
        if (ch == '\n') ++rows;
    CHECK(rows == 1 + 2 * grid.n_nodes());
}
