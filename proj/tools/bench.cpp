// Timing comparison of the OpenMP kernels against their serial reference
// implementations: price/demand simulation, policy evaluation, MZ matrix.

#include "scl/market.hpp"
#include "scl/parallel.hpp"
#include "scl/paths.hpp"
#include "scl/rng.hpp"
#include "scl/search.hpp"
#include "scl/storage.hpp"
#include "scl/verify.hpp"

#include <chrono>
#include <cstdio>
#include <functional>

namespace {

double time_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-28s %10.1f ms %10.1f ms %8.2fx\n", name, serial_ms, parallel_ms,
                parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0);
}

} // namespace

int main() {
    scl::par::apply_thread_cap();
    std::printf("threads: %d\n", scl::par::active_threads());
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    const scl::TimeGrid grid(1.0, 64);
    const int n_paths = 20000;

    // price simulation
    auto model = scl::market::PriceModel::independent(
        scl::market::PriceModel::Kind::martingale_gbm, {0.0, 0.2}, {0.0, 0.0});
    double s_ms = time_ms([&] { scl::market::simulate_prices_serial(model, grid, 7, n_paths); });
    double p_ms = time_ms([&] { scl::market::simulate_prices(model, grid, 7, n_paths); });
    report("simulate_prices", s_ms, p_ms);

    // demand simulation
    auto demand = scl::storage::DemandModel::brownian({0.0}, {0.0}, {1.0});
    s_ms = time_ms([&] { scl::storage::simulate_demand_serial(demand, grid, 7, n_paths); });
    p_ms = time_ms([&] { scl::storage::simulate_demand(demand, grid, 7, n_paths); });
    report("simulate_demand", s_ms, p_ms);

    // market policy evaluation
    scl::search::Problem mp;
    mp.kind = scl::search::ModelKind::market;
    mp.grid = grid;
    mp.market = scl::search::MarketInstance{
        model, scl::TransactionCostSpec::uniform(2, 0.1),
        scl::Cone::from_costs(scl::TransactionCostSpec::uniform(2, 0.1)), {1.0, 1.0}};
    mp.market_goal = scl::search::MarketGoal{};
    scl::search::Evaluator ev(mp, 64, n_paths / 2, 11);
    scl::search::PolicyFamily fam;
    fam.model = scl::search::ModelKind::market;
    fam.kind = scl::search::PolicyFamily::Kind::band;
    fam.lo = {0.5, 1.1, 0.8};
    fam.hi = {0.9, 1.6, 1.2};
    const auto policy = scl::search::RandomizedPolicy::pure({0.7, 1.3, 1.0});
    s_ms = time_ms([&] { ev.compute_outcomes_serial(fam, policy); });
    p_ms = time_ms([&] { ev.compute_outcomes(fam, policy, true); });
    report("market_eval", s_ms, p_ms);

    // pairwise MZ distances
    scl::rng::Stream st(3);
    std::vector<scl::FVPath> paths;
    for (int i = 0; i < 600; ++i) paths.push_back(scl::verify::random_fv_path(grid, 2, st));
    s_ms = time_ms([&] { scl::mz_distance_matrix(paths, false); });
    p_ms = time_ms([&] { scl::mz_distance_matrix(paths, true); });
    report("mz_distance_matrix", s_ms, p_ms);
    return 0;
}
