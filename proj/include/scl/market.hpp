#pragma once

#include "scl/cones.hpp"
#include "scl/goals.hpp"
#include "scl/grid.hpp"
#include "scl/paths.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace scl::market {

/// Geometric Brownian prices with the first asset as a constant-one numeraire.
/// S_0 = 1 componentwise; the martingale kind pins all drifts to zero.
struct PriceModel {
    enum class Kind { martingale_gbm, drifted_gbm };
    Kind kind = Kind::martingale_gbm;
    int dim = 2;
    std::vector<double> sigma;       // per asset, sigma[0] == 0
    std::vector<double> mu;          // per asset, mu[0] == 0; all zero for martingale kind
    std::vector<double> correlation; // dim x dim, identity row/col for the numeraire

    static PriceModel independent(Kind kind, std::vector<double> sigma, std::vector<double> mu);
    void validate() const;
};

struct PriceSampleSet {
    TimeGrid grid;
    int dim = 0;
    int n_paths = 0;
    std::vector<double> data; // path-major [r][node][asset]

    double at(int r, int k, int i) const {
        return data[(static_cast<std::size_t>(r) * grid.n_nodes() + k) * dim + i];
    }
    std::span<const double> path(int r) const {
        const std::size_t len = static_cast<std::size_t>(grid.n_nodes()) * dim;
        return {data.data() + static_cast<std::size_t>(r) * len, len};
    }
    std::uint64_t checksum() const;
};

/// One path inside a sample set.
struct PricePathView {
    const PriceSampleSet* set = nullptr;
    int r = 0;
    double at(int k, int i) const { return set->at(r, k, i); }
    const TimeGrid& grid() const { return set->grid; }
    int dim() const { return set->dim; }
};

/// Exact log-Euler scheme per component, reproducible from the seed; one
/// independent stream per path so the OpenMP and serial kernels agree bitwise.
PriceSampleSet simulate_prices(const PriceModel& model, const TimeGrid& grid, std::uint64_t seed,
                               int n_paths);
PriceSampleSet simulate_prices_serial(const PriceModel& model, const TimeGrid& grid,
                                      std::uint64_t seed, int n_paths);

/// CSV dump `path_id,t,S1,...,Sd` (17 significant digits).
void write_price_csv(const PriceSampleSet& s, std::ostream& out);

/// Portfolio along one price path: physical units V-hat = x + (1/S).B with the
/// time-zero atom, and monetary values V = S ⊙ V-hat.
struct PortfolioPath {
    int dim = 0;
    int n_nodes = 0;
    std::vector<double> physical; // node-major
    std::vector<double> monetary; // node-major

    std::span<const double> physical_at(int k) const {
        return {physical.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> monetary_at(int k) const {
        return {monetary.data() + static_cast<std::size_t>(k) * dim, static_cast<std::size_t>(dim)};
    }
};

PortfolioPath evolve(std::span<const double> x, const FVPath& b, PricePathView prices);

/// The immediate-liquidation control L^x: a single jump l(x) e1 - x at time 0.
FVPath liquidation_strategy(const Cone& cone, std::span<const double> x, const TimeGrid& grid);

/// Admissibility: monetary V_t in K at every node.
bool is_admissible(std::span<const double> x, const FVPath& b, PricePathView prices,
                   const Cone& cone, double tol = kMembershipTol);

/// Finite truncation of the countable constraint family: hat test functions at
/// every node against the -K* generators (monotonicity block), and the K*
/// generators against the monetary portfolio at every node (admissibility
/// block). All entries >= -tol iff the strategy is K-decreasing and admissible
/// with respect to these finite test sets.
std::vector<double> constraint_residuals(std::span<const double> x, const FVPath& b,
                                         PricePathView prices, const Cone& cone);

/// eps-consistent price system built as Z = S for martingale models, so that
/// M = Z/Z^(1) = S, Z/S = 1 and Q = P. The margin is geometric:
/// eps = epsilon_margin(1). Requires strictly positive fees (the dual must sit
/// inside the open orthant) and a martingale price model.
struct EpsCps {
    double epsilon = 0.0;
    double q_density_terminal = 1.0; // Z_T^(1), identically one here
};
EpsCps make_cps(const PriceModel& model, const Cone& cone);

/// Monte Carlo estimate of E_Q[Var_T B] with a bootstrap CI against the bound
/// purchase(x)/eps. Flags a violation when the CI lower end exceeds the bound.
struct VariationBoundReport {
    double estimate = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    double bound = 0.0;
    double max_observed = 0.0;
    int n = 0;
    bool pass = false;
};
VariationBoundReport variation_bound_check(const Cone& cone, std::span<const double> x,
                                           std::span<const double> variation_samples,
                                           const EpsCps& cps, std::uint64_t seed,
                                           double ci_level = 0.99);

/// Estimates t -> E_Q[M_t . V-hat_t] on the grid (with Z = S this is the total
/// monetary wealth) and asserts non-increase between consecutive nodes up to
/// 3 Monte Carlo standard errors of the two node estimates.
struct SupermartingaleReport {
    std::vector<double> node_means;
    std::vector<double> node_ses;
    int violations = 0;
    double worst_excess = 0.0; // largest positive increase beyond the tolerance
    bool pass = false;
};
SupermartingaleReport supermartingale_check(
    std::span<const double> x, const std::function<FVPath(PricePathView)>& strategy,
    const PriceSampleSet& prices, const Cone& cone);

/// Sufficient-condition checker for uniform integrability of the utility:
/// (i) U(x) <= C (1 + l(x)^gamma) on sampled cone points,
/// (ii) E[(Z_T^(1))^(1-q)] finite, estimated from the supplied density samples.
/// Requires q > 1/(1-gamma).
struct UiConditionReport {
    bool growth_condition_pass = false;
    double max_growth_gap = 0.0; // max of U - C(1+l^gamma) over the sample
    bool moment_condition_pass = false;
    double moment_estimate = 0.0;
    bool pass = false;
};
UiConditionReport ui_condition_check(const goals::Utility& u, const Cone& cone,
                                     std::span<const double> z1_terminal_samples, double gamma,
                                     double big_c, double q, std::uint64_t seed,
                                     int n_points = 2000);

} // namespace scl::market
