#pragma once

#include "scl/goals.hpp"
#include "scl/grid.hpp"
#include "scl/paths.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace scl::storage {

/// Continuous demand process sampled at the grid nodes; piecewise-linear in
/// between for integrand evaluation, node-exact for the dynamics.
struct DemandModel {
    enum class Kind { brownian_drift, ornstein_uhlenbeck };
    Kind kind = Kind::brownian_drift;
    int dim = 1;                // state dimension k
    std::vector<double> x0;
    std::vector<double> mu;     // drift (brownian) per component
    std::vector<double> sigma;  // volatility per component
    double rate = 0.0;          // mean-reversion rate (OU)
    std::vector<double> mean;   // long-run mean (OU)

    static DemandModel brownian(std::vector<double> x0, std::vector<double> mu,
                                std::vector<double> sigma);
    static DemandModel ou(std::vector<double> x0, double rate, std::vector<double> mean,
                          std::vector<double> sigma);
    void validate() const;
};

struct DemandSampleSet {
    TimeGrid grid;
    int dim = 0;
    int n_paths = 0;
    std::vector<double> data; // path-major [r][node][comp]

    double at(int r, int k, int i) const {
        return data[(static_cast<std::size_t>(r) * grid.n_nodes() + k) * dim + i];
    }
    std::uint64_t checksum() const;
};

struct DemandPathView {
    const DemandSampleSet* set = nullptr;
    int r = 0;
    double at(int k, int i) const { return set->at(r, k, i); }
    const TimeGrid& grid() const { return set->grid; }
    int dim() const { return set->dim; }
};

DemandSampleSet simulate_demand(const DemandModel& model, const TimeGrid& grid,
                                std::uint64_t seed, int n_paths);
DemandSampleSet simulate_demand_serial(const DemandModel& model, const TimeGrid& grid,
                                       std::uint64_t seed, int n_paths);
void write_demand_csv(const DemandSampleSet& s, std::ostream& out);

/// Pair of increasing controls under a shared total-variation budget.
/// Jumps at time 0 (and at T) are allowed.
struct ControlPair {
    FVPath l_plus;
    FVPath l_minus;
    double budget = 0.0;

    ControlPair(FVPath plus, FVPath minus, double k_budget);
    double total_motion() const; // sum_j (L+_T + L-_T)
};

/// Bounded-continuous running cost g(t,z) from a small catalog.
struct RunningCost {
    enum class Kind { zero, constant, quadratic_capped };
    Kind kind = Kind::zero;
    double value = 0.0;  // constant level
    double weight = 1.0; // quadratic weight
    double cap = 1.0;    // quadratic cap
    std::vector<double> center;

    static RunningCost zero() { return {}; }
    static RunningCost constant(double v);
    static RunningCost quadratic_capped(double weight, double cap, std::vector<double> center);
    double eval(double t, std::span<const double> z) const;
    double sup_bound() const;
};

/// Trade cost h(t) = c0 + c1 t per control component, nonnegative on [0,T].
struct TradeCost {
    std::vector<double> c0, c1;

    static TradeCost constant(int d, double c);
    static TradeCost linear(std::vector<double> c0, std::vector<double> c1);
    double eval(double t, int j) const { return c0[j] + c1[j] * t; }
    double sup_bound(double horizon) const;
    void validate(double horizon) const;
};

/// Bounded-continuous terminal cost.
struct TerminalCost {
    enum class Kind { zero, soft_threshold };
    Kind kind = Kind::zero;
    double weight = 0.0;
    double threshold = 0.0;
    double scale = 1.0; // ramp width

    static TerminalCost zero() { return {}; }
    static TerminalCost soft_threshold(double weight, double threshold, double scale);
    double eval(std::span<const double> z) const;
    double sup_bound() const;
};

struct StorageCostSpec {
    int state_dim = 1;   // k
    int control_dim = 1; // d
    std::vector<double> a_plus;  // k x d
    std::vector<double> a_minus; // k x d
    RunningCost g;
    TradeCost h_plus, h_minus;
    TerminalCost terminal;

    void validate(double horizon) const;
};

/// Node values of Z_t = X_t + A+ L+_t - A- L-_t (right limits, jump at zero
/// included). Node-major layout, state_dim entries per node.
std::vector<double> storage_path(DemandPathView x, const ControlPair& l,
                                 const StorageCostSpec& spec);

/// Running cost of the controlled storage: trapezoid in the demand between
/// nodes with the control's step structure respected, exact Stieltjes sums for
/// the trade costs (atoms included), plus the terminal cost.
double cost(DemandPathView x, const ControlPair& l, const StorageCostSpec& spec);

/// Cost of doing nothing, used as a pathwise benchmark.
double uncontrolled_cost(DemandPathView x, const StorageCostSpec& spec);

/// Goal functionals on expenditure samples, in maximization convention.
struct StorageGoal {
    enum class Kind { expectation, goal_reaching, cpt };
    Kind kind = Kind::expectation;
    double threshold = 0.0; // goal_reaching: P(W > b)
    goals::CPTSpec cpt;
};

struct GoalValue {
    double value = 0.0;
    bool diverged = false;
};

/// expectation -> -mean(W); goal_reaching -> -P(W > b);
/// cpt -> gains u+((zeta - W)+), losses u-((zeta - W)-).
GoalValue storage_goal(std::span<const double> cost_samples,
                       std::span<const double> benchmark_samples, const StorageGoal& goal);

} // namespace scl::storage
