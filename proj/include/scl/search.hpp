#pragma once

#include "scl/cones.hpp"
#include "scl/goals.hpp"
#include "scl/grid.hpp"
#include "scl/market.hpp"
#include "scl/paths.hpp"
#include "scl/storage.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scl::search {

enum class ModelKind { market, storage };

/// Pure market strategy: keep each risky asset's monetary value inside a band
/// (trade back to the target when it escapes), or rebalance wealth fractions
/// with a no-trade width. Trades are clipped so positions stay long-only,
/// which keeps the portfolio admissible by construction.
struct MarketPolicy {
    enum class Kind { band, rebalance };
    Kind kind = Kind::band;
    std::vector<double> lower, upper, target; // band, one entry per risky asset
    std::vector<double> fraction;             // rebalance targets per risky asset
    double width = 0.0;                       // rebalance no-trade half-width
};

/// Pure storage strategy: a reflecting band on the storage level (escapes are
/// pushed back to the violated edge; a start outside the band is repositioned
/// to the target), or a single conditional jump used to build explicit menus.
/// Emission clips to the remaining budget.
struct StoragePolicy {
    enum class Kind { band, threshold_jump };
    Kind kind = Kind::band;
    double lower = 0.0, upper = 0.0, target = 0.0;
    // threshold_jump: at `node`, if X^(1) is below/above `threshold`, add
    // `size` to the +/- leg.
    int node = 0;
    double size = 0.0, threshold = 0.0;
    bool if_below = true, leg_plus = true;
};

struct MarketInstance {
    market::PriceModel model;
    TransactionCostSpec costs;
    Cone cone;
    std::vector<double> endowment;
};

struct StorageInstance {
    storage::DemandModel demand;
    storage::StorageCostSpec spec;
    double budget = 1.0;
};

/// Goal functional for the market model, evaluated on liquidation values.
struct MarketGoal {
    enum class Kind { expectation, goal_reaching, yaari, cpt };
    Kind kind = Kind::expectation;
    goals::Utility utility = goals::Utility::identity(); // expectation: mean U(l(V_T))
    double threshold = 0.0;                              // goal_reaching: P(l >= b)
    goals::Distortion distortion = goals::Distortion::identity(); // yaari
    goals::CPTSpec cpt;
    enum class Benchmark { constant, endowment_liquidation };
    Benchmark benchmark = Benchmark::constant;
    double benchmark_value = 0.0;
};

/// Storage goal plus the pathwise benchmark rule for the CPT case.
struct StorageGoalSpec {
    storage::StorageGoal goal;
    enum class Benchmark { constant, uncontrolled_cost };
    Benchmark benchmark = Benchmark::uncontrolled_cost;
    double benchmark_value = 0.0;
};

/// Finite-dimensional strategy family: a parameter box mapped to policies
/// (parameters are sanitized so every box point emits an admissible control),
/// or an explicit finite menu.
struct PolicyFamily {
    ModelKind model = ModelKind::storage;
    enum class Kind { band, rebalance, finite_menu };
    Kind kind = Kind::band;
    std::vector<double> lo, hi; // parameter box
    std::vector<MarketPolicy> market_menu;
    std::vector<StoragePolicy> storage_menu;

    int n_params() const;
    int menu_size() const;
    MarketPolicy market_policy(std::span<const double> params, int n_assets) const;
    StoragePolicy storage_policy(std::span<const double> params) const;
    void validate() const;
};

/// Mixture of pure parameter vectors; the uniform randomizer xi picks the
/// component per replication, from an RNG stream independent of the noise.
struct RandomizedPolicy {
    std::vector<std::vector<double>> components;
    std::vector<double> weights;

    static RandomizedPolicy pure(std::vector<double> params);
    void validate() const;
};

struct EmitResult {
    FVPath control; // monetary trades
    bool fallback = false;
};

/// Deterministic control for one price path; forward-in-time so the trade at
/// t_k depends only on the path up to t_k.
EmitResult emit_market_control(const MarketPolicy& policy, const MarketInstance& inst,
                               market::PricePathView prices);

storage::ControlPair emit_storage_control(const StoragePolicy& policy,
                                          const StorageInstance& inst,
                                          storage::DemandPathView demand);

/// A bound optimization problem: one model, one goal, a base grid.
struct Problem {
    ModelKind kind = ModelKind::storage;
    std::optional<MarketInstance> market;
    std::optional<MarketGoal> market_goal;
    std::optional<StorageInstance> storage;
    std::optional<StorageGoalSpec> storage_goal;
    TimeGrid grid;
};

/// Monte Carlo evaluation context: presimulated noise shared by every
/// candidate (common random numbers), per-path xi stream, pooled-law goal
/// evaluation with a 200-resample percentile bootstrap.
class Evaluator {
public:
    Evaluator(const Problem& problem, int grid_steps, int n_paths, std::uint64_t master_seed);

    struct PathOutcomes {
        std::vector<double> outcome;   // l(V_T) or W^L per path
        std::vector<double> benchmark; // aligned benchmark values
        std::vector<double> variation; // Var_T B / total control motion per path
        std::vector<int> component;    // xi-selected mixture component
        bool any_fallback = false;
    };

    PathOutcomes compute_outcomes(const PolicyFamily& family, const RandomizedPolicy& policy,
                                  bool parallel) const;
    /// Serial twin of the OpenMP kernel, kept for testing.
    PathOutcomes compute_outcomes_serial(const PolicyFamily& family,
                                         const RandomizedPolicy& policy) const {
        return compute_outcomes(family, policy, false);
    }

    struct Value {
        double value = 0.0;
        double ci_lo = 0.0, ci_hi = 0.0;
        bool diverged = false;
    };
    Value evaluate(const PolicyFamily& family, const RandomizedPolicy& policy) const;
    Value value_of_outcomes(const PathOutcomes& o) const;

    /// Goal value on the pooled law without the bootstrap; the search loop
    /// uses this and re-evaluates the incumbent with a CI afterwards.
    double quick_value(const PolicyFamily& family, const RandomizedPolicy& policy,
                       bool* diverged = nullptr) const;

    int n_paths() const { return n_paths_; }
    const TimeGrid& grid() const { return grid_; }
    std::uint64_t noise_checksum() const;
    std::uint64_t master_seed() const { return master_seed_; }
    const Problem& problem() const { return *problem_; }
    const market::PriceSampleSet& prices() const { return prices_; }
    const storage::DemandSampleSet& demand() const { return demand_; }

private:
    const Problem* problem_;
    TimeGrid grid_;
    int n_paths_;
    std::uint64_t master_seed_;
    market::PriceSampleSet prices_;
    storage::DemandSampleSet demand_;
    std::vector<double> benchmark_; // per path
};

struct RefinementRow {
    int grid_steps = 0;
    int n_paths = 0;
    double value = 0.0, ci_lo = 0.0, ci_hi = 0.0;
};

struct Histogram {
    std::vector<double> edges;
    std::vector<int> counts;
    double mean = 0.0, max = 0.0;
};

struct SearchReport {
    std::vector<double> best_params;
    double best_value = 0.0, ci_lo = 0.0, ci_hi = 0.0;
    int evaluations = 0;
    std::vector<double> best_trace; // nondecreasing best-so-far values
    std::vector<RefinementRow> refinement;
    double max_successive_gap = 0.0;
    double final_gap = 0.0;
    bool stable = false;
    Histogram variation;
    double variation_envelope = 0.0; // purchase(x)/eps (market) or the budget (storage)
    bool envelope_ok = true;
    std::vector<std::string> flags;
    std::uint64_t noise_checksum = 0;

    std::string to_json() const;
    std::string refinement_csv() const;
};

/// Derivative-free maximization: center-out grid sweep, coordinate
/// refinement, then a seeded random polish. Strict improvement only, so the
/// best-so-far trace is monotone and a flat landscape keeps the box center.
SearchReport optimize(const Problem& problem, const PolicyFamily& family, int n_paths, int budget,
                      std::uint64_t master_seed);

/// Optimal value per (grid, sample size) under a common seed schedule, with a
/// stability verdict on the successive-value gaps.
SearchReport refinement_study(const Problem& problem, const PolicyFamily& family,
                              std::span<const int> grids, std::span<const int> sample_sizes,
                              int budget, std::uint64_t master_seed);

struct BenefitReport {
    double best_pure = 0.0;
    int best_pure_index = 0;
    double best_mix = 0.0;
    std::vector<double> best_weights;
    double gap = 0.0;
    double mix_ci_half_width = 0.0;
    bool strict_benefit = false; // gap > 2 x half-width

    std::string to_json() const;
};

/// Best pure menu entry vs best mixture over a 0.05-step weight grid.
BenefitReport randomization_benefit(const Problem& problem, const PolicyFamily& menu_family,
                                    int n_paths, std::uint64_t master_seed);

} // namespace scl::search
