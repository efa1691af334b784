#pragma once

#include "scl/cones.hpp"
#include "scl/grid.hpp"
#include "scl/market.hpp"
#include "scl/paths.hpp"
#include "scl/rng.hpp"
#include "scl/search.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace scl::verify {

/// Random path generation shared by the metric and derivative suites.
FVPath random_fv_path(const TimeGrid& grid, int dim, rng::Stream& st, double jump_scale = 1.0);

/// Random K-decreasing path: cumulative sums of -K increments.
FVPath random_k_decreasing_path(const TimeGrid& grid, const Cone& cone, rng::Stream& st,
                                double scale = 0.25);

/// Random band policy around the initial monetary holdings.
search::MarketPolicy sample_market_band_policy(rng::Stream& st,
                                               const search::MarketInstance& inst);

/// Metric axioms on random path triples: symmetry and the triangle inequality
/// within tol; d(f,g)=0 iff the node values agree; d <= T+1.
struct MetricAxiomResult {
    int n_triples = 0;
    double max_symmetry_error = 0.0;
    double max_triangle_violation = 0.0;
    bool zero_iff_equal_ok = false;
    bool clip_bound_ok = false;
    double seconds = 0.0;
    bool pass = false;
};
MetricAxiomResult metric_axiom_suite(const TimeGrid& grid, int dim, int n_triples,
                                     std::uint64_t seed, double tol = 1e-12);

/// Primal LP liquidation against the Lambda-vertex minimum, and the purchase
/// identity p(x) = -l(-x), on random points.
struct DualityResult {
    int n_points = 0;
    double max_primal_dual_gap = 0.0;
    double max_identity_error = 0.0;
    bool pass = false;
};
DualityResult duality_suite(std::span<const TransactionCostSpec> specs, int n_points_per_cone,
                            std::uint64_t seed, double dual_tol = 1e-8,
                            double identity_tol = 1e-12);

/// Derivative representation of K-decreasing paths: every derivative vector
/// lies in -K and integrating it against dVar reproduces the path.
struct DerivativeResult {
    int n_paths = 0;
    double max_membership_defect = 0.0; // worst epsilon needed in contains(-K)
    double max_reconstruction_error = 0.0;
    double max_gram_error = 0.0;
    bool pass = false;
};
DerivativeResult derivative_suite(const TimeGrid& grid, const Cone& cone, int n_paths,
                                  std::uint64_t seed, double membership_tol = 1e-9,
                                  double reconstruction_tol = 1e-10);

/// Monte Carlo check of E_Q[Var_T B] <= purchase(x)/eps over random admissible
/// band strategies mixed across paths.
market::VariationBoundReport variation_bound_suite(const search::MarketInstance& inst,
                                                   const TimeGrid& grid, int n_strategies,
                                                   int n_paths, std::uint64_t seed);

/// Non-increase of the expected discounted wealth for random admissible band
/// strategies, each checked at 3 standard errors between consecutive nodes.
struct SupermartingaleSuiteResult {
    int n_strategies = 0;
    int strategies_failed = 0;
    int total_violations = 0;
    double worst_excess = 0.0;
    bool pass = false;
};
SupermartingaleSuiteResult supermartingale_suite(const search::MarketInstance& inst,
                                                 const TimeGrid& grid, int n_strategies,
                                                 int n_paths, std::uint64_t seed);

/// Agreement of the finite constraint-residual truncation with the direct
/// monotonicity + admissibility predicates, on strategies constructed half
/// admissible, half perturbed to violate.
struct EmbeddingResult {
    int n_strategies = 0;
    int disagreements = 0;
    bool pass = false;
};
EmbeddingResult embedding_suite(const search::MarketInstance& inst, const TimeGrid& grid,
                                int n_strategies, int n_paths, std::uint64_t seed,
                                double tol = 1e-9);

} // namespace scl::verify
