#include "scl/verify.hpp"

#include "scl/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace scl::verify {

FVPath random_fv_path(const TimeGrid& grid, int dim, rng::Stream& st, double jump_scale) {
    std::vector<double> values(static_cast<std::size_t>(grid.n_nodes()) * dim);
    for (double& v : values) v = jump_scale * st.normal();
    return FVPath::from_values(grid, dim, std::move(values));
}

FVPath random_k_decreasing_path(const TimeGrid& grid, const Cone& cone, rng::Stream& st,
                                double scale) {
    const int d = cone.dim();
    const int n = grid.n_nodes();
    std::vector<double> values(static_cast<std::size_t>(n) * d, 0.0);
    std::vector<double> cum(d, 0.0);
    for (int k = 0; k < n; ++k) {
        if (st.u01() > 0.3) { // sparse jumps
            for (int g = 0; g < cone.n_generators(); ++g) {
                const double w = st.u01() < 0.5 ? 0.0 : scale * st.u01();
                if (w == 0.0) continue;
                const auto gen = cone.generator(g);
                for (int c = 0; c < d; ++c) cum[c] -= w * gen[c];
            }
        }
        for (int c = 0; c < d; ++c) values[static_cast<std::size_t>(k) * d + c] = cum[c];
    }
    return FVPath::from_values(grid, d, std::move(values));
}

search::MarketPolicy sample_market_band_policy(rng::Stream& st,
                                               const search::MarketInstance& inst) {
    search::MarketPolicy p;
    p.kind = search::MarketPolicy::Kind::band;
    const int d = static_cast<int>(inst.endowment.size());
    for (int a = 1; a < d; ++a) {
        const double base = inst.endowment[a] != 0.0 ? std::abs(inst.endowment[a]) : 1.0;
        const double lo = base * (0.30 + 0.60 * st.u01());
        const double hi = base * (1.05 + 0.95 * st.u01());
        p.lower.push_back(lo);
        p.upper.push_back(hi);
        p.target.push_back(lo + (hi - lo) * st.u01());
    }
    return p;
}

MetricAxiomResult metric_axiom_suite(const TimeGrid& grid, int dim, int n_triples,
                                     std::uint64_t seed, double tol) {
    MetricAxiomResult res;
    res.n_triples = n_triples;
    res.zero_iff_equal_ok = true;
    res.clip_bound_ok = true;
    rng::Stream st(seed, "metric-axioms");
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < n_triples; ++i) {
        const FVPath f = random_fv_path(grid, dim, st);
        const FVPath g = random_fv_path(grid, dim, st);
        const FVPath h = random_fv_path(grid, dim, st);
        const double dfg = mz_distance(f, g);
        const double dgf = mz_distance(g, f);
        const double dfh = mz_distance(f, h);
        const double dgh = mz_distance(g, h);
        res.max_symmetry_error = std::max(res.max_symmetry_error, std::abs(dfg - dgf));
        res.max_triangle_violation = std::max(res.max_triangle_violation, dfh - dfg - dgh);
        if (mz_distance(f, f) != 0.0) res.zero_iff_equal_ok = false;
        for (double d : {dfg, dfh, dgh})
            if (d > grid.horizon + 1.0 + tol) res.clip_bound_ok = false;
        if (i % 100 == 0) {
            // perturb one node: the distance must become strictly positive
            std::vector<double> vals(f.values_flat().begin(), f.values_flat().end());
            vals[static_cast<std::size_t>(i % f.n_nodes()) * dim] += 2.0;
            const FVPath fp = FVPath::from_values(grid, dim, std::move(vals));
            if (!(mz_distance(f, fp) > 0.0)) res.zero_iff_equal_ok = false;
        }
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.pass = res.max_symmetry_error <= tol && res.max_triangle_violation <= tol &&
               res.zero_iff_equal_ok && res.clip_bound_ok;
    return res;
}

DualityResult duality_suite(std::span<const TransactionCostSpec> specs, int n_points_per_cone,
                            std::uint64_t seed, double dual_tol, double identity_tol) {
    DualityResult res;
    rng::Stream st(seed, "duality");
    for (const auto& spec : specs) {
        const Cone cone = Cone::from_costs(spec);
        const LambdaSection lam = lambda_section(cone);
        std::vector<double> x(spec.dim), mx(spec.dim);
        for (int i = 0; i < n_points_per_cone; ++i) {
            for (int c = 0; c < spec.dim; ++c) {
                x[c] = 2.0 * st.normal();
                mx[c] = -x[c];
            }
            const double ell = liquidation(cone, x);
            const double ell_dual = liquidation_via_lambda(lam, x);
            const double wp = purchase(cone, x);
            res.max_primal_dual_gap = std::max(res.max_primal_dual_gap, std::abs(ell - ell_dual));
            res.max_identity_error =
                std::max(res.max_identity_error, std::abs(wp + liquidation(cone, mx)));
            ++res.n_points;
        }
    }
    res.pass = res.max_primal_dual_gap <= dual_tol && res.max_identity_error <= identity_tol;
    return res;
}

DerivativeResult derivative_suite(const TimeGrid& grid, const Cone& cone, int n_paths,
                                  std::uint64_t seed, double membership_tol,
                                  double reconstruction_tol) {
    DerivativeResult res;
    res.n_paths = n_paths;
    rng::Stream st(seed, "derivative");
    const int d = cone.dim();
    bool ok = true;
    std::vector<double> neg(d), rebuilt(d);
    for (int i = 0; i < n_paths; ++i) {
        const FVPath f = random_k_decreasing_path(grid, cone, st);
        const auto deriv = rn_derivative(f);
        if (deriv.empty()) continue;
        std::fill(rebuilt.begin(), rebuilt.end(), 0.0);
        for (int k = 0; k < f.n_nodes(); ++k) {
            const double w = deriv.weights[k];
            if (w > 0.0) {
                const auto dir = deriv.direction_at(k, d);
                for (int c = 0; c < d; ++c) neg[c] = -dir[c];
                if (!cone.contains(neg, membership_tol)) {
                    ok = false;
                    // size of the defect against the dual generators
                    double worst = 0.0;
                    for (int g = 0; g < cone.n_dual_generators(); ++g) {
                        const auto a = cone.dual_generator(g);
                        double s = 0.0;
                        for (int c = 0; c < d; ++c) s += a[c] * neg[c];
                        worst = std::min(worst, s);
                    }
                    res.max_membership_defect = std::max(res.max_membership_defect, -worst);
                }
                for (int c = 0; c < d; ++c) rebuilt[c] += w * dir[c];
            }
            for (int c = 0; c < d; ++c)
                res.max_reconstruction_error =
                    std::max(res.max_reconstruction_error, std::abs(rebuilt[c] - f.value(k, c)));
        }
        const auto gram = gram_monotonicity_check(f, cone, MonotoneDirection::decreasing);
        if (!gram.scalar_components_monotone) ok = false;
        res.max_gram_error = std::max(res.max_gram_error, gram.max_reconstruction_error);
    }
    res.pass = ok && res.max_reconstruction_error <= reconstruction_tol &&
               res.max_gram_error <= 1e-8;
    return res;
}

market::VariationBoundReport variation_bound_suite(const search::MarketInstance& inst,
                                                   const TimeGrid& grid, int n_strategies,
                                                   int n_paths, std::uint64_t seed) {
    const auto cps = market::make_cps(inst.model, inst.cone);
    const auto prices =
        market::simulate_prices(inst.model, grid, rng::derive_seed(seed, "vb-prices"), n_paths);

    std::vector<search::MarketPolicy> policies;
    rng::Stream ps(seed, "vb-policies");
    for (int s = 0; s < n_strategies; ++s) policies.push_back(sample_market_band_policy(ps, inst));

    std::vector<double> variations(n_paths, 0.0);
    par::parallel_for(n_paths, [&](std::int64_t r) {
        rng::Stream xi(seed, "vb-xi", static_cast<std::uint64_t>(r));
        const auto& pol = policies[xi.uniform_index(policies.size())];
        market::PricePathView view{&prices, static_cast<int>(r)};
        const auto emitted = emit_market_control(pol, inst, view);
        variations[r] = total_variation(emitted.control);
    });
    return market::variation_bound_check(inst.cone, inst.endowment, variations, cps,
                                         rng::derive_seed(seed, "vb-boot"), 0.99);
}

SupermartingaleSuiteResult supermartingale_suite(const search::MarketInstance& inst,
                                                 const TimeGrid& grid, int n_strategies,
                                                 int n_paths, std::uint64_t seed) {
    SupermartingaleSuiteResult res;
    res.n_strategies = n_strategies;
    const auto prices =
        market::simulate_prices(inst.model, grid, rng::derive_seed(seed, "sm-prices"), n_paths);
    rng::Stream ps(seed, "sm-policies");
    for (int s = 0; s < n_strategies; ++s) {
        const auto policy = sample_market_band_policy(ps, inst);
        auto strategy = [&](market::PricePathView view) {
            return emit_market_control(policy, inst, view).control;
        };
        const auto rep = market::supermartingale_check(inst.endowment, strategy, prices, inst.cone);
        if (!rep.pass) ++res.strategies_failed;
        res.total_violations += rep.violations;
        res.worst_excess = std::max(res.worst_excess, rep.worst_excess);
    }
    res.pass = res.strategies_failed == 0;
    return res;
}

EmbeddingResult embedding_suite(const search::MarketInstance& inst, const TimeGrid& grid,
                                int n_strategies, int n_paths, std::uint64_t seed, double tol) {
    EmbeddingResult res;
    res.n_strategies = n_strategies;
    const auto prices =
        market::simulate_prices(inst.model, grid, rng::derive_seed(seed, "emb-prices"), n_paths);
    rng::Stream st(seed, "emb-policies");
    const int d = prices.dim;
    for (int s = 0; s < n_strategies; ++s) {
        market::PricePathView view{&prices, s % n_paths};
        const auto policy = sample_market_band_policy(st, inst);
        FVPath b = emit_market_control(policy, inst, view).control;

        const int mode = s % 4; // 0,1: admissible as built; 2: break monotonicity; 3: break admissibility
        if (mode == 2) {
            std::vector<double> vals(b.values_flat().begin(), b.values_flat().end());
            const int node = static_cast<int>(st.uniform_index(b.n_nodes()));
            const int comp = 1 + static_cast<int>(st.uniform_index(d - 1));
            const double bump = 0.1 + st.u01();
            for (int k = node; k < b.n_nodes(); ++k)
                vals[static_cast<std::size_t>(k) * d + comp] += bump;
            b = FVPath::from_values(grid, d, std::move(vals));
        } else if (mode == 3) {
            const auto port = market::evolve(inst.endowment, b, view);
            const int node = static_cast<int>(st.uniform_index(b.n_nodes()));
            const double drop =
                liquidation(inst.cone, port.monetary_at(node)) + 0.5 + st.u01();
            std::vector<double> vals(b.values_flat().begin(), b.values_flat().end());
            for (int k = node; k < b.n_nodes(); ++k)
                vals[static_cast<std::size_t>(k) * d + 0] -= drop;
            b = FVPath::from_values(grid, d, std::move(vals));
        }

        const auto residuals = market::constraint_residuals(inst.endowment, b, view, inst.cone);
        double min_res = std::numeric_limits<double>::infinity();
        for (double r : residuals) min_res = std::min(min_res, r);
        const bool by_residuals = min_res >= -tol;
        const bool direct = is_k_monotone(b, inst.cone, MonotoneDirection::decreasing, tol) &&
                            market::is_admissible(inst.endowment, b, view, inst.cone, tol);
        if (by_residuals != direct) ++res.disagreements;
    }
    res.pass = res.disagreements == 0;
    return res;
}

} // namespace scl::verify
