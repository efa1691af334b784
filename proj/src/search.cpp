#include "scl/search.hpp"

#include "scl/parallel.hpp"
#include "scl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace scl::search {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

} // namespace

// ---------------------------------------------------------------------------
// policy families

int PolicyFamily::n_params() const {
    if (kind == Kind::finite_menu) return 1;
    return static_cast<int>(lo.size());
}

int PolicyFamily::menu_size() const {
    return model == ModelKind::market ? static_cast<int>(market_menu.size())
                                      : static_cast<int>(storage_menu.size());
}

void PolicyFamily::validate() const {
    if (kind == Kind::finite_menu) {
        if (menu_size() < 1) throw std::invalid_argument("PolicyFamily: empty menu");
        return;
    }
    if (lo.empty() || lo.size() != hi.size())
        throw std::invalid_argument("PolicyFamily: parameter box must be nonempty, lo/hi aligned");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] <= hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            throw std::invalid_argument("PolicyFamily: bad parameter box");
    if (kind == Kind::band && lo.size() % 3 != 0)
        throw std::invalid_argument("PolicyFamily: band box needs (lower,upper,target) triples");
}

MarketPolicy PolicyFamily::market_policy(std::span<const double> params, int n_assets) const {
    const int nr = n_assets - 1;
    MarketPolicy p;
    if (kind == Kind::finite_menu) {
        const int i = static_cast<int>(
            clamp(static_cast<double>(std::lround(params[0])), 0.0, menu_size() - 1.0));
        return market_menu[i];
    }
    if (kind == Kind::band) {
        if (static_cast<int>(params.size()) != 3 * nr)
            throw std::invalid_argument("market band policy needs 3 parameters per risky asset");
        p.kind = MarketPolicy::Kind::band;
        for (int a = 0; a < nr; ++a) {
            const double l = std::min(params[3 * a], params[3 * a + 1]);
            const double u = std::max(params[3 * a], params[3 * a + 1]);
            p.lower.push_back(l);
            p.upper.push_back(u);
            p.target.push_back(clamp(params[3 * a + 2], l, u));
        }
        return p;
    }
    if (static_cast<int>(params.size()) != nr + 1)
        throw std::invalid_argument("market rebalance policy needs one fraction per risky asset plus a width");
    p.kind = MarketPolicy::Kind::rebalance;
    for (int a = 0; a < nr; ++a) p.fraction.push_back(clamp(params[a], 0.0, 1.0));
    p.width = std::max(0.0, params[nr]);
    return p;
}

StoragePolicy PolicyFamily::storage_policy(std::span<const double> params) const {
    StoragePolicy p;
    if (kind == Kind::finite_menu) {
        const int i = static_cast<int>(
            clamp(static_cast<double>(std::lround(params[0])), 0.0, menu_size() - 1.0));
        return storage_menu[i];
    }
    if (kind != Kind::band)
        throw std::invalid_argument("storage families support band and finite_menu kinds");
    if (params.size() != 3)
        throw std::invalid_argument("storage band policy needs (lower,upper,target)");
    p.kind = StoragePolicy::Kind::band;
    p.lower = std::min(params[0], params[1]);
    p.upper = std::max(params[0], params[1]);
    p.target = clamp(params[2], p.lower, p.upper);
    return p;
}

RandomizedPolicy RandomizedPolicy::pure(std::vector<double> params) {
    RandomizedPolicy p;
    p.components.push_back(std::move(params));
    p.weights.push_back(1.0);
    return p;
}

void RandomizedPolicy::validate() const {
    if (components.empty() || components.size() != weights.size())
        throw std::invalid_argument("RandomizedPolicy: components/weights mismatch");
    double s = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("RandomizedPolicy: negative weight");
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-9)
        throw std::invalid_argument("RandomizedPolicy: weights must sum to one");
    for (const auto& c : components)
        if (c.size() != components[0].size())
            throw std::invalid_argument("RandomizedPolicy: ragged components");
}

// ---------------------------------------------------------------------------
// control emission

EmitResult emit_market_control(const MarketPolicy& policy, const MarketInstance& inst,
                               market::PricePathView prices) {
    const int d = prices.dim();
    const int n = prices.grid().n_nodes();
    EmitResult out{FVPath(prices.grid(), d), false};

    std::vector<double> vhat(inst.endowment.begin(), inst.endowment.end());
    std::vector<double> cum(d, 0.0);
    std::vector<double> values(static_cast<std::size_t>(n) * d, 0.0);

    auto sell = [&](int a, double money_out, double price, std::vector<double>& delta) {
        // exchange asset a -> numeraire; money_out is the asset-a monetary amount spent
        const double phys = money_out / price;
        const double avail = vhat[a];
        const double take = std::min(phys, avail);
        if (take <= 0.0) return;
        const double spend = take * price;
        const double recv = spend / (1.0 + inst.costs.at(a, 0));
        delta[a] -= spend;
        delta[0] += recv;
        vhat[a] -= take;
        vhat[0] += recv;
    };
    auto buy = [&](int a, double money_in, double price, std::vector<double>& delta) {
        // exchange numeraire -> asset a; money_in is the asset-a monetary amount acquired
        const double fee = 1.0 + inst.costs.at(0, a);
        double add = money_in;
        const double cash = vhat[0];
        if (fee * add > cash) add = cash / fee;
        if (add <= 0.0) return;
        delta[a] += add;
        delta[0] -= fee * add;
        vhat[a] += add / price;
        vhat[0] -= fee * add;
    };

    for (int k = 0; k < n; ++k) {
        std::vector<double> delta(d, 0.0);
        if (policy.kind == MarketPolicy::Kind::band) {
            for (int a = 1; a < d; ++a) {
                const double s = prices.at(k, a);
                const double m = s * vhat[a];
                const double lo = policy.lower[a - 1], hi = policy.upper[a - 1],
                             tg = policy.target[a - 1];
                if (m > hi)
                    sell(a, m - tg, s, delta);
                else if (m < lo)
                    buy(a, tg - m, s, delta);
            }
        } else {
            double wealth = vhat[0];
            for (int a = 1; a < d; ++a) wealth += prices.at(k, a) * vhat[a];
            if (wealth > 0.0) {
                for (int a = 1; a < d; ++a) {
                    const double s = prices.at(k, a);
                    const double m = s * vhat[a];
                    const double pi = policy.fraction[a - 1];
                    if (std::abs(m / wealth - pi) > policy.width) {
                        // trade sizes solve for the post-trade fraction, fees included
                        if (m > pi * wealth) {
                            const double fee = inst.costs.at(a, 0);
                            const double amount =
                                (m - pi * wealth) / (1.0 - pi * fee / (1.0 + fee));
                            sell(a, amount, s, delta);
                        } else {
                            const double fee = inst.costs.at(0, a);
                            const double amount = (pi * wealth - m) / (1.0 + pi * fee);
                            buy(a, amount, s, delta);
                        }
                    }
                }
            }
        }
        // long-only clipping keeps the portfolio inside the orthant, hence in K
        for (int c = 0; c < d; ++c) {
            if (vhat[c] < -1e-12) {
                out.fallback = true;
                break;
            }
        }
        if (out.fallback) {
            // liquidation continuation from the pre-trade position at this node
            std::vector<double> v(d);
            for (int c = 0; c < d; ++c) v[c] = (vhat[c] - delta[c] / prices.at(k, c)) * prices.at(k, c);
            const double ell = liquidation(inst.cone, v);
            for (int c = 0; c < d; ++c) delta[c] = (c == 0 ? ell : 0.0) - v[c];
            for (int kk = k; kk < n; ++kk)
                for (int c = 0; c < d; ++c)
                    values[static_cast<std::size_t>(kk) * d + c] = cum[c] + delta[c];
            return {FVPath::from_values(prices.grid(), d, std::move(values)), true};
        }
        for (int c = 0; c < d; ++c) {
            cum[c] += delta[c];
            values[static_cast<std::size_t>(k) * d + c] = cum[c];
        }
    }
    out.control = FVPath::from_values(prices.grid(), d, std::move(values));
    return out;
}

storage::ControlPair emit_storage_control(const StoragePolicy& policy, const StorageInstance& inst,
                                          storage::DemandPathView demand) {
    const auto& spec = inst.spec;
    const int n = demand.grid().n_nodes();
    const int dc = spec.control_dim;
    const int dk = spec.state_dim;
    std::vector<double> plus(static_cast<std::size_t>(n) * dc, 0.0);
    std::vector<double> minus(static_cast<std::size_t>(n) * dc, 0.0);
    std::vector<double> cum_plus(dc, 0.0), cum_minus(dc, 0.0);
    double remaining = inst.budget;

    auto state_shift = [&](int i) {
        double s = 0.0;
        for (int j = 0; j < dc; ++j) {
            s += spec.a_plus[static_cast<std::size_t>(i) * dc + j] * cum_plus[j];
            s -= spec.a_minus[static_cast<std::size_t>(i) * dc + j] * cum_minus[j];
        }
        return s;
    };

    for (int k = 0; k < n; ++k) {
        if (policy.kind == StoragePolicy::Kind::band) {
            if (dk != dc)
                throw std::invalid_argument("storage band policy requires state_dim == control_dim");
            for (int j = 0; j < dc; ++j) {
                const double z = demand.at(k, j) + state_shift(j);
                const double gain_up = spec.a_plus[static_cast<std::size_t>(j) * dc + j];
                const double gain_dn = spec.a_minus[static_cast<std::size_t>(j) * dc + j];
                // Reflection at the band edges; a start outside the band is
                // repositioned to the target instead.
                const double restore_lo = k == 0 ? policy.target : policy.lower;
                const double restore_hi = k == 0 ? policy.target : policy.upper;
                if (z < policy.lower && gain_up > 1e-12) {
                    const double want = (restore_lo - z) / gain_up;
                    const double take = std::min(want, remaining);
                    cum_plus[j] += take;
                    remaining -= take;
                } else if (z > policy.upper && gain_dn > 1e-12) {
                    const double want = (z - restore_hi) / gain_dn;
                    const double take = std::min(want, remaining);
                    cum_minus[j] += take;
                    remaining -= take;
                }
            }
        } else if (k == policy.node) {
            const double x1 = demand.at(k, 0);
            const bool fire = policy.if_below ? x1 <= policy.threshold : x1 >= policy.threshold;
            if (fire) {
                const double take = std::min(policy.size, remaining);
                if (policy.leg_plus)
                    cum_plus[0] += take;
                else
                    cum_minus[0] += take;
                remaining -= take;
            }
        }
        for (int j = 0; j < dc; ++j) {
            plus[static_cast<std::size_t>(k) * dc + j] = cum_plus[j];
            minus[static_cast<std::size_t>(k) * dc + j] = cum_minus[j];
        }
    }
    return storage::ControlPair(FVPath::from_values(demand.grid(), dc, std::move(plus)),
                                FVPath::from_values(demand.grid(), dc, std::move(minus)),
                                inst.budget);
}

// ---------------------------------------------------------------------------
// evaluator

namespace {

std::uint64_t noise_seed_for(std::uint64_t master, int sim_steps, int n_paths) {
    return rng::derive_seed(master, "noise", static_cast<std::uint64_t>(sim_steps) * 1000003ull +
                                                 static_cast<std::uint64_t>(n_paths));
}

market::PriceSampleSet subsample_prices(const market::PriceSampleSet& fine, int mult,
                                        const TimeGrid& grid) {
    if (mult == 1) return fine;
    market::PriceSampleSet s;
    s.grid = grid;
    s.dim = fine.dim;
    s.n_paths = fine.n_paths;
    s.data.resize(static_cast<std::size_t>(s.n_paths) * grid.n_nodes() * s.dim);
    for (int r = 0; r < s.n_paths; ++r)
        for (int k = 0; k < grid.n_nodes(); ++k)
            for (int i = 0; i < s.dim; ++i)
                s.data[(static_cast<std::size_t>(r) * grid.n_nodes() + k) * s.dim + i] =
                    fine.at(r, k * mult, i);
    return s;
}

storage::DemandSampleSet subsample_demand(const storage::DemandSampleSet& fine, int mult,
                                          const TimeGrid& grid) {
    if (mult == 1) return fine;
    storage::DemandSampleSet s;
    s.grid = grid;
    s.dim = fine.dim;
    s.n_paths = fine.n_paths;
    s.data.resize(static_cast<std::size_t>(s.n_paths) * grid.n_nodes() * s.dim);
    for (int r = 0; r < s.n_paths; ++r)
        for (int k = 0; k < grid.n_nodes(); ++k)
            for (int i = 0; i < s.dim; ++i)
                s.data[(static_cast<std::size_t>(r) * grid.n_nodes() + k) * s.dim + i] =
                    fine.at(r, k * mult, i);
    return s;
}

} // namespace

Evaluator::Evaluator(const Problem& problem, int grid_steps, int n_paths,
                     std::uint64_t master_seed)
    : problem_(&problem), grid_(problem.grid.horizon, grid_steps), n_paths_(n_paths),
      master_seed_(master_seed) {
    if (n_paths < 2) throw std::invalid_argument("Evaluator: need at least two paths");
    // Noise is simulated on the finest grid of the problem (so nested grids in
    // a refinement study share the same Brownian paths) and subsampled here.
    const int base = problem.grid.n_steps;
    const int sim_steps = std::max(base, grid_steps);
    if (sim_steps % grid_steps != 0)
        throw std::invalid_argument("Evaluator: grid must divide the problem's base grid");
    const int mult = sim_steps / grid_steps;
    const TimeGrid sim_grid(problem.grid.horizon, sim_steps);
    const std::uint64_t seed = noise_seed_for(master_seed, sim_steps, 0);

    if (problem.kind == ModelKind::market) {
        if (!problem.market || !problem.market_goal)
            throw std::invalid_argument("Evaluator: market problem is incomplete");
        prices_ = subsample_prices(
            market::simulate_prices(problem.market->model, sim_grid, seed, n_paths), mult, grid_);
        benchmark_.assign(n_paths, 0.0);
        const auto& mg = *problem.market_goal;
        if (mg.kind == MarketGoal::Kind::cpt) {
            const double b = mg.benchmark == MarketGoal::Benchmark::endowment_liquidation
                                 ? liquidation(problem.market->cone, problem.market->endowment)
                                 : mg.benchmark_value;
            benchmark_.assign(n_paths, b);
        }
    } else {
        if (!problem.storage || !problem.storage_goal)
            throw std::invalid_argument("Evaluator: storage problem is incomplete");
        demand_ = subsample_demand(
            storage::simulate_demand(problem.storage->demand, sim_grid, seed, n_paths), mult,
            grid_);
        benchmark_.assign(n_paths, 0.0);
        const auto& sg = *problem.storage_goal;
        if (sg.benchmark == StorageGoalSpec::Benchmark::constant) {
            benchmark_.assign(n_paths, sg.benchmark_value);
        } else {
            par::parallel_for(n_paths, [&](std::int64_t r) {
                benchmark_[r] = storage::uncontrolled_cost(
                    storage::DemandPathView{&demand_, static_cast<int>(r)}, problem.storage->spec);
            });
        }
    }
}

std::uint64_t Evaluator::noise_checksum() const {
    return problem_->kind == ModelKind::market ? prices_.checksum() : demand_.checksum();
}

Evaluator::PathOutcomes Evaluator::compute_outcomes(const PolicyFamily& family,
                                                    const RandomizedPolicy& policy,
                                                    bool parallel) const {
    policy.validate();
    family.validate();
    PathOutcomes o;
    o.outcome.assign(n_paths_, 0.0);
    o.benchmark = benchmark_;
    o.variation.assign(n_paths_, 0.0);
    o.component.assign(n_paths_, 0);
    std::vector<unsigned char> fallback(n_paths_, 0);

    const int n_comp = static_cast<int>(policy.components.size());
    std::vector<double> cumw(n_comp);
    std::partial_sum(policy.weights.begin(), policy.weights.end(), cumw.begin());

    auto body = [&](std::int64_t r) {
        // the randomizer xi lives on its own stream, independent of the noise
        rng::Stream xi(master_seed_, "xi", static_cast<std::uint64_t>(r));
        const double u = xi.u01();
        int comp = 0;
        while (comp + 1 < n_comp && u > cumw[comp]) ++comp;
        o.component[r] = comp;
        const auto& params = policy.components[comp];

        if (problem_->kind == ModelKind::market) {
            const auto& inst = *problem_->market;
            market::PricePathView view{&prices_, static_cast<int>(r)};
            const auto policy_r = family.market_policy(params, prices_.dim);
            auto emitted = emit_market_control(policy_r, inst, view);
            fallback[r] = emitted.fallback ? 1 : 0;
            const auto port = market::evolve(inst.endowment, emitted.control, view);
            o.outcome[r] = liquidation(inst.cone, port.monetary_at(port.n_nodes - 1));
            o.variation[r] = total_variation(emitted.control);
        } else {
            const auto& inst = *problem_->storage;
            storage::DemandPathView view{&demand_, static_cast<int>(r)};
            const auto policy_r = family.storage_policy(params);
            const auto control = emit_storage_control(policy_r, inst, view);
            o.outcome[r] = storage::cost(view, control, inst.spec);
            o.variation[r] = control.total_motion();
        }
    };
    if (parallel)
        par::parallel_for(n_paths_, body);
    else
        par::parallel_for_serial(n_paths_, body);

    for (unsigned char f : fallback) o.any_fallback |= (f != 0);
    return o;
}

namespace {

struct GoalEval {
    double value = 0.0;
    bool diverged = false;
};

GoalEval market_goal_value(const MarketGoal& g, std::span<const double> outcome,
                           std::span<const double> benchmark) {
    GoalEval e;
    switch (g.kind) {
        case MarketGoal::Kind::expectation: {
            double s = 0.0;
            for (double v : outcome) s += g.utility(v);
            e.value = s / static_cast<double>(outcome.size());
            return e;
        }
        case MarketGoal::Kind::goal_reaching: {
            int hit = 0;
            for (double v : outcome)
                if (v >= g.threshold) ++hit;
            e.value = static_cast<double>(hit) / static_cast<double>(outcome.size());
            return e;
        }
        case MarketGoal::Kind::yaari: {
            std::vector<double> vals(outcome.begin(), outcome.end());
            for (double& v : vals) {
                if (v < -1e-9)
                    throw std::domain_error("yaari goal: negative liquidation value in sample");
                v = std::max(v, 0.0);
            }
            e.value = goals::yaari_value(goals::OutcomeSample(std::move(vals)), g.distortion);
            return e;
        }
        case MarketGoal::Kind::cpt: {
            const auto v = goals::cpt_value(
                goals::OutcomeSample({outcome.begin(), outcome.end()}),
                goals::OutcomeSample({benchmark.begin(), benchmark.end()}), g.cpt);
            e.value = v.value;
            e.diverged = v.loss_diverged;
            return e;
        }
    }
    return e;
}

GoalEval problem_goal_value(const Problem& p, std::span<const double> outcome,
                            std::span<const double> benchmark) {
    if (p.kind == ModelKind::market) return market_goal_value(*p.market_goal, outcome, benchmark);
    const auto v = storage::storage_goal(outcome, benchmark, p.storage_goal->goal);
    return {v.value, v.diverged};
}

} // namespace

Evaluator::Value Evaluator::value_of_outcomes(const PathOutcomes& o) const {
    Value val;
    const auto full = problem_goal_value(*problem_, o.outcome, o.benchmark);
    val.value = full.value;
    val.diverged = full.diverged;
    if (full.diverged) {
        val.value = kNegInf;
        val.ci_lo = val.ci_hi = kNegInf;
        return val;
    }
    // nonparametric bootstrap, 200 percentile resamples of (outcome, benchmark) pairs
    const int B = 200;
    const int n = static_cast<int>(o.outcome.size());
    std::vector<double> stats;
    stats.reserve(B);
    rng::Stream st(master_seed_, "bootstrap");
    std::vector<double> ro(n), rb(n);
    for (int b = 0; b < B; ++b) {
        for (int i = 0; i < n; ++i) {
            const auto j = st.uniform_index(n);
            ro[i] = o.outcome[j];
            rb[i] = o.benchmark[j];
        }
        const auto ge = problem_goal_value(*problem_, ro, rb);
        stats.push_back(ge.diverged ? kNegInf : ge.value);
    }
    std::sort(stats.begin(), stats.end());
    val.ci_lo = stats[static_cast<int>(std::floor(0.025 * (B - 1)))];
    val.ci_hi = stats[static_cast<int>(std::ceil(0.975 * (B - 1)))];
    return val;
}

Evaluator::Value Evaluator::evaluate(const PolicyFamily& family,
                                     const RandomizedPolicy& policy) const {
    return value_of_outcomes(compute_outcomes(family, policy, true));
}

double Evaluator::quick_value(const PolicyFamily& family, const RandomizedPolicy& policy,
                              bool* diverged) const {
    const auto o = compute_outcomes(family, policy, true);
    const auto ge = problem_goal_value(*problem_, o.outcome, o.benchmark);
    if (diverged) *diverged = ge.diverged;
    return ge.diverged ? kNegInf : ge.value;
}

// ---------------------------------------------------------------------------
// optimize

namespace {

bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Grid candidates ordered center-out (ties resolved lexicographically), so a
// flat landscape keeps the box center.
std::vector<std::vector<double>> centered_grid(const std::vector<double>& lo,
                                               const std::vector<double>& hi, int levels) {
    const int dims = static_cast<int>(lo.size());
    std::vector<std::vector<double>> points;
    std::vector<int> idx(dims, 0);
    while (true) {
        std::vector<double> p(dims);
        for (int d = 0; d < dims; ++d)
            p[d] = levels == 1 ? 0.5 * (lo[d] + hi[d])
                               : lo[d] + (hi[d] - lo[d]) * idx[d] / (levels - 1);
        points.push_back(std::move(p));
        int d = 0;
        while (d < dims && ++idx[d] == levels) idx[d++] = 0;
        if (d == dims) break;
    }
    std::vector<double> center(dims);
    for (int d = 0; d < dims; ++d) center[d] = 0.5 * (lo[d] + hi[d]);
    std::stable_sort(points.begin(), points.end(),
                     [&](const std::vector<double>& a, const std::vector<double>& b) {
                         double da = 0.0, db = 0.0;
                         for (int d = 0; d < dims; ++d) {
                             const double w = hi[d] > lo[d] ? hi[d] - lo[d] : 1.0;
                             const double xa = (a[d] - center[d]) / w;
                             const double xb = (b[d] - center[d]) / w;
                             da += xa * xa;
                             db += xb * xb;
                         }
                         if (da != db) return da < db;
                         return lex_less(a, b);
                     });
    return points;
}

Histogram make_histogram(std::span<const double> xs) {
    Histogram h;
    if (xs.empty()) return h;
    double mx = 0.0, mean = 0.0;
    for (double x : xs) {
        mx = std::max(mx, x);
        mean += x;
    }
    h.mean = mean / static_cast<double>(xs.size());
    h.max = mx;
    const int bins = 12;
    const double top = mx > 0.0 ? mx * (1.0 + 1e-9) : 1.0;
    h.counts.assign(bins, 0);
    for (int b = 0; b <= bins; ++b) h.edges.push_back(top * b / bins);
    for (double x : xs) {
        int b = static_cast<int>(x / top * bins);
        b = std::min(std::max(b, 0), bins - 1);
        ++h.counts[b];
    }
    return h;
}

SearchReport optimize_on(const Evaluator& ev, const PolicyFamily& family, int budget,
                         std::uint64_t master_seed) {
    family.validate();
    if (budget < 1) throw std::invalid_argument("optimize: budget must be positive");

    SearchReport rep;
    rep.noise_checksum = ev.noise_checksum();
    rep.best_value = kNegInf;
    bool any_feasible = false;

    auto consider = [&](const std::vector<double>& params) {
        bool diverged = false;
        const double v = ev.quick_value(family, RandomizedPolicy::pure(params), &diverged);
        ++rep.evaluations;
        if (!diverged) any_feasible = true;
        if (v > rep.best_value) {
            rep.best_value = v;
            rep.best_params = params;
        }
        rep.best_trace.push_back(rep.best_value);
        return v;
    };

    if (family.kind == PolicyFamily::Kind::finite_menu) {
        for (int i = 0; i < family.menu_size(); ++i)
            consider({static_cast<double>(i)});
    } else {
        const int dims = family.n_params();
        const int levels = dims <= 3 ? 5 : 3;
        const auto grid_pts = centered_grid(family.lo, family.hi, levels);
        const int phase1 = std::max(1, std::min<int>(budget / 2, static_cast<int>(grid_pts.size())));
        for (int i = 0; i < phase1; ++i) consider(grid_pts[i]);

        // coordinate refinement around the incumbent
        std::vector<double> step(dims);
        for (int d = 0; d < dims; ++d)
            step[d] = (family.hi[d] - family.lo[d]) / std::max(1, levels - 1);
        const int polish_budget = std::max(budget / 6, 2);
        while (rep.evaluations + 2 * dims <= budget - polish_budget) {
            bool improved = false;
            for (int d = 0; d < dims && rep.evaluations + 2 <= budget - polish_budget; ++d) {
                for (double sgn : {-1.0, 1.0}) {
                    auto cand = rep.best_params;
                    cand[d] = clamp(cand[d] + sgn * 0.5 * step[d], family.lo[d], family.hi[d]);
                    if (cand == rep.best_params) continue;
                    const double before = rep.best_value;
                    consider(cand);
                    if (rep.best_value > before) improved = true;
                }
            }
            if (!improved) {
                double mx = 0.0;
                for (int d = 0; d < dims; ++d) {
                    step[d] *= 0.5;
                    mx = std::max(mx, step[d] / std::max(1e-30, family.hi[d] - family.lo[d]));
                }
                if (mx < 1e-6) break;
            }
        }

        // stochastic simplex-style polish
        rng::Stream st(master_seed, "polish");
        while (rep.evaluations < budget) {
            auto cand = rep.best_params;
            for (int d = 0; d < dims; ++d)
                cand[d] = clamp(cand[d] + st.normal() * step[d], family.lo[d], family.hi[d]);
            consider(cand);
        }
    }

    if (!any_feasible) {
        rep.flags.push_back("all-candidates-infeasible");
        return rep;
    }
    const auto best_val = ev.evaluate(family, RandomizedPolicy::pure(rep.best_params));
    rep.ci_lo = best_val.ci_lo;
    rep.ci_hi = best_val.ci_hi;

    // diagnostics for the incumbent: the empirical law of the control variation
    const auto out = ev.compute_outcomes(family, RandomizedPolicy::pure(rep.best_params), true);
    rep.variation = make_histogram(out.variation);
    if (out.any_fallback) rep.flags.push_back("fallback-control-emitted");
    const auto& problem = ev.problem();
    if (problem.kind == ModelKind::market) {
        try {
            const auto cps = market::make_cps(problem.market->model, problem.market->cone);
            rep.variation_envelope =
                purchase(problem.market->cone, problem.market->endowment) / cps.epsilon;
            rep.envelope_ok = rep.variation.mean <= rep.variation_envelope + 1e-9;
        } catch (const std::invalid_argument&) {
            rep.variation_envelope = 0.0;
            rep.envelope_ok = true;
            rep.flags.push_back("no-cps-envelope: drifted prices or degenerate fees");
        }
    } else {
        rep.variation_envelope = problem.storage->budget;
        rep.envelope_ok = rep.variation.max <= rep.variation_envelope + 1e-9;
    }
    return rep;
}

} // namespace

SearchReport optimize(const Problem& problem, const PolicyFamily& family, int n_paths, int budget,
                      std::uint64_t master_seed) {
    Evaluator ev(problem, problem.grid.n_steps, n_paths, master_seed);
    return optimize_on(ev, family, budget, master_seed);
}

SearchReport refinement_study(const Problem& problem, const PolicyFamily& family,
                              std::span<const int> grids, std::span<const int> sample_sizes,
                              int budget, std::uint64_t master_seed) {
    if (grids.empty() || sample_sizes.empty())
        throw std::invalid_argument("refinement_study: need grids and sample sizes");
    for (std::size_t i = 1; i < grids.size(); ++i)
        if (grids[i] <= grids[i - 1] || grids[i] % grids[i - 1] != 0)
            throw std::invalid_argument("refinement_study: grids must be nested and increasing");

    Problem fine = problem;
    fine.grid = TimeGrid(problem.grid.horizon, grids.back());

    SearchReport last;
    std::vector<RefinementRow> rows;
    std::vector<double> final_values, final_ci_widths;
    for (int n : sample_sizes) {
        for (int g : grids) {
            Evaluator ev(fine, g, n, master_seed);
            auto rep = optimize_on(ev, family, budget, master_seed);
            rows.push_back({g, n, rep.best_value, rep.ci_lo, rep.ci_hi});
            if (n == sample_sizes.back()) {
                final_values.push_back(rep.best_value);
                final_ci_widths.push_back(rep.ci_hi - rep.ci_lo);
            }
            if (n == sample_sizes.back() && g == grids.back()) last = std::move(rep);
        }
    }
    last.refinement = std::move(rows);

    // stability verdict on the largest sample size
    bool stable = true;
    double max_gap = 0.0, prev_gap = -1.0, final_gap = 0.0;
    for (std::size_t i = 1; i < final_values.size(); ++i) {
        const double gap = std::abs(final_values[i] - final_values[i - 1]);
        max_gap = std::max(max_gap, gap);
        final_gap = gap;
        if (prev_gap >= 0.0) {
            const double slack = 0.5 * (final_ci_widths[i] + final_ci_widths[i - 1]);
            if (gap > prev_gap + slack) stable = false;
        }
        prev_gap = gap;
    }
    if (!final_ci_widths.empty() && final_gap > final_ci_widths.back()) stable = false;
    last.max_successive_gap = max_gap;
    last.final_gap = final_gap;
    last.stable = stable;
    return last;
}

BenefitReport randomization_benefit(const Problem& problem, const PolicyFamily& menu_family,
                                    int n_paths, std::uint64_t master_seed) {
    menu_family.validate();
    if (menu_family.kind != PolicyFamily::Kind::finite_menu || menu_family.menu_size() < 2)
        throw std::invalid_argument("randomization_benefit: need a finite menu of size >= 2");
    const int m = menu_family.menu_size();
    if (m > 3)
        throw std::invalid_argument("randomization_benefit: weight grids supported for menus of 2 or 3");

    Evaluator ev(problem, problem.grid.n_steps, n_paths, master_seed);
    BenefitReport rep;
    rep.best_pure = kNegInf;
    for (int i = 0; i < m; ++i) {
        const auto v = ev.evaluate(menu_family, RandomizedPolicy::pure({static_cast<double>(i)}));
        if (v.value > rep.best_pure) {
            rep.best_pure = v.value;
            rep.best_pure_index = i;
        }
    }

    rep.best_mix = kNegInf;
    Evaluator::Value best_mix_val;
    auto consider_mix = [&](const std::vector<double>& w) {
        RandomizedPolicy p;
        for (int i = 0; i < m; ++i) {
            p.components.push_back({static_cast<double>(i)});
            p.weights.push_back(w[i]);
        }
        const auto v = ev.evaluate(menu_family, p);
        if (v.value > rep.best_mix) {
            rep.best_mix = v.value;
            rep.best_weights = w;
            best_mix_val = v;
        }
    };
    const int steps = 20; // 0.05 grid
    if (m == 2) {
        for (int i = 0; i <= steps; ++i)
            consider_mix({static_cast<double>(i) / steps, static_cast<double>(steps - i) / steps});
    } else {
        for (int i = 0; i <= steps; ++i)
            for (int j = 0; j <= steps - i; ++j)
                consider_mix({static_cast<double>(i) / steps, static_cast<double>(j) / steps,
                              static_cast<double>(steps - i - j) / steps});
    }

    rep.gap = rep.best_mix - rep.best_pure;
    rep.mix_ci_half_width = 0.5 * (best_mix_val.ci_hi - best_mix_val.ci_lo);
    rep.strict_benefit = rep.gap > 2.0 * rep.mix_ci_half_width;
    return rep;
}

// ---------------------------------------------------------------------------
// report serialization

namespace {

nlohmann::json value_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

} // namespace

std::string SearchReport::to_json() const {
    nlohmann::json j;
    j["best_params"] = best_params;
    j["best_value"] = value_or_null(best_value);
    j["ci_lo"] = value_or_null(ci_lo);
    j["ci_hi"] = value_or_null(ci_hi);
    j["evaluations"] = evaluations;
    j["best_trace"] = best_trace;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : refinement)
        rows.push_back({{"grid", r.grid_steps},
                        {"n_paths", r.n_paths},
                        {"value", value_or_null(r.value)},
                        {"ci_lo", value_or_null(r.ci_lo)},
                        {"ci_hi", value_or_null(r.ci_hi)}});
    j["refinement"] = rows;
    j["max_successive_gap"] = max_successive_gap;
    j["final_gap"] = final_gap;
    j["stable"] = stable;
    j["variation"] = {{"edges", variation.edges},
                      {"counts", variation.counts},
                      {"mean", variation.mean},
                      {"max", variation.max}};
    j["variation_envelope"] = variation_envelope;
    j["envelope_ok"] = envelope_ok;
    j["flags"] = flags;
    j["noise_checksum"] = noise_checksum;
    return j.dump(2);
}

std::string SearchReport::refinement_csv() const {
    std::ostringstream out;
    out << "grid,n_paths,value,ci_lo,ci_hi\n";
    char buf[64];
    for (const auto& r : refinement) {
        out << r.grid_steps << ',' << r.n_paths;
        for (double v : {r.value, r.ci_lo, r.ci_hi}) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << "\n";
    }
    return out.str();
}

std::string BenefitReport::to_json() const {
    nlohmann::json j;
    j["best_pure"] = value_or_null(best_pure);
    j["best_pure_index"] = best_pure_index;
    j["best_mix"] = value_or_null(best_mix);
    j["best_weights"] = best_weights;
    j["gap"] = gap;
    j["mix_ci_half_width"] = mix_ci_half_width;
    j["strict_benefit"] = strict_benefit;
    return j.dump(2);
}

} // namespace scl::search
