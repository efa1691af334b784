#include "scl/storage.hpp"

#include "scl/parallel.hpp"
#include "scl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace scl::storage {

DemandModel DemandModel::brownian(std::vector<double> x0, std::vector<double> mu,
                                  std::vector<double> sigma) {
    DemandModel m;
    m.kind = Kind::brownian_drift;
    m.dim = static_cast<int>(x0.size());
    m.x0 = std::move(x0);
    m.mu = std::move(mu);
    m.sigma = std::move(sigma);
    m.validate();
    return m;
}

DemandModel DemandModel::ou(std::vector<double> x0, double rate, std::vector<double> mean,
                            std::vector<double> sigma) {
    DemandModel m;
    m.kind = Kind::ornstein_uhlenbeck;
    m.dim = static_cast<int>(x0.size());
    m.x0 = std::move(x0);
    m.mu.assign(m.dim, 0.0);
    m.rate = rate;
    m.mean = std::move(mean);
    m.sigma = std::move(sigma);
    m.validate();
    return m;
}

void DemandModel::validate() const {
    if (dim < 1) throw std::invalid_argument("DemandModel: dim must be positive");
    auto check = [&](const std::vector<double>& v, const char* name) {
        if (static_cast<int>(v.size()) != dim)
            throw std::invalid_argument(std::string("DemandModel: ") + name + " size mismatch");
        for (double x : v)
            if (!std::isfinite(x))
                throw std::invalid_argument(std::string("DemandModel: non-finite ") + name);
    };
    check(x0, "x0");
    check(sigma, "sigma");
    for (double s : sigma)
        if (s < 0.0) throw std::invalid_argument("DemandModel: sigma must be >= 0");
    if (kind == Kind::brownian_drift) {
        check(mu, "mu");
    } else {
        check(mean, "mean");
        if (!std::isfinite(rate) || rate <= 0.0)
            throw std::invalid_argument("DemandModel: OU rate must be positive");
    }
}

std::uint64_t DemandSampleSet::checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < data.size() * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

void simulate_one_demand_path(const DemandModel& m, const TimeGrid& grid, std::uint64_t seed,
                              int r, double* out) {
    const int d = m.dim;
    const int n = grid.n_nodes();
    const double dt = grid.dt();
    rng::Stream st(seed, "demand", static_cast<std::uint64_t>(r));
    for (int i = 0; i < d; ++i) out[i] = m.x0[i];
    if (m.kind == DemandModel::Kind::brownian_drift) {
        const double sdt = std::sqrt(dt);
        for (int k = 1; k < n; ++k) {
            double* row = out + static_cast<std::size_t>(k) * d;
            const double* prev = out + static_cast<std::size_t>(k - 1) * d;
            for (int i = 0; i < d; ++i)
                row[i] = prev[i] + m.mu[i] * dt + m.sigma[i] * sdt * st.normal();
        }
    } else {
        // exact OU transition
        const double decay = std::exp(-m.rate * dt);
        const double vscale = std::sqrt((1.0 - decay * decay) / (2.0 * m.rate));
        for (int k = 1; k < n; ++k) {
            double* row = out + static_cast<std::size_t>(k) * d;
            const double* prev = out + static_cast<std::size_t>(k - 1) * d;
            for (int i = 0; i < d; ++i)
                row[i] = m.mean[i] + (prev[i] - m.mean[i]) * decay +
                         m.sigma[i] * vscale * st.normal();
        }
    }
}

DemandSampleSet simulate_demand_impl(const DemandModel& model, const TimeGrid& grid,
                                     std::uint64_t seed, int n_paths, bool parallel) {
    model.validate();
    if (n_paths < 1) throw std::invalid_argument("simulate_demand: need at least one path");
    DemandSampleSet s;
    s.grid = grid;
    s.dim = model.dim;
    s.n_paths = n_paths;
    s.data.assign(static_cast<std::size_t>(n_paths) * grid.n_nodes() * model.dim, 0.0);
    const std::size_t stride = static_cast<std::size_t>(grid.n_nodes()) * model.dim;
    auto body = [&](std::int64_t r) {
        simulate_one_demand_path(model, grid, seed, static_cast<int>(r),
                                 s.data.data() + static_cast<std::size_t>(r) * stride);
    };
    if (parallel)
        par::parallel_for(n_paths, body);
    else
        par::parallel_for_serial(n_paths, body);
    return s;
}

} // namespace

DemandSampleSet simulate_demand(const DemandModel& model, const TimeGrid& grid, std::uint64_t seed,
                                int n_paths) {
    return simulate_demand_impl(model, grid, seed, n_paths, true);
}

DemandSampleSet simulate_demand_serial(const DemandModel& model, const TimeGrid& grid,
                                       std::uint64_t seed, int n_paths) {
    return simulate_demand_impl(model, grid, seed, n_paths, false);
}

void write_demand_csv(const DemandSampleSet& s, std::ostream& out) {
    out << "path_id,t";
    for (int i = 1; i <= s.dim; ++i) out << ",X" << i;
    out << "\n";
    char buf[64];
    for (int r = 0; r < s.n_paths; ++r)
        for (int k = 0; k < s.grid.n_nodes(); ++k) {
            out << r;
            std::snprintf(buf, sizeof buf, "%.17g", s.grid.node(k));
            out << ',' << buf;
            for (int i = 0; i < s.dim; ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", s.at(r, k, i));
                out << ',' << buf;
            }
            out << "\n";
        }
}

ControlPair::ControlPair(FVPath plus, FVPath minus, double k_budget)
    : l_plus(std::move(plus)), l_minus(std::move(minus)), budget(k_budget) {
    if (!(l_plus.grid() == l_minus.grid()) || l_plus.dim() != l_minus.dim())
        throw std::invalid_argument("ControlPair: mismatched legs");
    if (!(budget > 0.0)) throw std::invalid_argument("ControlPair: budget must be positive");
    for (const FVPath* leg : {&l_plus, &l_minus})
        for (int k = 0; k < leg->n_nodes(); ++k)
            for (int c = 0; c < leg->dim(); ++c)
                if (leg->increment(k, c) < -1e-12)
                    throw std::invalid_argument("ControlPair: legs must be increasing");
    if (total_motion() > budget + 1e-12)
        throw std::invalid_argument("ControlPair: budget exceeded");
}

double ControlPair::total_motion() const {
    const int last = l_plus.n_nodes() - 1;
    double s = 0.0;
    for (int c = 0; c < l_plus.dim(); ++c)
        s += l_plus.value(last, c) + l_minus.value(last, c);
    return s;
}

RunningCost RunningCost::constant(double v) {
    RunningCost g;
    g.kind = Kind::constant;
    g.value = v;
    if (!(v >= 0.0)) throw std::invalid_argument("RunningCost: constant must be >= 0");
    return g;
}

RunningCost RunningCost::quadratic_capped(double weight, double cap, std::vector<double> center) {
    RunningCost g;
    g.kind = Kind::quadratic_capped;
    g.weight = weight;
    g.cap = cap;
    g.center = std::move(center);
    if (!(weight >= 0.0) || !(cap >= 0.0))
        throw std::invalid_argument("RunningCost: weight and cap must be >= 0");
    return g;
}

double RunningCost::eval(double, std::span<const double> z) const {
    switch (kind) {
        case Kind::zero:
            return 0.0;
        case Kind::constant:
            return value;
        case Kind::quadratic_capped: {
            double s = 0.0;
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double c = i < center.size() ? center[i] : 0.0;
                const double d = z[i] - c;
                s += d * d;
            }
            return std::min(weight * s, cap);
        }
    }
    return 0.0;
}

double RunningCost::sup_bound() const {
    switch (kind) {
        case Kind::zero:
            return 0.0;
        case Kind::constant:
            return value;
        case Kind::quadratic_capped:
            return cap;
    }
    return 0.0;
}

TradeCost TradeCost::constant(int d, double c) {
    TradeCost h;
    h.c0.assign(d, c);
    h.c1.assign(d, 0.0);
    return h;
}

TradeCost TradeCost::linear(std::vector<double> c0, std::vector<double> c1) {
    TradeCost h;
    h.c0 = std::move(c0);
    h.c1 = std::move(c1);
    return h;
}

double TradeCost::sup_bound(double horizon) const {
    double m = 0.0;
    for (std::size_t j = 0; j < c0.size(); ++j)
        m = std::max(m, std::max(c0[j], c0[j] + c1[j] * horizon));
    return m;
}

void TradeCost::validate(double horizon) const {
    if (c0.size() != c1.size() || c0.empty())
        throw std::invalid_argument("TradeCost: coefficient size mismatch");
    for (std::size_t j = 0; j < c0.size(); ++j) {
        if (!std::isfinite(c0[j]) || !std::isfinite(c1[j]))
            throw std::invalid_argument("TradeCost: non-finite coefficient");
        if (std::min(c0[j], c0[j] + c1[j] * horizon) < 0.0)
            throw std::invalid_argument("TradeCost: h must be nonnegative on [0,T]");
    }
}

TerminalCost TerminalCost::soft_threshold(double weight, double threshold, double scale) {
    TerminalCost t;
    t.kind = Kind::soft_threshold;
    t.weight = weight;
    t.threshold = threshold;
    t.scale = scale;
    if (!(weight >= 0.0) || !(scale > 0.0))
        throw std::invalid_argument("TerminalCost: need weight >= 0, scale > 0");
    return t;
}

double TerminalCost::eval(std::span<const double> z) const {
    if (kind == Kind::zero) return 0.0;
    double s = 0.0;
    for (double v : z) s += v;
    const double ramp = std::min(1.0, std::max(0.0, (s - threshold) / scale));
    return weight * ramp;
}

double TerminalCost::sup_bound() const { return kind == Kind::zero ? 0.0 : weight; }

void StorageCostSpec::validate(double horizon) const {
    if (state_dim < 1 || control_dim < 1)
        throw std::invalid_argument("StorageCostSpec: dimensions must be positive");
    const std::size_t need = static_cast<std::size_t>(state_dim) * control_dim;
    if (a_plus.size() != need || a_minus.size() != need)
        throw std::invalid_argument("StorageCostSpec: conversion matrices must be k x d");
    for (double a : a_plus)
        if (!std::isfinite(a)) throw std::invalid_argument("StorageCostSpec: non-finite A+");
    for (double a : a_minus)
        if (!std::isfinite(a)) throw std::invalid_argument("StorageCostSpec: non-finite A-");
    h_plus.validate(horizon);
    h_minus.validate(horizon);
    if (static_cast<int>(h_plus.c0.size()) != control_dim ||
        static_cast<int>(h_minus.c0.size()) != control_dim)
        throw std::invalid_argument("StorageCostSpec: trade costs must have control_dim entries");
}

namespace {

void control_contribution(const ControlPair& l, const StorageCostSpec& spec, int node,
                          std::span<double> out) {
    // out_i = (A+ L+_node - A- L-_node)_i
    for (int i = 0; i < spec.state_dim; ++i) {
        double s = 0.0;
        for (int j = 0; j < spec.control_dim; ++j) {
            s += spec.a_plus[static_cast<std::size_t>(i) * spec.control_dim + j] *
                 l.l_plus.value(node, j);
            s -= spec.a_minus[static_cast<std::size_t>(i) * spec.control_dim + j] *
                 l.l_minus.value(node, j);
        }
        out[i] = s;
    }
}

} // namespace

std::vector<double> storage_path(DemandPathView x, const ControlPair& l,
                                 const StorageCostSpec& spec) {
    if (x.dim() != spec.state_dim || l.l_plus.dim() != spec.control_dim)
        throw std::invalid_argument("storage_path: dimension mismatch");
    if (!(x.grid() == l.l_plus.grid()))
        throw std::invalid_argument("storage_path: grid mismatch");
    const int n = x.grid().n_nodes();
    const int k = spec.state_dim;
    std::vector<double> z(static_cast<std::size_t>(n) * k);
    std::vector<double> ctrl(k);
    for (int node = 0; node < n; ++node) {
        control_contribution(l, spec, node, ctrl);
        for (int i = 0; i < k; ++i)
            z[static_cast<std::size_t>(node) * k + i] = x.at(node, i) + ctrl[i];
    }
    return z;
}

double cost(DemandPathView x, const ControlPair& l, const StorageCostSpec& spec) {
    spec.validate(x.grid().horizon);
    if (x.dim() != spec.state_dim || l.l_plus.dim() != spec.control_dim)
        throw std::invalid_argument("cost: dimension mismatch");
    if (!(x.grid() == l.l_plus.grid())) throw std::invalid_argument("cost: grid mismatch");

    const TimeGrid& grid = x.grid();
    const int n = grid.n_nodes();
    const int k = spec.state_dim;
    const double g_sup = spec.g.sup_bound() + 1e-9;

    double running = 0.0;
    std::vector<double> ctrl(k), z_post(k), z_pre(k);
    control_contribution(l, spec, 0, ctrl);
    for (int i = 0; i < k; ++i) z_post[i] = x.at(0, i) + ctrl[i];
    for (int node = 0; node + 1 < n; ++node) {
        // Z is constant-plus-linear-demand on [t_node, t_{node+1}): the left
        // value is post-jump, the right value pre-jump.
        const double t0 = grid.node(node);
        const double t1 = grid.node(node + 1);
        for (int i = 0; i < k; ++i) z_pre[i] = x.at(node + 1, i) + ctrl[i];
        const double g0 = spec.g.eval(t0, z_post);
        const double g1 = spec.g.eval(t1, z_pre);
        if (g0 > g_sup || g1 > g_sup)
            throw std::runtime_error("cost: running cost exceeded its declared bound");
        running += 0.5 * (t1 - t0) * (g0 + g1);
        control_contribution(l, spec, node + 1, ctrl);
        for (int i = 0; i < k; ++i) z_post[i] = x.at(node + 1, i) + ctrl[i];
    }

    double trades = 0.0;
    for (int node = 0; node < n; ++node) {
        const double t = grid.node(node);
        for (int j = 0; j < spec.control_dim; ++j) {
            trades += spec.h_plus.eval(t, j) * l.l_plus.increment(node, j);
            trades += spec.h_minus.eval(t, j) * l.l_minus.increment(node, j);
        }
    }

    const double terminal = spec.terminal.eval(z_post);
    if (terminal > spec.terminal.sup_bound() + 1e-9)
        throw std::runtime_error("cost: terminal cost exceeded its declared bound");
    return running + trades + terminal;
}

double uncontrolled_cost(DemandPathView x, const StorageCostSpec& spec) {
    ControlPair nil(FVPath(x.grid(), spec.control_dim), FVPath(x.grid(), spec.control_dim), 1.0);
    return cost(x, nil, spec);
}

GoalValue storage_goal(std::span<const double> cost_samples,
                       std::span<const double> benchmark_samples, const StorageGoal& goal) {
    if (cost_samples.empty()) throw std::invalid_argument("storage_goal: empty sample");
    GoalValue out;
    switch (goal.kind) {
        case StorageGoal::Kind::expectation: {
            double s = 0.0;
            for (double w : cost_samples) s += w;
            out.value = -s / static_cast<double>(cost_samples.size());
            return out;
        }
        case StorageGoal::Kind::goal_reaching: {
            int over = 0;
            for (double w : cost_samples)
                if (w > goal.threshold) ++over;
            out.value = -static_cast<double>(over) / static_cast<double>(cost_samples.size());
            return out;
        }
        case StorageGoal::Kind::cpt: {
            if (benchmark_samples.size() != cost_samples.size())
                throw std::invalid_argument("storage_goal: benchmark must align with costs");
            const auto v = goals::cpt_value(
                goals::OutcomeSample({benchmark_samples.begin(), benchmark_samples.end()}),
                goals::OutcomeSample({cost_samples.begin(), cost_samples.end()}), goal.cpt);
            out.value = v.value;
            out.diverged = v.loss_diverged;
            return out;
        }
    }
    return out;
}

} // namespace scl::storage
