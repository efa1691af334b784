#include "scl/lp.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace scl::lp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-11;
constexpr int kMaxIters = 20000;

struct Tableau {
    int m, n_total;
    std::vector<double> rows;   // m x (n_total + 1), last column = rhs
    std::vector<double> cost;   // reduced costs, length n_total + 1 (last = -objective)
    std::vector<int> basis;     // size m

    double& at(int i, int j) { return rows[static_cast<std::size_t>(i) * (n_total + 1) + j]; }
    double at(int i, int j) const { return rows[static_cast<std::size_t>(i) * (n_total + 1) + j]; }

    void pivot(int pr, int pc) {
        const double piv = at(pr, pc);
        for (int j = 0; j <= n_total; ++j) at(pr, j) /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == pr) continue;
            const double f = at(i, pc);
            if (f == 0.0) continue;
            for (int j = 0; j <= n_total; ++j) at(i, j) -= f * at(pr, j);
        }
        const double fc = cost[pc];
        if (fc != 0.0)
            for (int j = 0; j <= n_total; ++j) cost[j] -= fc * at(pr, j);
        basis[pr] = pc;
    }

    // Bland's rule: smallest entering index with negative reduced cost,
    // smallest basis index among ratio-test ties.
    enum class Step { done, moved, unbounded };
    Step step(int n_enterable) {
        int enter = -1;
        for (int j = 0; j < n_enterable; ++j) {
            if (cost[j] < -kCostTol) { enter = j; break; }
        }
        if (enter < 0) return Step::done;
        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            const double a = at(i, enter);
            if (a > kPivotTol) {
                const double r = at(i, n_total) / a;
                if (r < best_ratio - 1e-15 ||
                    (std::abs(r - best_ratio) <= 1e-15 && (leave < 0 || basis[i] < basis[leave]))) {
                    best_ratio = r;
                    leave = i;
                }
            }
        }
        if (leave < 0) return Step::unbounded;
        pivot(leave, enter);
        return Step::moved;
    }
};

} // namespace

Result solve(int m, int n, std::span<const double> a_row_major,
             std::span<const double> b, std::span<const double> c,
             double feas_tol) {
    if (static_cast<int>(a_row_major.size()) != m * n || static_cast<int>(b.size()) != m ||
        static_cast<int>(c.size()) != n)
        throw std::invalid_argument("lp::solve: inconsistent dimensions");

    Tableau t;
    t.m = m;
    t.n_total = n + m; // artificials appended
    t.rows.assign(static_cast<std::size_t>(m) * (t.n_total + 1), 0.0);
    t.basis.resize(m);
    for (int i = 0; i < m; ++i) {
        const double sgn = b[i] < 0.0 ? -1.0 : 1.0;
        for (int j = 0; j < n; ++j) t.at(i, j) = sgn * a_row_major[static_cast<std::size_t>(i) * n + j];
        t.at(i, n + i) = 1.0;
        t.at(i, t.n_total) = sgn * b[i];
        t.basis[i] = n + i;
    }

    // Phase 1: minimize the artificial sum.
    std::vector<double> real_cost(t.n_total + 1, 0.0);
    for (int j = 0; j < n; ++j) real_cost[j] = c[j];
    t.cost.assign(t.n_total + 1, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= t.n_total; ++j)
            if (j < n || j == t.n_total) t.cost[j] -= t.at(i, j);

    int iters = 0;
    while (true) {
        if (++iters > kMaxIters) throw std::runtime_error("lp::solve: phase-1 iteration cap");
        const auto s = t.step(n); // artificials never re-enter
        if (s == Tableau::Step::done) break;
        if (s == Tableau::Step::unbounded)
            throw std::runtime_error("lp::solve: phase-1 unbounded (internal)");
    }
    const double infeas = -t.cost[t.n_total];
    if (infeas > feas_tol) return {Status::infeasible, infeas, {}};

    // Drive remaining basic artificials out where a real pivot exists;
    // rows without one are redundant and stay put at level zero.
    for (int i = 0; i < m; ++i) {
        if (t.basis[i] < n) continue;
        for (int j = 0; j < n; ++j) {
            if (std::abs(t.at(i, j)) > kPivotTol) {
                t.pivot(i, j);
                break;
            }
        }
    }

    // Phase 2 with the real objective, canonicalized against the basis.
    t.cost = real_cost;
    for (int i = 0; i < m; ++i) {
        const int bj = t.basis[i];
        const double cb = t.cost[bj];
        if (cb != 0.0)
            for (int j = 0; j <= t.n_total; ++j) t.cost[j] -= cb * t.at(i, j);
    }
    iters = 0;
    while (true) {
        if (++iters > kMaxIters) throw std::runtime_error("lp::solve: phase-2 iteration cap");
        const auto s = t.step(n);
        if (s == Tableau::Step::done) break;
        if (s == Tableau::Step::unbounded) return {Status::unbounded, 0.0, {}};
    }

    Result r;
    r.status = Status::optimal;
    r.value = -t.cost[t.n_total];
    r.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        if (t.basis[i] < n) r.x[t.basis[i]] = t.at(i, t.n_total);
    return r;
}

} // namespace scl::lp
