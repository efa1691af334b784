#pragma once

#include <span>
#include <vector>

namespace scl::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
    Status status;
    double value = 0.0;        // objective at the optimum; phase-1 residual when infeasible
    std::vector<double> x;     // primal solution, length n
};

/// Solve min c.x subject to A x = b, x >= 0.
/// Dense two-phase simplex with Bland's rule; intended for the tiny cone
/// programs of this project (a handful of rows, <= ~16 columns).
/// `feas_tol` is the absolute phase-1 residual below which the system counts
/// as feasible.
Result solve(int m, int n, std::span<const double> a_row_major,
             std::span<const double> b, std::span<const double> c,
             double feas_tol = 1e-9);

} // namespace scl::lp
