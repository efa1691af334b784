#pragma once

#include <stdexcept>

namespace scl {

/// Uniform time grid 0 = t_0 < t_1 < ... < t_n = T.
struct TimeGrid {
    double horizon = 1.0;
    int n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double T, int steps) : horizon(T), n_steps(steps) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
        if (steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
    }

    int n_nodes() const { return n_steps + 1; }
    double dt() const { return horizon / n_steps; }
    double node(int k) const { return k == n_steps ? horizon : horizon * k / n_steps; }

    bool operator==(const TimeGrid& o) const {
        return horizon == o.horizon && n_steps == o.n_steps;
    }
};

} // namespace scl
