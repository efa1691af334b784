#pragma once

// Brute-force dynamic program for the one-dimensional budgeted storage
// instance: Brownian demand, capped quadratic running cost, linear trade
// costs, zero terminal cost. Deliberately independent of the library's
// storage code: the model is spelled out from scratch.
//
// State: (time node, storage level on a uniform grid, remaining budget on the
// control grid). Decisions are net moves on the control grid; the Gaussian
// demand increment is binned exactly onto the level grid. Because the control
// step (0.25) is not a multiple of the level step (0.1), post-trade levels sit
// either on the grid or exactly half a cell above it; both start families get
// their own transition kernel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace dp_oracle {

struct StorageDpSpec {
    double horizon = 1.0;
    int n_steps = 32;
    double sigma = 1.0;
    double x0 = 0.0;
    double budget = 4.0;
    double g_cap = 25.0;        // g(z) = min(z^2, cap)
    double h0 = 0.1, h1 = 0.05; // h(t) = h0 + h1 t
    double z_min = -6.0, z_max = 6.0;
    double z_step = 0.1;
    double control_step = 0.25;
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double solve(const StorageDpSpec& s) {
    const int nz = static_cast<int>(std::llround((s.z_max - s.z_min) / s.z_step)) + 1;
    const int nr = static_cast<int>(std::llround(s.budget / s.control_step)) + 1;
    const double dt = s.horizon / s.n_steps;
    const double sd = s.sigma * std::sqrt(dt);

    auto z_of = [&](int i) { return s.z_min + s.z_step * i; };
    auto g = [&](double z) { return std::min(z * z, s.g_cap); };
    auto h = [&](double t) { return s.h0 + s.h1 * t; };

    const int reach = static_cast<int>(std::ceil(6.0 * sd / s.z_step)) + 1;
    auto kernel_for = [&](double frac) {
        // w[o] = P( frac + eps lands in bin o ), eps ~ N(0, sd^2), tails folded
        // into the extreme bins
        std::vector<double> w(2 * reach + 1, 0.0);
        for (int o = -reach; o <= reach; ++o) {
            const double lo = (o * s.z_step - frac - 0.5 * s.z_step) / sd;
            const double hi = (o * s.z_step - frac + 0.5 * s.z_step) / sd;
            if (o == -reach)
                w[o + reach] = normal_cdf(hi);
            else if (o == reach)
                w[o + reach] = 1.0 - normal_cdf(lo);
            else
                w[o + reach] = normal_cdf(hi) - normal_cdf(lo);
        }
        return w;
    };
    const std::vector<double> w_on = kernel_for(0.0);
    const std::vector<double> w_off = kernel_for(0.5 * s.z_step);

    std::vector<double> value(static_cast<std::size_t>(nz) * nr, 0.0); // V at terminal time
    std::vector<double> next(value.size(), 0.0);
    std::vector<double> eg_on(nz), eg_off(nz);
    std::vector<double> ev_on(value.size()), ev_off(value.size());

    for (int k = s.n_steps - 1; k >= 0; --k) {
        std::swap(value, next); // `next` = V_{k+1}
        const double t0 = s.horizon * k / s.n_steps;
        const double t1 = s.horizon * (k + 1) / s.n_steps;

        auto fill_expectations = [&](const std::vector<double>& w, std::vector<double>& eg,
                                     std::vector<double>& ev) {
            for (int i = 0; i < nz; ++i) {
                double sg = 0.0;
                for (int o = -reach; o <= reach; ++o)
                    sg += w[o + reach] * g(z_of(std::clamp(i + o, 0, nz - 1)));
                eg[i] = sg;
                for (int r = 0; r < nr; ++r) {
                    double sv = 0.0;
                    for (int o = -reach; o <= reach; ++o)
                        sv += w[o + reach] *
                              next[static_cast<std::size_t>(std::clamp(i + o, 0, nz - 1)) * nr + r];
                    ev[static_cast<std::size_t>(i) * nr + r] = sv;
                }
            }
        };
        fill_expectations(w_on, eg_on, ev_on);
        fill_expectations(w_off, eg_off, ev_off);

        for (int i = 0; i < nz; ++i) {
            const double z = z_of(i);
            for (int r = 0; r < nr; ++r) {
                double best = 1e300;
                for (int mu = -r; mu <= r; ++mu) {
                    const double move = mu * s.control_step;
                    const double zp = z + move;
                    if (zp < s.z_min || zp > s.z_max) continue;
                    const double cells = move / s.z_step;
                    const int base = static_cast<int>(std::floor(cells + 1e-9));
                    const bool off = cells - base > 0.25; // exactly 0.5 when off-grid
                    const int ip = std::clamp(i + base, 0, nz - 1);
                    const int rp = r - std::abs(mu);
                    const double stage = h(t0) * std::abs(move) + 0.5 * dt * g(zp) +
                                         0.5 * dt * (off ? eg_off[ip] : eg_on[ip]);
                    const double cont = off ? ev_off[static_cast<std::size_t>(ip) * nr + rp]
                                            : ev_on[static_cast<std::size_t>(ip) * nr + rp];
                    best = std::min(best, stage + cont);
                }
                value[static_cast<std::size_t>(i) * nr + r] = best;
            }
        }
        (void)t1;
    }

    const int i0 = static_cast<int>(std::llround((s.x0 - s.z_min) / s.z_step));
    return value[static_cast<std::size_t>(i0) * nr + (nr - 1)];
}

} // namespace dp_oracle
