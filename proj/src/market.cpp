#include "scl/market.hpp"

#include "scl/parallel.hpp"
#include "scl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace scl::market {

namespace {

// Cholesky factor of the risky-asset correlation block; throws when not PSD.
std::vector<double> risky_cholesky(const PriceModel& m) {
    const int n = m.dim - 1;
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a[static_cast<std::size_t>(i) * n + j] =
                m.correlation[static_cast<std::size_t>(i + 1) * m.dim + (j + 1)];
    std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                s -= l[static_cast<std::size_t>(i) * n + k] * l[static_cast<std::size_t>(j) * n + k];
            if (i == j) {
                if (s <= 1e-12)
                    throw std::invalid_argument("PriceModel: correlation matrix is not positive definite");
                l[static_cast<std::size_t>(i) * n + i] = std::sqrt(s);
            } else {
                l[static_cast<std::size_t>(i) * n + j] = s / l[static_cast<std::size_t>(j) * n + j];
            }
        }
    }
    return l;
}

} // namespace

PriceModel PriceModel::independent(Kind kind, std::vector<double> sigma, std::vector<double> mu) {
    PriceModel m;
    m.kind = kind;
    m.dim = static_cast<int>(sigma.size());
    m.sigma = std::move(sigma);
    m.mu = std::move(mu);
    m.correlation.assign(static_cast<std::size_t>(m.dim) * m.dim, 0.0);
    for (int i = 0; i < m.dim; ++i) m.correlation[static_cast<std::size_t>(i) * m.dim + i] = 1.0;
    m.validate();
    return m;
}

void PriceModel::validate() const {
    if (dim < 1) throw std::invalid_argument("PriceModel: dim must be positive");
    if (static_cast<int>(sigma.size()) != dim || static_cast<int>(mu.size()) != dim)
        throw std::invalid_argument("PriceModel: sigma/mu must have one entry per asset");
    if (correlation.size() != static_cast<std::size_t>(dim) * dim)
        throw std::invalid_argument("PriceModel: correlation must be dim x dim");
    for (int i = 0; i < dim; ++i) {
        if (!std::isfinite(sigma[i]) || sigma[i] < 0.0)
            throw std::invalid_argument("PriceModel: volatilities must be finite and >= 0");
        if (!std::isfinite(mu[i])) throw std::invalid_argument("PriceModel: non-finite drift");
        if (std::abs(correlation[static_cast<std::size_t>(i) * dim + i] - 1.0) > 1e-12)
            throw std::invalid_argument("PriceModel: correlation diagonal must be one");
    }
    if (sigma[0] != 0.0 || mu[0] != 0.0)
        throw std::invalid_argument("PriceModel: the numeraire must have zero volatility and drift");
    if (kind == Kind::martingale_gbm)
        for (double m : mu)
            if (m != 0.0)
                throw std::invalid_argument("PriceModel: martingale kind requires zero drifts");
    if (dim > 1) (void)risky_cholesky(*this); // PSD gate
}

std::uint64_t PriceSampleSet::checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < data.size() * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

void simulate_one_price_path(const PriceModel& model, const TimeGrid& grid, std::uint64_t seed,
                             int r, double* out) {
    const int d = model.dim;
    const int n = grid.n_nodes();
    const double dt = grid.dt();
    const double sdt = std::sqrt(dt);
    const int nr = d - 1;
    std::vector<double> chol;
    if (nr > 0) chol = risky_cholesky(model);

    rng::Stream st(seed, "price", static_cast<std::uint64_t>(r));
    std::vector<double> z(nr), corr(nr);
    for (int i = 0; i < d; ++i) out[i] = 1.0; // S_0 = 1
    for (int k = 1; k < n; ++k) {
        for (int i = 0; i < nr; ++i) z[i] = st.normal();
        for (int i = 0; i < nr; ++i) {
            double s = 0.0;
            for (int j = 0; j <= i; ++j) s += chol[static_cast<std::size_t>(i) * nr + j] * z[j];
            corr[i] = s;
        }
        double* row = out + static_cast<std::size_t>(k) * d;
        const double* prev = out + static_cast<std::size_t>(k - 1) * d;
        row[0] = 1.0;
        for (int i = 1; i < d; ++i) {
            const double sig = model.sigma[i];
            const double drift = (model.mu[i] - 0.5 * sig * sig) * dt;
            row[i] = prev[i] * std::exp(drift + sig * sdt * corr[i - 1]);
        }
    }
}

PriceSampleSet simulate_prices_impl(const PriceModel& model, const TimeGrid& grid,
                                    std::uint64_t seed, int n_paths, bool parallel) {
    model.validate();
    if (n_paths < 1) throw std::invalid_argument("simulate_prices: need at least one path");
    PriceSampleSet s;
    s.grid = grid;
    s.dim = model.dim;
    s.n_paths = n_paths;
    s.data.assign(static_cast<std::size_t>(n_paths) * grid.n_nodes() * model.dim, 0.0);
    const std::size_t stride = static_cast<std::size_t>(grid.n_nodes()) * model.dim;
    auto body = [&](std::int64_t r) {
        simulate_one_price_path(model, grid, seed, static_cast<int>(r),
                                s.data.data() + static_cast<std::size_t>(r) * stride);
    };
    if (parallel)
        par::parallel_for(n_paths, body);
    else
        par::parallel_for_serial(n_paths, body);
    return s;
}

} // namespace

PriceSampleSet simulate_prices(const PriceModel& model, const TimeGrid& grid, std::uint64_t seed,
                               int n_paths) {
    return simulate_prices_impl(model, grid, seed, n_paths, true);
}

PriceSampleSet simulate_prices_serial(const PriceModel& model, const TimeGrid& grid,
                                      std::uint64_t seed, int n_paths) {
    return simulate_prices_impl(model, grid, seed, n_paths, false);
}

void write_price_csv(const PriceSampleSet& s, std::ostream& out) {
    out << "path_id,t";
    for (int i = 1; i <= s.dim; ++i) out << ",S" << i;
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

PortfolioPath evolve(std::span<const double> x, const FVPath& b, PricePathView prices) {
    const int d = b.dim();
    if (static_cast<int>(x.size()) != d || prices.dim() != d || !(prices.grid() == b.grid()))
        throw std::invalid_argument("evolve: dimension or grid mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("evolve: non-finite endowment");

    PortfolioPath p;
    p.dim = d;
    p.n_nodes = b.n_nodes();
    p.physical.resize(static_cast<std::size_t>(p.n_nodes) * d);
    p.monetary.resize(p.physical.size());
    std::vector<double> vhat(x.begin(), x.end());
    for (int k = 0; k < p.n_nodes; ++k) {
        for (int c = 0; c < d; ++c) {
            vhat[c] += b.increment(k, c) / prices.at(k, c);
            p.physical[static_cast<std::size_t>(k) * d + c] = vhat[c];
            p.monetary[static_cast<std::size_t>(k) * d + c] = vhat[c] * prices.at(k, c);
        }
    }
    return p;
}

FVPath liquidation_strategy(const Cone& cone, std::span<const double> x, const TimeGrid& grid) {
    const int d = cone.dim();
    const double ell = liquidation(cone, x);
    std::vector<double> jump(d);
    for (int c = 0; c < d; ++c) jump[c] = (c == 0 ? ell : 0.0) - x[c];
    return FVPath::single_jump(grid, d, 0, jump);
}

bool is_admissible(std::span<const double> x, const FVPath& b, PricePathView prices,
                   const Cone& cone, double tol) {
    const auto p = evolve(x, b, prices);
    for (int k = 0; k < p.n_nodes; ++k)
        if (!cone.contains(p.monetary_at(k), tol)) return false;
    return true;
}

std::vector<double> constraint_residuals(std::span<const double> x, const FVPath& b,
                                         PricePathView prices, const Cone& cone) {
    if (!cone.has_dual())
        throw std::invalid_argument("constraint_residuals: cone dual unavailable");
    const int d = b.dim();
    const int n = b.n_nodes();
    const int nd = cone.n_dual_generators();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(2) * n * nd);

    // Monotonicity block: hat functions pick out single increments, paired
    // with the generators of -K*.
    for (int g = 0; g < nd; ++g) {
        const auto a = cone.dual_generator(g);
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int c = 0; c < d; ++c) s += -a[c] * b.increment(k, c);
            out.push_back(s);
        }
    }
    // Admissibility block: K* generators against the monetary portfolio.
    const auto p = evolve(x, b, prices);
    for (int g = 0; g < nd; ++g) {
        const auto a = cone.dual_generator(g);
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            const auto v = p.monetary_at(k);
            for (int c = 0; c < d; ++c) s += a[c] * v[c];
            out.push_back(s);
        }
    }
    return out;
}

EpsCps make_cps(const PriceModel& model, const Cone& cone) {
    if (model.kind != PriceModel::Kind::martingale_gbm)
        throw std::invalid_argument(
            "make_cps: only martingale price models are supported (a drifted model would need "
            "a measure change that is not constructed here)");
    if (!cone.dual_strictly_positive())
        throw std::invalid_argument(
            "make_cps: fees must be strictly positive (dual cone touches the orthant boundary)");
    std::vector<double> ones(cone.dim(), 1.0);
    EpsCps cps;
    cps.epsilon = epsilon_margin(cone, ones);
    if (!(cps.epsilon > 0.0))
        throw std::invalid_argument("make_cps: epsilon margin is not positive");
    cps.q_density_terminal = 1.0;
    return cps;
}

namespace {

// percentile bootstrap for a sample mean
void bootstrap_mean_ci(std::span<const double> xs, double level, std::uint64_t seed, double& lo,
                       double& hi) {
    const int n = static_cast<int>(xs.size());
    const int B = 200;
    std::vector<double> means(B);
    rng::Stream st(seed, "bootstrap-mean");
    for (int b = 0; b < B; ++b) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += xs[st.uniform_index(n)];
        means[b] = s / n;
    }
    std::sort(means.begin(), means.end());
    const double alpha = 1.0 - level;
    const int ilo = static_cast<int>(std::floor(alpha / 2.0 * (B - 1)));
    const int ihi = static_cast<int>(std::ceil((1.0 - alpha / 2.0) * (B - 1)));
    lo = means[ilo];
    hi = means[ihi];
}

} // namespace

VariationBoundReport variation_bound_check(const Cone& cone, std::span<const double> x,
                                           std::span<const double> variation_samples,
                                           const EpsCps& cps, std::uint64_t seed,
                                           double ci_level) {
    if (variation_samples.empty())
        throw std::invalid_argument("variation_bound_check: no samples");
    VariationBoundReport r;
    r.n = static_cast<int>(variation_samples.size());
    double s = 0.0, mx = 0.0;
    for (double v : variation_samples) {
        s += v;
        mx = std::max(mx, v);
    }
    r.estimate = s / r.n;
    r.max_observed = mx;
    bootstrap_mean_ci(variation_samples, ci_level, seed, r.ci_lo, r.ci_hi);
    r.bound = purchase(cone, x) / cps.epsilon;
    r.pass = r.ci_lo <= r.bound;
    return r;
}

SupermartingaleReport supermartingale_check(
    std::span<const double> x, const std::function<FVPath(PricePathView)>& strategy,
    const PriceSampleSet& prices, const Cone& cone) {
    const int n_paths = prices.n_paths;
    const int n = prices.grid.n_nodes();
    const int d = prices.dim;
    if (static_cast<int>(x.size()) != d)
        throw std::invalid_argument("supermartingale_check: dimension mismatch");

    // With Z = S the product M . V-hat is the total monetary wealth.
    std::vector<double> wealth(static_cast<std::size_t>(n_paths) * n);
    par::parallel_for(n_paths, [&](std::int64_t r) {
        PricePathView view{&prices, static_cast<int>(r)};
        const FVPath b = strategy(view);
        const auto p = evolve(x, b, view);
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            const auto v = p.monetary_at(k);
            for (int c = 0; c < d; ++c) s += v[c];
            wealth[static_cast<std::size_t>(r) * n + k] = s;
        }
    });

    SupermartingaleReport rep;
    rep.node_means.resize(n);
    rep.node_ses.resize(n);
    for (int k = 0; k < n; ++k) {
        double m = 0.0;
        for (int r = 0; r < n_paths; ++r) m += wealth[static_cast<std::size_t>(r) * n + k];
        m /= n_paths;
        double var = 0.0;
        for (int r = 0; r < n_paths; ++r) {
            const double dlt = wealth[static_cast<std::size_t>(r) * n + k] - m;
            var += dlt * dlt;
        }
        var /= std::max(1, n_paths - 1);
        rep.node_means[k] = m;
        rep.node_ses[k] = std::sqrt(var / n_paths);
    }
    for (int k = 0; k + 1 < n; ++k) {
        const double rise = rep.node_means[k + 1] - rep.node_means[k];
        const double tol =
            3.0 * std::sqrt(rep.node_ses[k] * rep.node_ses[k] +
                            rep.node_ses[k + 1] * rep.node_ses[k + 1]);
        if (rise > tol) {
            ++rep.violations;
            rep.worst_excess = std::max(rep.worst_excess, rise - tol);
        }
    }
    rep.pass = rep.violations == 0;
    return rep;
}

UiConditionReport ui_condition_check(const goals::Utility& u, const Cone& cone,
                                     std::span<const double> z1_terminal_samples, double gamma,
                                     double big_c, double q, std::uint64_t seed, int n_points) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("ui_condition_check: gamma must lie in (0,1)");
    if (!(q > 1.0 / (1.0 - gamma)))
        throw std::invalid_argument("ui_condition_check: need q > 1/(1-gamma)");
    if (!(big_c > 0.0)) throw std::invalid_argument("ui_condition_check: C must be positive");

    UiConditionReport rep;
    // (i) growth bound on random cone points across magnitude scales
    rng::Stream st(seed, "ui-growth");
    const int ng = cone.n_generators();
    const int d = cone.dim();
    std::vector<double> pt(d);
    double max_gap = -1e300;
    for (int s = 0; s < n_points; ++s) {
        std::fill(pt.begin(), pt.end(), 0.0);
        for (int g = 0; g < ng; ++g) {
            const double w = st.u01();
            const auto gen = cone.generator(g);
            for (int c = 0; c < d; ++c) pt[c] += w * gen[c];
        }
        const double scale = std::pow(10.0, -2.0 + 5.0 * st.u01()); // 1e-2 .. 1e3
        for (double& c : pt) c *= scale;
        const double ell = liquidation(cone, pt);
        const double gap = u(ell) - big_c * (1.0 + std::pow(std::max(ell, 0.0), gamma));
        max_gap = std::max(max_gap, gap);
    }
    rep.max_growth_gap = max_gap;
    rep.growth_condition_pass = max_gap <= 1e-9;

    // (ii) moment of the terminal density
    if (z1_terminal_samples.empty())
        throw std::invalid_argument("ui_condition_check: need density samples");
    double m = 0.0;
    bool finite = true;
    for (double z : z1_terminal_samples) {
        if (!(z > 0.0)) { finite = false; break; }
        m += std::pow(z, 1.0 - q);
    }
    rep.moment_estimate = finite ? m / static_cast<double>(z1_terminal_samples.size()) : 0.0;
    rep.moment_condition_pass = finite && std::isfinite(rep.moment_estimate);
    rep.pass = rep.growth_condition_pass && rep.moment_condition_pass;
    return rep;
}

} // namespace scl::market
