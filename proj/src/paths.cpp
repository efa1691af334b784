#include "scl/paths.hpp"

#include "scl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace scl {

namespace {

double norm2_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

void require_compatible(const FVPath& f, const FVPath& g, const char* what) {
    if (!(f.grid() == g.grid()) || f.dim() != g.dim())
        throw std::invalid_argument(std::string(what) + ": grid/dimension mismatch");
}

} // namespace

FVPath FVPath::from_values(TimeGrid grid, int dim, std::vector<double> values) {
    if (dim < 1) throw std::invalid_argument("FVPath: dim must be positive");
    if (values.size() != static_cast<std::size_t>(grid.n_nodes()) * dim)
        throw std::invalid_argument("FVPath: value array must be n_nodes x dim");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("FVPath: non-finite value");
    FVPath f(grid, dim);
    f.values_ = std::move(values);
    return f;
}

FVPath FVPath::single_jump(TimeGrid grid, int dim, int node, std::span<const double> jump) {
    if (node < 0 || node >= grid.n_nodes()) throw std::invalid_argument("FVPath: node out of range");
    std::vector<double> values(static_cast<std::size_t>(grid.n_nodes()) * dim, 0.0);
    for (int k = node; k < grid.n_nodes(); ++k)
        for (int c = 0; c < dim; ++c) values[static_cast<std::size_t>(k) * dim + c] = jump[c];
    return from_values(grid, dim, std::move(values));
}

double total_variation(const FVPath& f) {
    double var = 0.0;
    for (int c = 0; c < f.dim(); ++c)
        for (int k = 0; k < f.n_nodes(); ++k) var += std::abs(f.increment(k, c));
    return var;
}

double mz_distance(const FVPath& f, const FVPath& g) {
    require_compatible(f, g, "mz_distance");
    const auto& grid = f.grid();
    double d = 0.0;
    for (int k = 0; k < grid.n_steps; ++k) {
        const double len = grid.node(k + 1) - grid.node(k);
        d += len * std::min(norm2_diff(f.node_values(k), g.node_values(k)), 1.0);
    }
    d += std::min(norm2_diff(f.node_values(grid.n_steps), g.node_values(grid.n_steps)), 1.0);
    return d;
}

double stieltjes_integral(std::span<const double> integrand_nodes, const FVPath& g, int comp) {
    if (static_cast<int>(integrand_nodes.size()) != g.n_nodes())
        throw std::invalid_argument("stieltjes_integral: integrand must be sampled on the grid");
    for (double v : integrand_nodes)
        if (!std::isfinite(v)) throw std::invalid_argument("stieltjes_integral: non-finite integrand");
    double s = 0.0;
    for (int k = 0; k < g.n_nodes(); ++k) s += integrand_nodes[k] * g.increment(k, comp);
    return s;
}

std::vector<double> stieltjes_integral(std::span<const double> integrand_nodes, const FVPath& g) {
    std::vector<double> out(g.dim());
    for (int c = 0; c < g.dim(); ++c) out[c] = stieltjes_integral(integrand_nodes, g, c);
    return out;
}

std::vector<double> stieltjes_componentwise(std::span<const double> integrand_node_major,
                                            const FVPath& g) {
    if (static_cast<int>(integrand_node_major.size()) != g.n_nodes() * g.dim())
        throw std::invalid_argument("stieltjes_componentwise: integrand layout mismatch");
    std::vector<double> out(g.dim(), 0.0);
    for (int k = 0; k < g.n_nodes(); ++k)
        for (int c = 0; c < g.dim(); ++c)
            out[c] += integrand_node_major[static_cast<std::size_t>(k) * g.dim() + c] *
                      g.increment(k, c);
    return out;
}

JordanPair jordan(const FVPath& f) {
    const int n = f.n_nodes(), d = f.dim();
    std::vector<double> plus(static_cast<std::size_t>(n) * d, 0.0);
    std::vector<double> minus(static_cast<std::size_t>(n) * d, 0.0);
    for (int c = 0; c < d; ++c) {
        double p = 0.0, m = 0.0;
        for (int k = 0; k < n; ++k) {
            const double inc = f.increment(k, c);
            if (inc >= 0.0)
                p += inc;
            else
                m -= inc;
            plus[static_cast<std::size_t>(k) * d + c] = p;
            minus[static_cast<std::size_t>(k) * d + c] = m;
        }
    }
    return {FVPath::from_values(f.grid(), d, std::move(plus)),
            FVPath::from_values(f.grid(), d, std::move(minus))};
}

bool is_k_monotone(const FVPath& f, const Cone& cone, MonotoneDirection dir, double tol) {
    if (cone.dim() != f.dim())
        throw std::invalid_argument("is_k_monotone: cone/path dimension mismatch");
    std::vector<double> v(f.dim());
    for (int k = 0; k < f.n_nodes(); ++k) {
        for (int c = 0; c < f.dim(); ++c) {
            const double inc = f.increment(k, c);
            v[c] = dir == MonotoneDirection::increasing ? inc : -inc;
        }
        if (!cone.contains(v, tol)) return false;
    }
    return true;
}

RnDerivative rn_derivative(const FVPath& f) {
    RnDerivative r;
    if (total_variation(f) == 0.0) return r;
    const int n = f.n_nodes(), d = f.dim();
    r.directions.assign(static_cast<std::size_t>(n) * d, 0.0);
    r.weights.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double l1 = 0.0;
        for (int c = 0; c < d; ++c) l1 += std::abs(f.increment(k, c));
        r.weights[k] = l1;
        if (l1 > 0.0)
            for (int c = 0; c < d; ++c)
                r.directions[static_cast<std::size_t>(k) * d + c] = f.increment(k, c) / l1;
    }
    return r;
}

namespace {

// Solve the small dense system M x = b by Gaussian elimination.
std::vector<double> solve_dense(int n, std::vector<double> m, std::vector<double> b) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int i = col + 1; i < n; ++i)
            if (std::abs(m[static_cast<std::size_t>(i) * n + col]) >
                std::abs(m[static_cast<std::size_t>(piv) * n + col]))
                piv = i;
        if (std::abs(m[static_cast<std::size_t>(piv) * n + col]) < 1e-14)
            throw std::runtime_error("solve_dense: singular matrix");
        if (piv != col) {
            for (int j = 0; j < n; ++j)
                std::swap(m[static_cast<std::size_t>(piv) * n + j],
                          m[static_cast<std::size_t>(col) * n + j]);
            std::swap(b[piv], b[col]);
        }
        const double p = m[static_cast<std::size_t>(col) * n + col];
        for (int i = col + 1; i < n; ++i) {
            const double f = m[static_cast<std::size_t>(i) * n + col] / p;
            if (f == 0.0) continue;
            for (int j = col; j < n; ++j)
                m[static_cast<std::size_t>(i) * n + j] -= f * m[static_cast<std::size_t>(col) * n + j];
            b[i] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= m[static_cast<std::size_t>(i) * n + j] * x[j];
        x[i] = s / m[static_cast<std::size_t>(i) * n + i];
    }
    return x;
}

} // namespace

GramCheck gram_monotonicity_check(const FVPath& f, const Cone& cone, MonotoneDirection dir,
                                  double tol) {
    const int d = f.dim();
    if (cone.dim() != d)
        throw std::invalid_argument("gram_monotonicity_check: dimension mismatch");
    if (!cone.has_dual() || cone.n_dual_generators() < d)
        throw std::invalid_argument("gram_monotonicity_check: need a dual basis");

    // greedy pick of d linearly independent dual generators
    std::vector<std::vector<double>> basis;
    for (int g = 0; g < cone.n_dual_generators() && static_cast<int>(basis.size()) < d; ++g) {
        std::vector<double> trial;
        for (const auto& row : basis) trial.insert(trial.end(), row.begin(), row.end());
        const auto cand = cone.dual_generator(g);
        trial.insert(trial.end(), cand.begin(), cand.end());
        // rank probe via Gram determinant of the trial set
        const int r = static_cast<int>(basis.size()) + 1;
        std::vector<double> gram(static_cast<std::size_t>(r) * r, 0.0);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                double s = 0.0;
                for (int c = 0; c < d; ++c)
                    s += trial[static_cast<std::size_t>(i) * d + c] *
                         trial[static_cast<std::size_t>(j) * d + c];
                gram[static_cast<std::size_t>(i) * r + j] = s;
            }
        try {
            std::vector<double> probe(r, 1.0);
            (void)solve_dense(r, gram, probe);
            basis.emplace_back(cand.begin(), cand.end());
        } catch (const std::runtime_error&) {
            // dependent, skip
        }
    }
    if (static_cast<int>(basis.size()) < d)
        throw std::invalid_argument("gram_monotonicity_check: dual generators do not span");

    const int n = f.n_nodes();
    // g_i(t) = a_i . f(t) must be monotone in the direction of f
    bool monotone = true;
    std::vector<double> scalars(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < d; ++i) {
        double prev = 0.0;
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int c = 0; c < d; ++c) s += basis[i][c] * f.value(k, c);
            scalars[static_cast<std::size_t>(k) * d + i] = s;
            const double step = s - prev;
            if (dir == MonotoneDirection::increasing ? step < -tol : step > tol) monotone = false;
            prev = s;
        }
    }

    // reconstruct f(t) = sum_i c_i(t) a_i with c = G^{-1} g
    std::vector<double> gram(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (int c = 0; c < d; ++c) s += basis[i][c] * basis[j][c];
            gram[static_cast<std::size_t>(i) * d + j] = s;
        }
    double max_err = 0.0;
    for (int k = 0; k < n; ++k) {
        std::vector<double> rhs(d);
        for (int i = 0; i < d; ++i) rhs[i] = scalars[static_cast<std::size_t>(k) * d + i];
        const auto coef = solve_dense(d, gram, rhs);
        for (int c = 0; c < d; ++c) {
            double rec = 0.0;
            for (int i = 0; i < d; ++i) rec += coef[i] * basis[i][c];
            max_err = std::max(max_err, std::abs(rec - f.value(k, c)));
        }
    }
    return {monotone, max_err};
}

namespace {

// Longest monotone run, earliest-index deterministic tie-breaking.
std::vector<int> longest_monotone_subsequence(const std::vector<double>& v, bool non_decreasing) {
    const int m = static_cast<int>(v.size());
    std::vector<int> len(m, 1), prev(m, -1);
    auto ok = [&](double a, double b) { return non_decreasing ? a <= b : a >= b; };
    int best_len = 1, best_end = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < i; ++j)
            if (ok(v[j], v[i]) && len[j] + 1 > len[i]) {
                len[i] = len[j] + 1;
                prev[i] = j;
            }
        if (len[i] > best_len) {
            best_len = len[i];
            best_end = i;
        }
    }
    std::vector<int> out;
    for (int i = best_end; i >= 0; i = prev[i]) {
        out.push_back(i);
        if (prev[i] < 0) break;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

} // namespace

HellyResult helly_subsequence(std::span<const FVPath> paths, double var_bound) {
    if (paths.empty()) throw std::invalid_argument("helly_subsequence: empty input");
    const int N = static_cast<int>(paths.size());
    for (int i = 1; i < N; ++i) require_compatible(paths[0], paths[i], "helly_subsequence");
    for (int i = 0; i < N; ++i)
        if (total_variation(paths[i]) > var_bound + 1e-12)
            throw std::invalid_argument("helly_subsequence: variation bound violated");

    std::vector<int> idx(N);
    for (int i = 0; i < N; ++i) idx[i] = i;

    const int n = paths[0].n_nodes(), d = paths[0].dim();
    for (int k = 0; k < n && idx.size() > 2; ++k) {
        for (int c = 0; c < d && idx.size() > 2; ++c) {
            std::vector<double> v(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) v[i] = paths[idx[i]].value(k, c);

            // Pigeonhole first: with quantized values the largest exact-value
            // class gives an eventually constant (hence convergent) selection.
            // Ties go to the class seen earliest.
            std::vector<int> best_group;
            for (std::size_t i = 0; i < v.size(); ++i) {
                std::vector<int> group;
                bool seen_before = false;
                for (std::size_t j = 0; j < v.size(); ++j) {
                    if (v[j] == v[i]) {
                        if (j < i) { seen_before = true; break; }
                        group.push_back(static_cast<int>(j));
                    }
                }
                if (!seen_before && group.size() > best_group.size()) best_group = std::move(group);
            }

            const auto up = longest_monotone_subsequence(v, true);
            const auto dn = longest_monotone_subsequence(v, false);
            const auto& mono = up.size() >= dn.size() ? up : dn;
            const auto& keep = best_group.size() >= 3 ? best_group : mono;
            std::vector<int> next;
            next.reserve(keep.size());
            for (int p : keep) next.push_back(idx[p]);
            idx = std::move(next);
        }
    }
    return {idx, paths[idx.back()]};
}

void write_csv(const FVPath& f, std::ostream& out) {
    out << "t";
    for (int c = 1; c <= f.dim(); ++c) out << ",c" << c;
    out << "\n";
    char buf[64];
    for (int k = 0; k < f.n_nodes(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", f.grid().node(k));
        out << buf;
        for (int c = 0; c < f.dim(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", f.value(k, c));
            out << ',' << buf;
        }
        out << "\n";
    }
}

FVPath read_fv_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("read_fv_csv: empty stream");
    int dim = 0;
    for (char ch : line)
        if (ch == ',') ++dim;
    if (dim < 1 || line.substr(0, 1) != "t")
        throw std::invalid_argument("read_fv_csv: bad header");

    std::vector<double> times;
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        int col = 0;
        while (std::getline(row, cell, ',')) {
            const double x = std::strtod(cell.c_str(), nullptr);
            if (col == 0)
                times.push_back(x);
            else
                values.push_back(x);
            ++col;
        }
        if (col != dim + 1) throw std::invalid_argument("read_fv_csv: ragged row");
    }
    if (times.size() < 2) throw std::invalid_argument("read_fv_csv: need at least two nodes");
    const int n_steps = static_cast<int>(times.size()) - 1;
    if (times.front() != 0.0) throw std::invalid_argument("read_fv_csv: grid must start at zero");
    const TimeGrid grid(times.back(), n_steps);
    for (int k = 0; k <= n_steps; ++k)
        if (std::abs(times[k] - grid.node(k)) > 1e-12 * std::max(1.0, grid.horizon))
            throw std::invalid_argument("read_fv_csv: grid not uniform");
    return FVPath::from_values(grid, dim, std::move(values));
}

std::vector<double> mz_distance_matrix(std::span<const FVPath> paths, bool parallel) {
    const int n = static_cast<int>(paths.size());
    std::vector<double> m(static_cast<std::size_t>(n) * n, 0.0);
    auto row = [&](std::int64_t i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            m[static_cast<std::size_t>(i) * n + j] = mz_distance(paths[i], paths[j]);
        }
    };
    if (parallel)
        par::parallel_for(n, row);
    else
        par::parallel_for_serial(n, row);
    return m;
}

} // namespace scl
