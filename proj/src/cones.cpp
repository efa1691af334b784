#include "scl/cones.hpp"

#include "scl/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace scl {

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Null-space basis of an r x d matrix (row-major), Gauss-Jordan with partial
// pivoting. Returns the rank.
int null_space(int r, int d, std::vector<double> m, std::vector<std::vector<double>>& basis_out) {
    constexpr double kTol = 1e-12;
    std::vector<int> pivot_col_of_row;
    int row = 0;
    std::vector<int> pivot_cols;
    for (int col = 0; col < d && row < r; ++col) {
        int best = -1;
        double best_abs = kTol;
        for (int i = row; i < r; ++i) {
            const double a = std::abs(m[static_cast<std::size_t>(i) * d + col]);
            if (a > best_abs) { best_abs = a; best = i; }
        }
        if (best < 0) continue;
        for (int j = 0; j < d; ++j)
            std::swap(m[static_cast<std::size_t>(best) * d + j], m[static_cast<std::size_t>(row) * d + j]);
        const double piv = m[static_cast<std::size_t>(row) * d + col];
        for (int j = 0; j < d; ++j) m[static_cast<std::size_t>(row) * d + j] /= piv;
        for (int i = 0; i < r; ++i) {
            if (i == row) continue;
            const double f = m[static_cast<std::size_t>(i) * d + col];
            if (f == 0.0) continue;
            for (int j = 0; j < d; ++j)
                m[static_cast<std::size_t>(i) * d + j] -= f * m[static_cast<std::size_t>(row) * d + j];
        }
        pivot_cols.push_back(col);
        ++row;
    }
    const int rank = row;
    basis_out.clear();
    std::vector<bool> is_pivot(d, false);
    for (int c : pivot_cols) is_pivot[c] = true;
    for (int f = 0; f < d; ++f) {
        if (is_pivot[f]) continue;
        std::vector<double> v(d, 0.0);
        v[f] = 1.0;
        for (int i = 0; i < rank; ++i)
            v[pivot_cols[i]] = -m[static_cast<std::size_t>(i) * d + f];
        basis_out.push_back(std::move(v));
    }
    return rank;
}

// Enumerate extreme-ray candidates of {y : g.y >= 0 for all generators g}.
std::vector<double> enumerate_dual_generators(int d, const std::vector<double>& gens) {
    const int ng = static_cast<int>(gens.size()) / d;
    std::vector<std::vector<double>> rays;

    auto admit = [&](std::vector<double> v) {
        const double nv = norm2(v);
        if (nv < 1e-12) return;
        for (double& a : v) a /= nv;
        for (int g = 0; g < ng; ++g) {
            std::span<const double> gen(gens.data() + static_cast<std::size_t>(g) * d,
                                        static_cast<std::size_t>(d));
            if (dot(gen, v) < -1e-9 * norm2(gen)) return;
        }
        for (const auto& r : rays) {
            double diff = 0.0;
            for (int j = 0; j < d; ++j) diff = std::max(diff, std::abs(r[j] - v[j]));
            if (diff < 1e-9) return;
        }
        rays.push_back(std::move(v));
    };

    if (d == 1) {
        admit({1.0});
        admit({-1.0});
    } else {
        // all generator subsets of size d-1 whose span has rank d-1
        std::vector<int> idx(d - 1);
        std::vector<int> comb;
        std::function<void(int, int)> rec = [&](int start, int need) {
            if (need == 0) {
                std::vector<double> sub;
                sub.reserve(static_cast<std::size_t>(d - 1) * d);
                for (int g : comb)
                    for (int j = 0; j < d; ++j)
                        sub.push_back(gens[static_cast<std::size_t>(g) * d + j]);
                std::vector<std::vector<double>> basis;
                const int rank = null_space(d - 1, d, std::move(sub), basis);
                if (rank == d - 1 && basis.size() == 1) {
                    admit(basis[0]);
                    std::vector<double> neg = basis[0];
                    for (double& a : neg) a = -a;
                    admit(std::move(neg));
                }
                return;
            }
            for (int g = start; g <= ng - need; ++g) {
                comb.push_back(g);
                rec(g + 1, need - 1);
                comb.pop_back();
            }
        };
        rec(0, d - 1);
    }

    std::vector<double> flat;
    for (const auto& r : rays) flat.insert(flat.end(), r.begin(), r.end());
    return flat;
}

// K is proper iff no convex combination of the generators vanishes.
bool is_proper(int d, const std::vector<double>& gens) {
    const int ng = static_cast<int>(gens.size()) / d;
    const int m = d + 1;
    std::vector<double> a(static_cast<std::size_t>(m) * ng, 0.0);
    for (int g = 0; g < ng; ++g) {
        for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i) * ng + g] = gens[static_cast<std::size_t>(g) * d + i];
        a[static_cast<std::size_t>(d) * ng + g] = 1.0;
    }
    std::vector<double> b(m, 0.0);
    b[d] = 1.0;
    std::vector<double> c(ng, 0.0);
    const auto r = lp::solve(m, ng, a, b, c, 1e-9);
    return r.status == lp::Status::infeasible;
}

} // namespace

TransactionCostSpec::TransactionCostSpec(int d, std::vector<double> lam) : dim(d), lambda(std::move(lam)) {
    if (d < 1) throw std::invalid_argument("TransactionCostSpec: dim must be positive");
    if (lambda.size() != static_cast<std::size_t>(d) * d)
        throw std::invalid_argument("TransactionCostSpec: lambda must be dim x dim");
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double l = at(i, j);
            if (!std::isfinite(l) || l < 0.0)
                throw std::invalid_argument("TransactionCostSpec: lambda entries must be finite and >= 0");
            if (i == j && l != 0.0)
                throw std::invalid_argument("TransactionCostSpec: diagonal lambda must be zero");
        }
}

TransactionCostSpec TransactionCostSpec::uniform(int d, double lam) {
    std::vector<double> m(static_cast<std::size_t>(d) * d, lam);
    for (int i = 0; i < d; ++i) m[static_cast<std::size_t>(i) * d + i] = 0.0;
    return TransactionCostSpec(d, std::move(m));
}

Cone Cone::from_generators(int dim, std::vector<double> generators, bool require_orthant) {
    if (dim < 1) throw std::invalid_argument("Cone: dim must be positive");
    if (generators.empty() || generators.size() % static_cast<std::size_t>(dim) != 0)
        throw std::invalid_argument("Cone: generator list must be a multiple of dim");
    const int ng = static_cast<int>(generators.size()) / dim;
    for (int g = 0; g < ng; ++g) {
        double n = 0.0;
        for (int j = 0; j < dim; ++j) {
            const double a = generators[static_cast<std::size_t>(g) * dim + j];
            if (!std::isfinite(a)) throw std::invalid_argument("Cone: non-finite generator entry");
            n += a * a;
        }
        if (n < 1e-24) throw std::invalid_argument("Cone: zero generator");
    }
    if (!is_proper(dim, generators))
        throw std::invalid_argument("Cone: not proper (K ∩ -K != {0})");

    Cone k;
    k.dim_ = dim;
    k.gens_ = std::move(generators);
    if (dim <= 4) k.dual_gens_ = enumerate_dual_generators(dim, k.gens_);

    bool orthant = true;
    std::vector<double> e(dim, 0.0);
    for (int i = 0; i < dim; ++i) {
        e.assign(dim, 0.0);
        e[i] = 1.0;
        if (!k.contains(e)) { orthant = false; break; }
    }
    k.contains_orthant_ = orthant;
    if (require_orthant && !orthant)
        throw std::invalid_argument("Cone: solvency cone must contain the nonnegative orthant");

    bool strict = !k.dual_gens_.empty();
    for (std::size_t i = 0; i < k.dual_gens_.size(); ++i) {
        // scale-free strictness check per generator row
        if (k.dual_gens_[i] < 1e-9) { strict = false; break; }
    }
    k.dual_strictly_positive_ = strict;
    return k;
}

Cone Cone::from_costs(const TransactionCostSpec& spec) {
    const int d = spec.dim;
    std::vector<double> gens;
    for (int i = 0; i < d; ++i) {
        std::vector<double> e(d, 0.0);
        e[i] = 1.0;
        gens.insert(gens.end(), e.begin(), e.end());
    }
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            std::vector<double> g(d, 0.0);
            g[i] = 1.0 + spec.at(i, j);
            g[j] = -1.0;
            gens.insert(gens.end(), g.begin(), g.end());
        }
    return from_generators(d, std::move(gens), true);
}

bool Cone::contains(std::span<const double> x, double tol) const {
    if (static_cast<int>(x.size()) != dim_)
        throw std::invalid_argument("Cone::contains: dimension mismatch");
    const int ng = n_generators();
    std::vector<double> a(static_cast<std::size_t>(dim_) * ng);
    for (int i = 0; i < dim_; ++i)
        for (int g = 0; g < ng; ++g)
            a[static_cast<std::size_t>(i) * ng + g] = gens_[static_cast<std::size_t>(g) * dim_ + i];
    std::vector<double> c(ng, 0.0);
    const auto r = lp::solve(dim_, ng, a, std::vector<double>(x.begin(), x.end()), c, tol);
    return r.status != lp::Status::infeasible;
}

Cone dual(const Cone& cone) {
    if (cone.dim() > 4)
        throw std::invalid_argument("dual: generator enumeration supports dim <= 4 only");
    if (!cone.has_dual()) throw std::logic_error("dual: no dual generators available");
    std::vector<double> g(cone.dual_generator(0).data(),
                          cone.dual_generator(0).data() +
                              static_cast<std::size_t>(cone.n_dual_generators()) * cone.dim());
    return Cone::from_generators(cone.dim(), std::move(g), false);
}

namespace {

// max y s.t. x - y e1 = sum c_g g, c >= 0   (y split into y+ - y-)
double cash_exchange_lp(const Cone& cone, std::span<const double> x, bool liquidate) {
    const int d = cone.dim();
    if (static_cast<int>(x.size()) != d)
        throw std::invalid_argument("liquidation/purchase: dimension mismatch");
    const int ng = cone.n_generators();
    const int n = ng + 2;
    std::vector<double> a(static_cast<std::size_t>(d) * n, 0.0);
    const double gen_sign = liquidate ? 1.0 : -1.0;
    for (int i = 0; i < d; ++i) {
        for (int g = 0; g < ng; ++g)
            a[static_cast<std::size_t>(i) * n + g] =
                gen_sign * cone.generators_flat()[static_cast<std::size_t>(g) * d + i];
    }
    a[static_cast<std::size_t>(0) * n + ng] = 1.0;      // y+
    a[static_cast<std::size_t>(0) * n + ng + 1] = -1.0; // y-
    std::vector<double> c(n, 0.0);
    // liquidation maximizes y, purchase minimizes it
    c[ng] = liquidate ? -1.0 : 1.0;
    c[ng + 1] = -c[ng];
    const auto r = lp::solve(d, n, a, std::vector<double>(x.begin(), x.end()), c, 1e-11);
    if (r.status == lp::Status::infeasible)
        throw std::domain_error("liquidation/purchase: position not exchangeable into cash for this cone");
    if (r.status == lp::Status::unbounded)
        throw std::domain_error("liquidation/purchase: unbounded (cone is not proper?)");
    return liquidate ? -r.value : r.value;
}

} // namespace

double liquidation(const Cone& cone, std::span<const double> x) {
    return cash_exchange_lp(cone, x, true);
}

double purchase(const Cone& cone, std::span<const double> x) {
    return cash_exchange_lp(cone, x, false);
}

double epsilon_margin(const Cone& cone, std::span<const double> x) {
    if (static_cast<int>(x.size()) != cone.dim())
        throw std::invalid_argument("epsilon_margin: dimension mismatch");
    const double nx = norm2(x);
    if (nx < 1e-15) throw std::invalid_argument("epsilon_margin: x must be nonzero");
    double margin = std::numeric_limits<double>::infinity();
    for (int g = 0; g < cone.n_generators(); ++g) {
        const auto gen = cone.generator(g);
        margin = std::min(margin, dot(x, gen) / (nx * norm2(gen)));
    }
    return margin;
}

LambdaSection lambda_section(const Cone& cone) {
    if (!cone.has_dual())
        throw std::invalid_argument("lambda_section: dual generators unavailable");
    LambdaSection s;
    s.dim = cone.dim();
    for (int g = 0; g < cone.n_dual_generators(); ++g) {
        const auto z = cone.dual_generator(g);
        const double z1 = z[0];
        if (z1 < 1e-9 * norm2(z))
            throw std::invalid_argument(
                "lambda_section: dual generator with vanishing first coordinate "
                "(frictionless ray); the section is unbounded, use the primal LPs");
        for (int j = 0; j < s.dim; ++j) s.vertices.push_back(z[j] / z1);
    }
    return s;
}

double liquidation_via_lambda(const LambdaSection& s, std::span<const double> x) {
    double v = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.n_vertices(); ++i) v = std::min(v, dot(x, s.vertex(i)));
    return v;
}

double purchase_via_lambda(const LambdaSection& s, std::span<const double> x) {
    double v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.n_vertices(); ++i) v = std::max(v, dot(x, s.vertex(i)));
    return v;
}

std::string Cone::to_json() const {
    nlohmann::json j;
    j["dim"] = dim_;
    auto pack = [&](const std::vector<double>& flat) {
        nlohmann::json rows = nlohmann::json::array();
        for (int g = 0; g * dim_ < static_cast<int>(flat.size()); ++g) {
            nlohmann::json row = nlohmann::json::array();
            for (int i = 0; i < dim_; ++i) row.push_back(flat[static_cast<std::size_t>(g) * dim_ + i]);
            rows.push_back(row);
        }
        return rows;
    };
    j["generators"] = pack(gens_);
    j["dual_generators"] = pack(dual_gens_);
    return j.dump(2);
}

Cone Cone::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const int d = j.at("dim").get<int>();
    std::vector<double> gens;
    for (const auto& row : j.at("generators"))
        for (const auto& v : row) gens.push_back(v.get<double>());
    return from_generators(d, std::move(gens), false);
}

} // namespace scl
