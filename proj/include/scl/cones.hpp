#pragma once

#include <span>
#include <string>
#include <vector>

namespace scl {

constexpr double kMembershipTol = 1e-9; // absolute LP residual tolerance

/// Proportional transaction fees lambda_ij >= 0 (lambda_ii = 0). Generates the
/// solvency cone spanned by {e_i} and {(1+lambda_ij) e_i - e_j}.
struct TransactionCostSpec {
    int dim = 2;
    std::vector<double> lambda; // row-major dim x dim

    TransactionCostSpec(int d, std::vector<double> lam);
    static TransactionCostSpec uniform(int d, double lam);
    double at(int i, int j) const { return lambda[static_cast<std::size_t>(i) * dim + j]; }
};

/// Polyhedral closed convex proper cone given by generators, with its dual
/// (computed once at construction for dim <= 4). Immutable after construction;
/// all queries are pure.
class Cone {
public:
    /// Builds and validates a cone. Properness (K ∩ -K = {0}) is checked by a
    /// small feasibility LP; `require_orthant` additionally demands that every
    /// e_i lies in the cone (the solvency-cone normalization).
    static Cone from_generators(int dim, std::vector<double> generators,
                                bool require_orthant = true);
    static Cone from_costs(const TransactionCostSpec& spec);

    int dim() const { return dim_; }
    int n_generators() const { return static_cast<int>(gens_.size()) / dim_; }
    std::span<const double> generator(int g) const {
        return {gens_.data() + static_cast<std::size_t>(g) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const double> generators_flat() const { return gens_; }

    bool has_dual() const { return !dual_gens_.empty(); }
    int n_dual_generators() const { return static_cast<int>(dual_gens_.size()) / dim_; }
    std::span<const double> dual_generator(int g) const {
        return {dual_gens_.data() + static_cast<std::size_t>(g) * dim_,
                static_cast<std::size_t>(dim_)};
    }

    bool contains_orthant() const { return contains_orthant_; }
    /// True when every dual generator is strictly positive componentwise
    /// (fails exactly for frictionless rays, e.g. the orthant itself).
    bool dual_strictly_positive() const { return dual_strictly_positive_; }

    /// Membership x in K, decided by the feasibility LP
    /// min 0 s.t. sum_g c_g g = x, c >= 0, within absolute residual `tol`.
    bool contains(std::span<const double> x, double tol = kMembershipTol) const;

    std::string to_json() const;
    static Cone from_json(const std::string& text);

private:
    Cone() = default;
    int dim_ = 0;
    std::vector<double> gens_;
    std::vector<double> dual_gens_;
    bool contains_orthant_ = false;
    bool dual_strictly_positive_ = false;
};

/// The dual cone K* as a Cone (generators enumerated by brute force over
/// generator subsets; supported for dim <= 4).
Cone dual(const Cone& cone);

/// Largest cash amount obtainable by liquidating x:
/// l(x) = sup { y : x - y e1 in K }, solved as a primal LP.
double liquidation(const Cone& cone, std::span<const double> x);

/// Smallest cash amount that buys the position x:
/// p(x) = inf { y : y e1 - x in K }. Satisfies p(x) = -l(-x).
double purchase(const Cone& cone, std::span<const double> x);

/// min over generators g of K of the cosine x.g / (|x||g|). x lies in the
/// eps-interior of K* exactly when the margin exceeds eps. Throws for x = 0.
double epsilon_margin(const Cone& cone, std::span<const double> x);

/// Compact dual section Lambda = K* ∩ {z : z^(1) = 1}, stored by vertices.
struct LambdaSection {
    int dim = 0;
    std::vector<double> vertices; // row-major, each row has first coordinate 1

    int n_vertices() const { return dim == 0 ? 0 : static_cast<int>(vertices.size()) / dim; }
    std::span<const double> vertex(int v) const {
        return {vertices.data() + static_cast<std::size_t>(v) * dim, static_cast<std::size_t>(dim)};
    }
};

/// Scales the dual generators to first coordinate 1. Rejects cones whose dual
/// has a generator with z^(1) ~ 0 (frictionless ray): the section is unbounded
/// and liquidation/purchase must then use the primal LP route only.
LambdaSection lambda_section(const Cone& cone);

/// Dual-route evaluations over the section vertices (cross-checks for the
/// primal LPs): l(x) = min_y x.y, p(x) = max_y x.y over y in Lambda.
double liquidation_via_lambda(const LambdaSection& s, std::span<const double> x);
double purchase_via_lambda(const LambdaSection& s, std::span<const double> x);

} // namespace scl
