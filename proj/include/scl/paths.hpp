#pragma once

#include "scl/cones.hpp"
#include "scl/grid.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace scl {

/// Right-continuous piecewise-constant vector path of finite variation on
/// [0,T]: the value at node t_k is the right limit, the path is constant on
/// [t_k, t_{k+1}), and f(0-) = 0 so values[0] is the jump at time zero.
/// Immutable after construction.
class FVPath {
public:
    FVPath(TimeGrid grid, int dim)
        : grid_(grid), dim_(dim),
          values_(static_cast<std::size_t>(grid.n_nodes()) * dim, 0.0) {}

    static FVPath from_values(TimeGrid grid, int dim, std::vector<double> values);
    static FVPath single_jump(TimeGrid grid, int dim, int node, std::span<const double> jump);

    const TimeGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    int n_nodes() const { return grid_.n_nodes(); }

    double value(int node, int comp) const {
        return values_[static_cast<std::size_t>(node) * dim_ + comp];
    }
    std::span<const double> node_values(int node) const {
        return {values_.data() + static_cast<std::size_t>(node) * dim_,
                static_cast<std::size_t>(dim_)};
    }
    std::span<const double> values_flat() const { return values_; }

    /// Increment at node k, with the f(0-)=0 convention at k=0.
    double increment(int node, int comp) const {
        const double cur = value(node, comp);
        return node == 0 ? cur : cur - value(node - 1, comp);
    }
    std::vector<double> increment_at(int node) const {
        std::vector<double> d(dim_);
        for (int c = 0; c < dim_; ++c) d[c] = increment(node, c);
        return d;
    }

    bool operator==(const FVPath& o) const {
        return grid_ == o.grid_ && dim_ == o.dim_ && values_ == o.values_;
    }

private:
    TimeGrid grid_;
    int dim_;
    std::vector<double> values_;
};

struct JordanPair {
    FVPath plus;  // componentwise increasing
    FVPath minus; // componentwise increasing; plus - minus == source exactly
};

enum class MonotoneDirection { increasing, decreasing };

/// Var_T f = sum_c ( |f_c(0)| + sum_k |f_c(t_k) - f_c(t_{k-1})| ).
/// Exact for piecewise-constant paths: the partition supremum is attained on
/// the grid.
double total_variation(const FVPath& f);

/// d(f,g) = int_[0,T) min(|f-g|, 1) dt + min(|f(T)-g(T)|, 1), with the
/// Euclidean norm, evaluated exactly over the constancy intervals.
double mz_distance(const FVPath& f, const FVPath& g);

/// (L-S) integral including the atom at zero:
/// f(0) g(0) + sum_{k>=1} f(t_k) (g(t_k) - g(t_{k-1})) for one component.
double stieltjes_integral(std::span<const double> integrand_nodes, const FVPath& g, int comp);

/// Same scalar integrand against every component of g.
std::vector<double> stieltjes_integral(std::span<const double> integrand_nodes, const FVPath& g);

/// Componentwise integrand (node-major layout matching the path values):
/// result_c = sum_k f(t_k, c) dg_c.
std::vector<double> stieltjes_componentwise(std::span<const double> integrand_node_major,
                                            const FVPath& g);

/// Componentwise split of increments into positive and negative parts.
JordanPair jordan(const FVPath& f);

/// True when every grid increment (including the atom at zero) lies in K
/// (increasing) or -K (decreasing), decided by the cone membership LP.
bool is_k_monotone(const FVPath& f, const Cone& cone, MonotoneDirection dir,
                   double tol = kMembershipTol);

/// df/dVar f per constancy interval: each increment divided by its l1-norm
/// contribution. Empty for a zero-variation path.
struct RnDerivative {
    std::vector<double> directions; // node-major, zero rows where no jump
    std::vector<double> weights;    // per node, the l1 variation contribution

    bool empty() const { return weights.empty(); }
    std::span<const double> direction_at(int node, int dim) const {
        return {directions.data() + static_cast<std::size_t>(node) * dim,
                static_cast<std::size_t>(dim)};
    }
};
RnDerivative rn_derivative(const FVPath& f);

/// Cross-check of the dual-basis route behind the derivative representation:
/// projects f onto scalar products with a dual-generator basis, verifies their
/// monotonicity, and reconstructs f through the Gram matrix.
struct GramCheck {
    bool scalar_components_monotone = false;
    double max_reconstruction_error = 0.0;
};
GramCheck gram_monotonicity_check(const FVPath& f, const Cone& cone, MonotoneDirection dir,
                                  double tol = 1e-9);

/// Helly-type extraction: from paths with Var <= c on a common grid, selects
/// (node by node, longest-monotone-run diagonal argument with earliest-index
/// tie-breaking) a subsequence whose values are monotone at every node, and
/// returns it with its pointwise limit.
struct HellyResult {
    std::vector<int> indices;
    FVPath limit;
};
HellyResult helly_subsequence(std::span<const FVPath> paths, double var_bound);

/// CSV with header `t,c1,...,cd`, one row per node, 17 significant digits
/// (bit-exact round trip for binary64).
void write_csv(const FVPath& f, std::ostream& out);
FVPath read_fv_csv(std::istream& in);

/// Full pairwise MZ-distance matrix (row-major N x N). The parallel kernel
/// splits by rows; the serial variant is the testing reference.
std::vector<double> mz_distance_matrix(std::span<const FVPath> paths, bool parallel = true);

} // namespace scl
