#pragma once

#include <span>
#include <vector>

namespace scl::goals {

/// Probability distortion w: [0,1] -> [0,1], continuous non-decreasing with
/// w(0)=0 and w(1)=1 (checked on a 1001-point grid at construction).
class Distortion {
public:
    enum class Kind { identity, power, tversky_kahneman };

    static Distortion identity();
    static Distortion power(double gamma);
    static Distortion tversky_kahneman(double gamma);

    double operator()(double p) const;
    Kind kind() const { return kind_; }
    double gamma() const { return gamma_; }
    bool is_identity() const { return kind_ == Kind::identity; }

private:
    Distortion(Kind k, double g);
    Kind kind_ = Kind::identity;
    double gamma_ = 1.0;
};

/// Scalar utility curve from a small catalog of shapes.
struct Utility {
    enum class Kind { identity, capped_linear, power, exponential_saturating, indicator_at_least };
    Kind kind = Kind::identity;
    double a = 1.0; // cap / exponent / rate / threshold, depending on kind

    static Utility identity() { return {Kind::identity, 0.0}; }
    static Utility capped_linear(double cap) { return {Kind::capped_linear, cap}; }
    static Utility power(double alpha) { return {Kind::power, alpha}; }
    static Utility exponential_saturating(double rate) { return {Kind::exponential_saturating, rate}; }
    static Utility indicator_at_least(double threshold) { return {Kind::indicator_at_least, threshold}; }

    double operator()(double y) const;
    bool bounded_above() const {
        return kind == Kind::capped_linear || kind == Kind::exponential_saturating ||
               kind == Kind::indicator_at_least;
    }
    bool zero_at_zero() const { return kind != Kind::indicator_at_least || a > 0.0; }
};

/// Empirical law of a scalar outcome: i.i.d. draws with uniform weights.
struct OutcomeSample {
    std::vector<double> values;

    explicit OutcomeSample(std::vector<double> v);
    int size() const { return static_cast<int>(values.size()); }
};

/// Exact Choquet integral of the empirical law: with order statistics
/// x_(1) <= ... <= x_(n),
///   sum_i x_(i) [ w((n-i+1)/n) - w((n-i)/n) ].
/// Requires nonnegative values (split signed outcomes first).
double choquet(const OutcomeSample& sample, const Distortion& w);

/// Distorted expectation of nonnegative outcomes; same contract as choquet.
double yaari_value(const OutcomeSample& sample, const Distortion& w);

/// Sample mean of U(outcome).
double expected_utility(const OutcomeSample& sample, const Utility& u);

/// Gain/loss legs relative to a pathwise benchmark, with separate distortions.
/// u_plus must be bounded above; both legs vanish at zero.
struct CPTSpec {
    Distortion w_plus = Distortion::identity();
    Distortion w_minus = Distortion::identity();
    Utility u_plus = Utility::capped_linear(1e6);
    Utility u_minus = Utility::identity();
    double loss_cap = 1e12; // loss leg beyond this counts as divergent

    void validate() const;
};

struct CptValue {
    double value = 0.0;
    bool loss_diverged = false; // value is the -inf sentinel when set
};

/// I_+(u_plus((X-W)^+)) - I_-(u_minus((X-W)^-)) over aligned samples
/// (X = outcomes, W = benchmark, same Monte Carlo paths).
CptValue cpt_value(const OutcomeSample& outcomes, const OutcomeSample& benchmark,
                   const CPTSpec& spec);

} // namespace scl::goals
