#include "scl/goals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace scl::goals {

Distortion::Distortion(Kind k, double g) : kind_(k), gamma_(g) {
    if (k != Kind::identity && !(g > 0.0))
        throw std::invalid_argument("Distortion: gamma must be positive");
    // construction-time sanity sweep
    double prev = -1e-12;
    for (int i = 0; i <= 1000; ++i) {
        const double p = i / 1000.0;
        const double w = (*this)(p);
        if (!std::isfinite(w) || w < prev - 1e-12)
            throw std::invalid_argument("Distortion: not non-decreasing on [0,1]");
        prev = w;
    }
    if (std::abs((*this)(0.0)) > 1e-12 || std::abs((*this)(1.0) - 1.0) > 1e-12)
        throw std::invalid_argument("Distortion: must satisfy w(0)=0, w(1)=1");
}

Distortion Distortion::identity() { return Distortion(Kind::identity, 1.0); }
Distortion Distortion::power(double gamma) { return Distortion(Kind::power, gamma); }
Distortion Distortion::tversky_kahneman(double gamma) {
    return Distortion(Kind::tversky_kahneman, gamma);
}

double Distortion::operator()(double p) const {
    p = std::min(1.0, std::max(0.0, p));
    switch (kind_) {
        case Kind::identity:
            return p;
        case Kind::power:
            return std::pow(p, gamma_);
        case Kind::tversky_kahneman: {
            if (p == 0.0) return 0.0;
            if (p == 1.0) return 1.0;
            const double a = std::pow(p, gamma_);
            const double b = std::pow(1.0 - p, gamma_);
            return a / std::pow(a + b, 1.0 / gamma_);
        }
    }
    return p;
}

double Utility::operator()(double y) const {
    switch (kind) {
        case Kind::identity:
            return y;
        case Kind::capped_linear:
            return std::min(y, a);
        case Kind::power:
            return y >= 0.0 ? std::pow(y, a) : -std::pow(-y, a);
        case Kind::exponential_saturating:
            return y >= 0.0 ? 1.0 - std::exp(-a * y) : std::exp(a * y) - 1.0;
        case Kind::indicator_at_least:
            return y >= a ? 1.0 : 0.0;
    }
    return y;
}

OutcomeSample::OutcomeSample(std::vector<double> v) : values(std::move(v)) {
    if (values.empty()) throw std::invalid_argument("OutcomeSample: empty sample");
    for (double x : values)
        if (!std::isfinite(x)) throw std::invalid_argument("OutcomeSample: non-finite value");
}

double choquet(const OutcomeSample& sample, const Distortion& w) {
    for (double x : sample.values)
        if (x < 0.0)
            throw std::invalid_argument("choquet: negative outcome (split into parts first)");
    std::vector<double> sorted = sample.values;
    std::sort(sorted.begin(), sorted.end());
    const int n = static_cast<int>(sorted.size());
    if (w.is_identity()) {
        double s = 0.0;
        for (double x : sorted) s += x;
        return s / n;
    }
    double total = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double wt = w(static_cast<double>(n - i + 1) / n) - w(static_cast<double>(n - i) / n);
        total += sorted[i - 1] * wt;
    }
    return total;
}

double yaari_value(const OutcomeSample& sample, const Distortion& w) { return choquet(sample, w); }

double expected_utility(const OutcomeSample& sample, const Utility& u) {
    double s = 0.0;
    for (double x : sample.values) s += u(x);
    return s / sample.size();
}

void CPTSpec::validate() const {
    if (!u_plus.bounded_above())
        throw std::invalid_argument("CPTSpec: u_plus must be bounded");
    if (std::abs(u_plus(0.0)) > 1e-12 || std::abs(u_minus(0.0)) > 1e-12)
        throw std::invalid_argument("CPTSpec: utilities must vanish at zero");
    if (!(loss_cap > 0.0)) throw std::invalid_argument("CPTSpec: loss_cap must be positive");
}

CptValue cpt_value(const OutcomeSample& outcomes, const OutcomeSample& benchmark,
                   const CPTSpec& spec) {
    if (outcomes.size() != benchmark.size())
        throw std::invalid_argument("cpt_value: samples must be aligned pathwise");
    spec.validate();
    const int n = outcomes.size();
    std::vector<double> gains(n), losses(n);
    for (int i = 0; i < n; ++i) {
        const double dev = outcomes.values[i] - benchmark.values[i];
        gains[i] = spec.u_plus(std::max(dev, 0.0));
        losses[i] = spec.u_minus(std::max(-dev, 0.0));
    }
    const double plus = choquet(OutcomeSample(std::move(gains)), spec.w_plus);
    const double minus = choquet(OutcomeSample(std::move(losses)), spec.w_minus);
    if (minus >= spec.loss_cap)
        return {-std::numeric_limits<double>::infinity(), true};
    return {plus - minus, false};
}

} // namespace scl::goals
