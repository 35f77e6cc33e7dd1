#include "difftrend/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace difftrend {

namespace {

constexpr int kMaxIterations = 500;
const double kEps = std::numeric_limits<double>::epsilon();
const double kTiny = std::numeric_limits<double>::min() / kEps;

// Series representation of P(a, x), good for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < kMaxIterations; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw std::runtime_error("incomplete gamma series did not converge");
}

// Continued fraction for Q(a, x) via modified Lentz, good for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) <= kEps) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw std::runtime_error("incomplete gamma continued fraction did not converge");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a) || !std::isfinite(x)) {
        throw std::domain_error("regularized_gamma_p: require a > 0 and x >= 0");
    }
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a) || !std::isfinite(x)) {
        throw std::domain_error("regularized_gamma_q: require a > 0 and x >= 0");
    }
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_continued_fraction(a, x);
}

double chi2_survival(double x, int dof) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
        throw std::domain_error("chi2_survival: statistic must be finite and >= 0");
    }
    if (dof < 1) {
        throw std::domain_error("chi2_survival: dof must be >= 1");
    }
    return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

}  // namespace difftrend
