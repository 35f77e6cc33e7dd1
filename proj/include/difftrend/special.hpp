#pragma once

namespace difftrend {

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a), a > 0, x ≥ 0.
double regularized_gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x).
double regularized_gamma_q(double a, double x);

/// Survival function of the χ² distribution with `dof` degrees of freedom,
/// i.e. the p-value of a goodness-of-fit statistic x. Monotone nonincreasing
/// in x; chi2_survival(0, k) = 1.
double chi2_survival(double x, int dof);

}  // namespace difftrend
