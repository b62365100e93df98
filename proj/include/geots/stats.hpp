#pragma once

namespace geots {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

/// CDF of the chi-square distribution with dof degrees of freedom.
double chi_square_cdf(double x, int dof);

/// Upper-tail quantile: returns x such that P(X > x) = alpha for
/// X ~ chi-square(dof). Deterministic numerical inversion, any (dof, alpha).
double chi_square_quantile(int dof, double alpha);

}  // namespace geots
