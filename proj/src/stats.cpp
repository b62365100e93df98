#include "geots/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace geots {

namespace {

// Series expansion of P(a,x), converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("regularized_gamma_p: series failed to converge");
}

// Continued fraction for Q(a,x), for x >= a + 1 (modified Lentz).
double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15)
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  }
  throw std::runtime_error("regularized_gamma_p: continued fraction failed to converge");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("regularized_gamma_p: a must be > 0");
  if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi_square_cdf(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("chi_square_cdf: dof must be >= 1");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi_square_quantile(int dof, double alpha) {
  if (dof < 1) throw std::invalid_argument("chi_square_quantile: dof must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("chi_square_quantile: alpha must lie in (0,1)");
  const double target = 1.0 - alpha;

  // bracket the root, then bisect; CDF is monotone
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(dof));
  while (chi_square_cdf(hi, dof) < target) {
    hi *= 2.0;
    if (hi > 1e12) throw std::runtime_error("chi_square_quantile: bracket failed");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_cdf(mid, dof) < target) lo = mid;
    else hi = mid;
    if (hi - lo < 1e-12 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace geots
