#pragma once

// Shared scalar helpers: exact small binomial coefficients, log-factorials,
// the regularized incomplete gamma functions, Poisson tails, and the
// chi-squared quantile.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace photostat {

inline double log_factorial(int n) {
#if defined(__GLIBC__)
  int sign = 0;  // lgamma_r avoids the signgam global under concurrent use
  return ::lgamma_r(static_cast<double>(n) + 1.0, &sign);
#else
  return std::lgamma(static_cast<double>(n) + 1.0);
#endif
}

/// Pascal-triangle binomial coefficients in extended precision. Sums of
/// integers below 2^64 are exact, which covers every row up to n = 67;
/// larger rows are correctly rounded sums of exact predecessors.
class BinomialTable {
 public:
  explicit BinomialTable(int max_n) : rows_(static_cast<std::size_t>(max_n) + 1) {
    for (int n = 0; n <= max_n; ++n) {
      auto& row = rows_[static_cast<std::size_t>(n)];
      row.assign(static_cast<std::size_t>(n) + 1, 1.0L);
      for (int k = 1; k < n; ++k)
        row[static_cast<std::size_t>(k)] =
            rows_[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k - 1)] +
            rows_[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k)];
    }
  }

  // C(n,k) with the convention C(n,k) = 0 whenever k > n or k < 0.
  long double operator()(int n, int k) const {
    if (n < 0 || k < 0 || k > n) return 0.0L;
    return rows_[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
  }

 private:
  std::vector<std::vector<long double>> rows_;
};

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a,x), valid for x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a,x).
inline double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0))
    throw std::invalid_argument("regularized_gamma_p requires a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_continued_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a,x) = 1 - P(a,x).
inline double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0))
    throw std::invalid_argument("regularized_gamma_q requires a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_continued_fraction(a, x);
}

/// P(X > n) for X ~ Poisson(mu).
inline double poisson_upper_tail(int n, double mu) {
  if (n < 0) return 1.0;
  if (mu <= 0.0) return 0.0;
  return regularized_gamma_p(static_cast<double>(n) + 1.0, mu);
}

/// Quantile of the chi-squared distribution with `dof` degrees of freedom,
/// solved by bisection on the regularized gamma CDF.
inline double chi_squared_quantile(double p, int dof) {
  if (dof < 0) throw std::invalid_argument("chi_squared_quantile requires dof >= 0");
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("chi_squared_quantile requires p in (0,1)");
  if (dof == 0) return 0.0;  // point mass at zero
  const double half_dof = 0.5 * static_cast<double>(dof);
  double hi = static_cast<double>(dof) + 10.0;
  while (regularized_gamma_p(half_dof, 0.5 * hi) < p) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (regularized_gamma_p(half_dof, 0.5 * mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace photostat
