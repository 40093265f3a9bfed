#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace teamlq {

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a),
/// series + continued fraction split at x = a + 1 (double precision,
/// absolute error well below 1e-13 for the a <= ~50 range used here).
inline double reg_gamma_upper(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("reg_gamma_upper: domain");
  if (x == 0.0) return 1.0;
  const double lga = std::lgamma(a);
  if (x < a + 1.0) {
    // P(a,x) by series, return 1 - P.
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - lga);
    return 1.0 - p;
  }
  // Q(a,x) by Lentz continued fraction.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
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
  return std::exp(-x + a * std::log(x) - lga) * h;
}

/// P(|N(0,I_d)| > s), the chi tail.
inline double chi_tail(int d, double s) {
  if (d <= 0) throw std::invalid_argument("chi_tail: d must be positive");
  if (s <= 0.0) return 1.0;
  return reg_gamma_upper(0.5 * d, 0.5 * s * s);
}

/// Standard normal cdf.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// log of the standard normal density in dimension l at squared norm r2.
inline double log_phi(int l, double r2) {
  return -0.5 * r2 - 0.5 * l * std::log(2.0 * M_PI);
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace teamlq
