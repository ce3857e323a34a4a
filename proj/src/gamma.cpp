#include <cmath>
#include <limits>
#include <string>

#include "expdesign/errors.hpp"
#include "expdesign/imbalance.hpp"

namespace expdesign {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;

// sum_{k>=0} x^k / (s (s+1) ... (s+k)); converges for all x, fastest for x < s + 1.
double gamma_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int k = 1; k < kMaxIter; ++k) {
    term *= x / (s + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) return sum;
  }
  throw DomainError("incomplete gamma series failed to converge");
}

// Continued fraction for Gamma(s, x) e^x x^-s (modified Lentz); used for x >= s + 1.
double gamma_continued_fraction(double s, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw DomainError("incomplete gamma continued fraction failed to converge");
}

void check_domain(double s, double x) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw DomainError("incomplete gamma needs s > 0 (got " + std::to_string(s) + ")");
  }
  if (!(x >= 0.0) || std::isnan(x)) {
    throw DomainError("incomplete gamma needs x >= 0 (got " + std::to_string(x) + ")");
  }
}

}  // namespace

double lower_incomplete_gamma(double s, double x) {
  check_domain(s, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return std::tgamma(s);
  const double log_prefactor = s * std::log(x) - x;
  if (x < s + 1.0) return std::exp(log_prefactor) * gamma_series(s, x);
  const double upper = std::exp(log_prefactor) * gamma_continued_fraction(s, x);
  return std::exp(std::lgamma(s)) - upper;
}

double regularized_lower_gamma(double s, double x) {
  check_domain(s, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double log_prefactor = s * std::log(x) - x - std::lgamma(s);
  if (x < s + 1.0) return std::exp(log_prefactor) * gamma_series(s, x);
  return 1.0 - std::exp(log_prefactor) * gamma_continued_fraction(s, x);
}

// With s = p/2 and x = a/2, gamma(s+1, x) = s gamma(s, x) - x^s e^-x, so
// eta = x^s e^-x / (Gamma(s+1) P(s, x)). Evaluating it this way avoids the
// cancellation in 1 - ratio when a is large.
double eta(int p, double a) {
  if (p < 1) throw DomainError("eta needs p >= 1 (got " + std::to_string(p) + ")");
  if (!(a >= 0.0) || std::isnan(a)) {
    throw DomainError("eta needs a >= 0 (got " + std::to_string(a) + ")");
  }
  if (a == 0.0) return 1.0;
  if (std::isinf(a)) return 0.0;
  const double s = 0.5 * p;
  const double x = 0.5 * a;
  if (x < s + 1.0) return 1.0 / (s * gamma_series(s, x));
  const double log_num = s * std::log(x) - x - std::lgamma(s + 1.0);
  return std::exp(log_num) / regularized_lower_gamma(s, x);
}

}  // namespace expdesign
