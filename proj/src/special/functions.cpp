#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "gcp/special.hpp"

namespace gcp::special {
namespace {

constexpr double kAsymptoticFrom = 10.0;

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

// Sum_{k>=1} B_{2k} / (2k x^{2k}) with x^{-2} = u, truncated for x >= 10.
double bernoulli_tail(double u) {
  return u * (1.0 / 12.0 -
              u * (1.0 / 120.0 -
                   u * (1.0 / 252.0 -
                        u * (1.0 / 240.0 -
                             u * (1.0 / 132.0 -
                                  u * (691.0 / 32760.0 - u * (1.0 / 12.0)))))));
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  return boost::math::lgamma(x);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < kAsymptoticFrom) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  return shift + std::log(x) - 0.5 / x - bernoulli_tail(1.0 / (x * x));
}

double delta_psi(double alpha) {
  require_positive(alpha, "delta_psi");
  double shift = 0.0;
  double a = alpha;
  while (a < kAsymptoticFrom) {
    shift -= 0.5 / (a * (a + 0.5));
    a += 1.0;
  }
  const double b = a + 0.5;
  return shift - std::log1p(0.5 / a) - 0.5 / a + 0.5 / b -
         (bernoulli_tail(1.0 / (a * a)) - bernoulli_tail(1.0 / (b * b)));
}

double erfcx(double x) {
  if (!(x >= 0.0)) throw DomainError("erfcx: argument must be non-negative");
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  const double u = 1.0 / (2.0 * x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 10; ++k) {
    term *= -(2.0 * k - 1.0) * u;
    sum += term;
  }
  return sum / (x * std::sqrt(std::numbers::pi));
}

}  // namespace gcp::special
