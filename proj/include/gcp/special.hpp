#pragma once

// Special functions and quadrature shared by the numeric modules.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gcp/errors.hpp"

namespace gcp::special {

enum class QuadratureKind {
  // Nodes/weights for E[f(Y)], Y ~ N(0, 1).
  GaussHermiteStandardized,
  // Nodes/weights for the plain integral over [lo, hi].
  GaussLegendreInterval,
  // Composite Gauss-Legendre panels carrying the N(0, 1) density, graded
  // geometrically around a centre. Resolves integrands such as
  // 1 / (c + y^2) with c << 1 that a fixed Hermite rule cannot.
  GradedGaussian,
};

class QuadratureRule {
 public:
  static QuadratureRule gauss_hermite(int n);
  static QuadratureRule gauss_legendre(int n, double lo, double hi);
  // `scale` is the width of the sharpest feature of the integrand at `centre`
  // (in standard-normal units).
  static QuadratureRule graded_gaussian(double centre, double scale,
                                        int nodes_per_panel = 20);

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  QuadratureKind kind() const { return kind_; }
  std::size_t size() const { return nodes_.size(); }

  // Same construction with the per-rule node count doubled; used to certify
  // results against a finer rule.
  QuadratureRule refined() const;

 private:
  QuadratureRule(QuadratureKind kind, std::vector<double> nodes,
                 std::vector<double> weights, double p0, double p1, int n)
      : kind_(kind), nodes_(std::move(nodes)), weights_(std::move(weights)),
        p0_(p0), p1_(p1), n_(n) {}

  QuadratureKind kind_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  // construction parameters, kept for refined()
  double p0_;
  double p1_;
  int n_;
};

inline constexpr int kDefaultHermiteNodes = 128;
inline constexpr int kMaxHermiteNodes = 512;

// Hermite order from GCP_QUAD_NODES if set and valid, else 128.
int hermite_order();

// Process-wide cached standardized Hermite rule of the given order.
const QuadratureRule& hermite_rule(int n);
inline const QuadratureRule& default_hermite_rule() {
  return hermite_rule(hermite_order());
}

// Sum of w_i f(y_i). For the Gaussian kinds this approximates E[f(Y)],
// Y ~ N(0, 1); for the Legendre kind the plain integral over the interval.
template <class F>
double gauss_weighted_integral(F&& f, const QuadratureRule& rule) {
  const auto y = rule.nodes();
  const auto w = rule.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = f(y[i]);
    if (std::isnan(v)) {
      throw NumericError("quadrature: integrand is NaN at node y = " +
                         std::to_string(y[i]));
    }
    sum += w[i] * v;
  }
  return sum;
}

double log_gamma(double x);
double digamma(double x);
// Psi(alpha) - Psi(alpha + 1/2), computed without cancellation.
double delta_psi(double alpha);
// e^{x^2} erfc(x) for x >= 0.
double erfcx(double x);

// Left-hand side of
//   (2 alpha + 1) E[ Y^2 / (2 (alpha - A) + Y^2) ] - 1
// expressed through gap = alpha - A so that small alpha keeps precision.
double a_equation_residual_gap(double alpha, double gap);
inline double a_equation_residual(double alpha, double a) {
  return a_equation_residual_gap(alpha, alpha - a);
}

// alpha - A(alpha) by bracketed bisection. Throws SolverError if the bracket
// fails (it should not; the root is unique).
double solve_gap(double alpha);
// A(alpha), the unique root of the equation above in (0, min(1, alpha)).
double solve_A(double alpha);
// The closed-form approximation 2 alpha / (2 alpha + 3).
inline double approx_A(double alpha) { return 2.0 * alpha / (2.0 * alpha + 3.0); }

// A(alpha) tabulated on a log grid; monotone cubic interpolation of
// log(alpha - A) in log(alpha). Outside the grid direct bisection is used.
class AlphaTable {
 public:
  static constexpr double kMinAlpha = 1e-3;
  static constexpr double kMaxAlpha = 1e3;
  static constexpr int kPoints = 512;

  AlphaTable();

  std::span<const double> alphas() const { return alphas_; }
  std::span<const double> a_values() const { return a_values_; }

  double gap(double alpha) const;
  double A(double alpha) const { return alpha - gap(alpha); }

 private:
  std::vector<double> alphas_;
  std::vector<double> a_values_;
  std::vector<double> log_alpha_;
  std::vector<double> log_gap_;
  std::vector<double> slope_;
};

// Shared, lazily built table.
const AlphaTable& alpha_table();

}  // namespace gcp::special
