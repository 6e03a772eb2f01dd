#include <algorithm>
#include <cmath>

#include "gcp/dynamics.hpp"
#include "gcp/special.hpp"

namespace gcp::dynamics {
namespace {

// Below this ratio of the integrand's feature width to the component's
// standard deviation, the fixed Hermite rule is replaced by a graded one.
constexpr double kGradedBelow = 2.0;

struct Sums {
  double f = 0.0;
  double g = 0.0;
  double h = 0.0;
};

// Visits (y, w) pairs of a rule for E[.] under N(mean, var), adapted to an
// integrand with a feature of half-width sqrt(2 sigma) around y = m.
template <class Visit>
void gaussian_nodes(double mean, double var, double m, double sigma,
                    const QuadratureSettings& quad, Visit&& visit) {
  const double sd = std::sqrt(var);
  const double centre = (m - mean) / sd;
  const double scale = std::sqrt(2.0 * sigma / var);
  if (scale < kGradedBelow && std::abs(centre) < 14.0) {
    const auto rule = special::QuadratureRule::graded_gaussian(centre, scale, quad.panel_nodes);
    const auto y = rule.nodes();
    const auto w = rule.weights();
    for (std::size_t i = 0; i < y.size(); ++i) visit(mean + sd * y[i], w[i]);
    return;
  }
  const auto& rule = special::hermite_rule(quad.hermite_nodes);
  const auto y = rule.nodes();
  const auto w = rule.weights();
  for (std::size_t i = 0; i < y.size(); ++i) visit(mean + sd * y[i], w[i]);
}

template <class Visit>
void legendre_panel(double a, double b, int n, double density, Visit& visit) {
  const auto rule = special::QuadratureRule::gauss_legendre(n, a, b);
  const auto y = rule.nodes();
  const auto w = rule.weights();
  for (std::size_t i = 0; i < y.size(); ++i) visit(y[i], w[i] * density);
}

// Uniform density on (lo, hi); panels graded around m when the feature is
// narrow compared to the support.
template <class Visit>
void uniform_nodes(double lo, double hi, double m, double sigma, const QuadratureSettings& quad,
                   Visit&& visit) {
  const double density = 1.0 / (hi - lo);
  const double s = std::sqrt(2.0 * sigma);
  if (!(m > lo && m < hi) || s > 0.25 * (hi - lo)) {
    legendre_panel(lo, hi, quad.legendre_nodes, density, visit);
    return;
  }
  std::vector<double> edges{lo, hi, m};
  for (double d = 0.5 * s; d < hi - lo; d *= 2.0) {
    if (m - d > lo) edges.push_back(m - d);
    if (m + d < hi) edges.push_back(m + d);
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    legendre_panel(edges[k], edges[k + 1], quad.panel_nodes, density, visit);
  }
}

Sums component_sums(double m, double alpha, double sigma, OutlierShape shape, double mean,
                    double var, const QuadratureSettings& quad) {
  Sums s;
  auto visit = [&](double y, double w) {
    const double z = y - m;
    const double z2 = z * z;
    const double d = 2.0 * sigma + z2;
    s.f += w * z / d;
    s.g += w * std::log1p(z2 / (2.0 * sigma));
    s.h += w * (alpha * z2 - sigma) / d;
  };
  if (shape == OutlierShape::Gaussian) {
    gaussian_nodes(mean, var, m, sigma, quad, visit);
  } else {
    const double half = std::sqrt(3.0 * var);
    uniform_nodes(mean - half, mean + half, m, sigma, quad, visit);
  }
  if (!std::isfinite(s.f) || !std::isfinite(s.g) || !std::isfinite(s.h)) {
    throw NumericError("fgh: non-finite quadrature sum");
  }
  return s;
}

}  // namespace

QuadratureSettings::QuadratureSettings() : hermite_nodes(special::hermite_order()) {}

QuadratureSettings QuadratureSettings::refined() const {
  QuadratureSettings q = *this;
  q.hermite_nodes = std::min(2 * hermite_nodes, special::kMaxHermiteNodes);
  q.legendre_nodes = 2 * legendre_nodes;
  q.panel_nodes = 2 * panel_nodes;
  return q;
}

Fgh fgh(double m, double alpha, double sigma, const ContaminationSpec& spec,
        const QuadratureSettings& quad) {
  if (!(alpha > 0.0) || !(sigma > 0.0) || !std::isfinite(alpha) || !std::isfinite(sigma)) {
    throw DomainError("fgh: alpha and sigma must be positive and finite");
  }
  if (!std::isfinite(m)) throw DomainError("fgh: m must be finite");
  const Sums g = component_sums(m, alpha, sigma, OutlierShape::Gaussian, spec.m_g, spec.v_g, quad);
  Sums total = g;
  if (spec.epsilon > 0.0) {
    const Sums o = component_sums(m, alpha, sigma, spec.outlier.shape, spec.outlier.mean,
                                  spec.outlier.variance, quad);
    const double e = spec.epsilon;
    total.f = (1.0 - e) * g.f + e * o.f;
    total.g = (1.0 - e) * g.g + e * o.g;
    total.h = (1.0 - e) * g.h + e * o.h;
  }
  return {total.f, total.g + special::delta_psi(alpha), total.h};
}

Fgh fgh_component(double m, double alpha, double sigma, OutlierShape shape, double mean,
                  double variance, const QuadratureSettings& quad) {
  const Sums s = component_sums(m, alpha, sigma, shape, mean, variance, quad);
  return {s.f, s.g, s.h};
}

double ground_f(double m, double sigma, double m_g, double v_g, const QuadratureSettings& quad) {
  // E[g(y - m)], y ~ N(m_g, V), g odd, equals
  //   -exp(-d^2 / 2V) E[g(sqrt(V) xi) sinh(xi d / sqrt(V))],  d = m - m_g,
  // which has no cancellation for small d.
  const double sd = std::sqrt(v_g);
  const double d = m - m_g;
  double sum = 0.0;
  gaussian_nodes(0.0, 1.0, 0.0, sigma / v_g, quad, [&](double xi, double w) {
    const double z = sd * xi;
    sum += w * z / (2.0 * sigma + z * z) * std::sinh(xi * d / sd);
  });
  return -std::exp(-0.5 * d * d / v_g) * sum;
}

bool DynState::valid() const {
  return std::isfinite(m) && alpha > 0.0 && beta > 0.0 && nu > 0.0 && std::isfinite(alpha) &&
         std::isfinite(beta) && std::isfinite(nu);
}

std::array<double, 4> rhs(const DynState& s, const ContaminationSpec& spec,
                          const QuadratureSettings& quad) {
  const Fgh v = fgh(s.m, s.alpha, s.sigma(), spec, quad);
  return {(2.0 * s.alpha + 1.0) * v.f, -v.g, v.h / s.beta, -v.h / (s.nu * (s.nu + 1.0))};
}

double sigma_rate(const DynState& s, double h) {
  const double n1 = s.nu + 1.0;
  const double sigma = s.sigma();
  return (n1 * n1 / (s.nu * s.nu * sigma) + sigma / (n1 * n1 * s.nu * s.nu)) * h;
}

}  // namespace gcp::dynamics
