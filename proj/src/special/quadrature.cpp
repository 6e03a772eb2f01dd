#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "gcp/special.hpp"

namespace gcp::special {
namespace {

constexpr double kTail = 12.0;  // Phi(-12) ~ 2e-33

// Orthonormal (w.r.t. N(0,1)) Hermite recurrence evaluated at y; returns
// (p_n, p_{n-1}) rescaled jointly when they grow large, plus a flag telling
// whether rescaling happened (the node weight then underflows).
struct HermiteEval {
  double pn;
  double pn1;
  bool rescaled;
};

HermiteEval orthonormal_hermite(int n, double y) {
  double p_prev = 0.0;
  double p = 1.0;
  bool rescaled = false;
  for (int k = 0; k < n; ++k) {
    const double next = (y * p - std::sqrt(static_cast<double>(k)) * p_prev) /
                        std::sqrt(static_cast<double>(k + 1));
    p_prev = p;
    p = next;
    if (std::abs(p) > 1e150) {
      p *= 1e-150;
      p_prev *= 1e-150;
      rescaled = true;
    }
  }
  return {p, p_prev, rescaled};
}

}  // namespace

QuadratureRule QuadratureRule::gauss_hermite(int n) {
  if (n < 1 || n > kMaxHermiteNodes) {
    throw DomainError("gauss_hermite: node count must be in [1, " +
                      std::to_string(kMaxHermiteNodes) + "]");
  }
  // Golub-Welsch for starting values, then Newton polishing on the
  // three-term recurrence.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  std::vector<double> nodes(eig.eigenvalues().data(), eig.eigenvalues().data() + n);
  std::sort(nodes.begin(), nodes.end());

  std::vector<double> weights(n);
  const double sn = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    double y = nodes[i];
    HermiteEval e{};
    for (int it = 0; it < 8; ++it) {
      e = orthonormal_hermite(n, y);
      const double dy = e.pn / (sn * e.pn1);
      y -= dy;
      if (std::abs(dy) < 1e-15 * std::max(1.0, std::abs(y))) break;
    }
    e = orthonormal_hermite(n, y);
    nodes[i] = y;
    weights[i] = e.rescaled ? 0.0 : 1.0 / (n * e.pn1 * e.pn1);
  }
  // Exact symmetry of the rule keeps odd integrands at zero.
  for (int i = 0; i < n / 2; ++i) {
    const double y = 0.5 * (nodes[n - 1 - i] - nodes[i]);
    const double w = 0.5 * (weights[i] + weights[n - 1 - i]);
    nodes[i] = -y;
    nodes[n - 1 - i] = y;
    weights[i] = weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
  return QuadratureRule(QuadratureKind::GaussHermiteStandardized, std::move(nodes),
                        std::move(weights), 0.0, 0.0, n);
}

QuadratureRule QuadratureRule::gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw DomainError("gauss_legendre: node count must be positive");
  if (!(lo < hi)) throw DomainError("gauss_legendre: requires lo < hi");
  std::vector<double> nodes(n);
  std::vector<double> weights(n);
  const double mid = 0.5 * (hi + lo);
  const double half = 0.5 * (hi - lo);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-16) break;
    }
    nodes[i] = mid - half * z;
    nodes[n - 1 - i] = mid + half * z;
    weights[i] = weights[n - 1 - i] = 2.0 * half / ((1.0 - z * z) * pp * pp);
  }
  return QuadratureRule(QuadratureKind::GaussLegendreInterval, std::move(nodes),
                        std::move(weights), lo, hi, n);
}

QuadratureRule QuadratureRule::graded_gaussian(double centre, double scale,
                                               int nodes_per_panel) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("graded_gaussian: scale must be positive and finite");
  }
  centre = std::clamp(centre, -kTail, kTail);
  const QuadratureRule base = gauss_legendre(nodes_per_panel, -1.0, 1.0);

  // Panel edges on each side of the centre: widths scale/2, scale/2, scale,
  // 2 scale, ... capped at 1, until the Gaussian tail is reached.
  std::vector<double> edges{centre};
  const double first = std::min(0.5 * scale, 1.0);
  double width = first;
  double x = centre;
  bool doubled_once = false;
  while (x < kTail) {
    x += width;
    edges.push_back(x);
    if (doubled_once) width = std::min(2.0 * width, 1.0);
    doubled_once = true;
  }
  std::vector<double> left{centre};
  width = first;
  x = centre;
  doubled_once = false;
  while (x > -kTail) {
    x -= width;
    left.push_back(x);
    if (doubled_once) width = std::min(2.0 * width, 1.0);
    doubled_once = true;
  }
  std::reverse(left.begin(), left.end());
  left.pop_back();
  left.insert(left.end(), edges.begin(), edges.end());

  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> nodes;
  std::vector<double> weights;
  nodes.reserve((left.size() - 1) * nodes_per_panel);
  weights.reserve(nodes.capacity());
  for (std::size_t p = 0; p + 1 < left.size(); ++p) {
    const double a = left[p];
    const double b = left[p + 1];
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < nodes_per_panel; ++i) {
      const double y = mid + half * base.nodes_[i];
      nodes.push_back(y);
      weights.push_back(half * base.weights_[i] * inv_sqrt_2pi * std::exp(-0.5 * y * y));
    }
  }
  return QuadratureRule(QuadratureKind::GradedGaussian, std::move(nodes),
                        std::move(weights), centre, scale, nodes_per_panel);
}

QuadratureRule QuadratureRule::refined() const {
  switch (kind_) {
    case QuadratureKind::GaussHermiteStandardized:
      return gauss_hermite(std::min(2 * n_, kMaxHermiteNodes));
    case QuadratureKind::GaussLegendreInterval:
      return gauss_legendre(2 * n_, p0_, p1_);
    case QuadratureKind::GradedGaussian:
      return graded_gaussian(p0_, p1_, 2 * n_);
  }
  return *this;
}

int hermite_order() {
  static const int order = [] {
    const char* env = std::getenv("GCP_QUAD_NODES");
    if (env == nullptr) return kDefaultHermiteNodes;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 8 || v > kMaxHermiteNodes) {
      return kDefaultHermiteNodes;
    }
    return static_cast<int>(v);
  }();
  return order;
}

const QuadratureRule& hermite_rule(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule>(QuadratureRule::gauss_hermite(n));
  return *slot;
}

}  // namespace gcp::special
