#include <algorithm>
#include <cmath>
#include <sstream>

#include "gcp/special.hpp"

namespace gcp::special {

double a_equation_residual_gap(double alpha, double gap) {
  if (!(alpha > 0.0)) throw DomainError("A equation: alpha must be positive");
  if (!(gap > 0.0)) throw DomainError("A equation: alpha - A must be positive");
  const double c = 2.0 * gap;
  const QuadratureRule rule = QuadratureRule::graded_gaussian(0.0, std::sqrt(c));
  const double mean =
      gauss_weighted_integral([c](double y) { return y * y / (c + y * y); }, rule);
  return (2.0 * alpha + 1.0) * mean - 1.0;
}

double solve_gap(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("solve_A: alpha must be positive and finite");
  }
  // The residual decreases in the gap; A in (0, min(1, alpha)) means
  // gap in (max(alpha - 1, 0), alpha).
  double lo = alpha > 1.0 ? alpha - 1.0 : alpha * 1e-30;
  double hi = alpha;
  const double f_lo = a_equation_residual_gap(alpha, lo);
  const double f_hi = a_equation_residual_gap(alpha, hi);
  if (!(f_lo > 0.0) || !(f_hi < 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "solve_A: bracket failure at alpha = " << alpha << " (residual " << f_lo
       << " at gap " << lo << ", " << f_hi << " at gap " << hi << ")";
    throw SolverError(os.str());
  }
  // Geometric bisection while the bracket spans more than a factor of two,
  // arithmetic bisection afterwards, down to adjacent doubles.
  for (int it = 0; it < 400; ++it) {
    const double mid = hi > 2.0 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (a_equation_residual_gap(alpha, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double solve_A(double alpha) { return alpha - solve_gap(alpha); }

AlphaTable::AlphaTable()
    : alphas_(kPoints), a_values_(kPoints), log_alpha_(kPoints),
      log_gap_(kPoints), slope_(kPoints) {
  const double l0 = std::log(kMinAlpha);
  const double l1 = std::log(kMaxAlpha);
  for (int i = 0; i < kPoints; ++i) {
    const double la = l0 + (l1 - l0) * i / (kPoints - 1);
    const double alpha = i == kPoints - 1 ? kMaxAlpha : (i == 0 ? kMinAlpha : std::exp(la));
    const double gap = solve_gap(alpha);
    alphas_[i] = alpha;
    a_values_[i] = alpha - gap;
    log_alpha_[i] = std::log(alpha);
    log_gap_[i] = std::log(gap);
  }
  for (int i = 1; i < kPoints; ++i) {
    if (!(a_values_[i] > a_values_[i - 1])) {
      throw SolverError("AlphaTable: A(alpha) not strictly increasing on the grid");
    }
  }
  // Fritsch-Carlson monotone slopes for log(gap) over log(alpha).
  std::vector<double> secant(kPoints - 1);
  for (int i = 0; i + 1 < kPoints; ++i) {
    secant[i] = (log_gap_[i + 1] - log_gap_[i]) / (log_alpha_[i + 1] - log_alpha_[i]);
  }
  slope_[0] = secant[0];
  slope_[kPoints - 1] = secant[kPoints - 2];
  for (int i = 1; i + 1 < kPoints; ++i) {
    if (secant[i - 1] * secant[i] <= 0.0) {
      slope_[i] = 0.0;
    } else {
      const double h0 = log_alpha_[i] - log_alpha_[i - 1];
      const double h1 = log_alpha_[i + 1] - log_alpha_[i];
      const double w0 = 2.0 * h1 + h0;
      const double w1 = h1 + 2.0 * h0;
      slope_[i] = (w0 + w1) / (w0 / secant[i - 1] + w1 / secant[i]);
    }
  }
}

double AlphaTable::gap(double alpha) const {
  if (!(alpha >= kMinAlpha && alpha <= kMaxAlpha)) return solve_gap(alpha);
  const double la = std::log(alpha);
  auto it = std::upper_bound(log_alpha_.begin(), log_alpha_.end(), la);
  std::size_t i = static_cast<std::size_t>(std::distance(log_alpha_.begin(), it));
  i = std::clamp<std::size_t>(i, 1, log_alpha_.size() - 1) - 1;
  const double h = log_alpha_[i + 1] - log_alpha_[i];
  const double t = (la - log_alpha_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double v = (2 * t3 - 3 * t2 + 1) * log_gap_[i] + (t3 - 2 * t2 + t) * h * slope_[i] +
                   (-2 * t3 + 3 * t2) * log_gap_[i + 1] + (t3 - t2) * h * slope_[i + 1];
  return std::exp(v);
}

const AlphaTable& alpha_table() {
  static const AlphaTable table;
  return table;
}

}  // namespace gcp::special
