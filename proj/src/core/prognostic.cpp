#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gcp/core.hpp"
#include "gcp/special.hpp"

namespace gcp {

double StudentVariance::value() const {
  if (infinite_) throw std::logic_error("StudentVariance: value() on the infinite tag");
  return value_;
}

std::string StudentVariance::to_string() const {
  if (infinite_) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << value_;
  return os.str();
}

PrognosticEstimate prognostic(const GcpParams& params) {
  params.validate("prognostic");
  const double sigma = params.sigma();
  const double gap = special::alpha_table().gap(params.alpha);
  PrognosticEstimate out;
  out.mean = params.m;
  out.variance = sigma / gap;
  out.student_variance = params.alpha > 1.0 ? StudentVariance::finite(sigma / (params.alpha - 1.0))
                                            : StudentVariance::infinite();
  out.alpha = params.alpha;
  return out;
}

CorrectionConstants correction_constants(double alpha, double sigma) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("correction_constants: alpha must be positive and finite");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("correction_constants: sigma must be positive and finite");
  }
  const double vp = sigma / special::solve_gap(alpha);
  const double c = 2.0 * sigma / vp;
  const auto rule = special::QuadratureRule::graded_gaussian(0.0, std::sqrt(c));

  const double e_log = special::gauss_weighted_integral(
      [c](double y) { return std::log1p(y * y / c); }, rule);
  const double e_frac = special::gauss_weighted_integral(
      [c](double y) { return y * y / (c + y * y); }, rule);
  const double e_sq = special::gauss_weighted_integral(
      [c](double y) {
        const double d = c + y * y;
        return y * y * c / (d * d);
      },
      rule);

  CorrectionConstants out;
  out.b = 2.0 * alpha / ((2.0 * alpha + 1.0) * e_sq);
  out.b0 = -e_log - special::delta_psi(alpha);
  out.b1 = e_log + out.b * e_frac;
  return out;
}

double corrected_variance(const PrognosticEstimate& estimate, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw DomainError("corrected_variance: epsilon must lie in [0, 1)");
  }
  if (epsilon == 0.0) return estimate.variance;
  const double b = correction_constants(estimate.alpha).b;
  const double factor = 1.0 - b * epsilon;
  if (!(factor > 0.0)) {
    std::ostringstream os;
    os << "corrected_variance: epsilon = " << epsilon << " exceeds 1/b = " << 1.0 / b
       << " at alpha = " << estimate.alpha;
    throw DomainError(os.str());
  }
  return factor * estimate.variance;
}

}  // namespace gcp
