#include <cmath>
#include <sstream>

#include "gcp/dynamics.hpp"

namespace gcp::dynamics {

OutlierSpec OutlierSpec::gaussian(double mean, double variance) {
  return standardized(OutlierShape::Gaussian, mean, variance);
}

OutlierSpec OutlierSpec::uniform(double lo, double hi) {
  if (!(lo < hi)) throw DomainError("uniform outliers require lo < hi");
  const double w = hi - lo;
  return standardized(OutlierShape::Uniform, 0.5 * (lo + hi), w * w / 12.0);
}

OutlierSpec OutlierSpec::standardized(OutlierShape shape, double mean, double variance) {
  if (!std::isfinite(mean)) throw DomainError("outlier mean must be finite");
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw DomainError("outlier variance must be positive and finite");
  }
  OutlierSpec s;
  s.shape = shape;
  s.mean = mean;
  s.variance = variance;
  return s;
}

double OutlierSpec::lo() const { return mean - std::sqrt(3.0 * variance); }
double OutlierSpec::hi() const { return mean + std::sqrt(3.0 * variance); }

double OutlierSpec::central_moment(int k) const {
  if (k < 0 || k > 6) throw DomainError("central moments are provided up to order 6");
  if (k == 0) return 1.0;
  if (k % 2 == 1) return 0.0;
  const double v = variance;
  if (shape == OutlierShape::Gaussian) {
    switch (k) {
      case 2: return v;
      case 4: return 3.0 * v * v;
      default: return 15.0 * v * v * v;
    }
  }
  // width w = sqrt(12 v); mu_k = w^k / (2^k (k + 1))
  const double w2 = 12.0 * v;
  switch (k) {
    case 2: return v;
    case 4: return w2 * w2 / 80.0;
    default: return w2 * w2 * w2 / 448.0;
  }
}

std::string OutlierSpec::describe() const {
  std::ostringstream os;
  os << (shape == OutlierShape::Gaussian ? "gaussian" : "uniform") << "(mean=" << mean
     << ", variance=" << variance << ")";
  return os.str();
}

void ContaminationSpec::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in [0, 1)");
  if (!std::isfinite(m_g)) throw DomainError("m_g must be finite");
  if (!(v_g > 0.0) || !std::isfinite(v_g)) throw DomainError("V_g must be positive and finite");
  if (!(outlier.variance > 0.0)) throw DomainError("outlier variance must be positive");
}

void to_json(nlohmann::json& j, const ContaminationSpec& s) {
  j = nlohmann::json{{"epsilon", s.epsilon},
                     {"m_g", s.m_g},
                     {"v_g", s.v_g},
                     {"outlier",
                      {{"shape", s.outlier.shape == OutlierShape::Gaussian ? "gaussian" : "uniform"},
                       {"mean", s.outlier.mean},
                       {"variance", s.outlier.variance}}}};
}

OutlierIndicators indicators(const ContaminationSpec& spec) {
  spec.validate();
  const double dm = spec.outlier.mean - spec.m_g;
  const double dv = spec.outlier.variance - spec.v_g;
  const double vo = spec.outlier.variance;
  const double mu3 = spec.outlier.central_moment(3);
  const double mu4 = spec.outlier.central_moment(4);
  const double dm2 = dm * dm;
  OutlierIndicators out;
  out.c_go = dm2 * dm2 + 6.0 * dv * dm2 + 3.0 * dv * dv + (mu4 - 3.0 * vo * vo) + 4.0 * mu3 * dm;
  out.d_go = dm2 * dm + 3.0 * dv * dm + mu3;
  return out;
}

AsymptoticBranch asymptotic_branch(const ContaminationSpec& spec) {
  const OutlierIndicators ind = indicators(spec);
  if (!(ind.c_go > 0.0)) throw PreconditionError("asymptotic branch requires c_go > 0");
  const double eps = spec.epsilon;
  const double vg = spec.v_g;
  AsymptoticBranch out;
  out.m_first = spec.m_g + (spec.outlier.mean - spec.m_g) * eps;
  out.m_second = out.m_first - ind.c_go * ind.d_go / (6.0 * vg * vg * vg) * eps * eps;
  out.alpha = 3.0 * vg * vg / (ind.c_go * eps);
  out.sigma = 3.0 * vg * vg * vg / (ind.c_go * eps);
  return out;
}

}  // namespace gcp::dynamics
