#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "gcp/core.hpp"
#include "gcp/dynamics.hpp"
#include "gcp/special.hpp"

namespace gcp::dynamics {
namespace {

using Vec2 = Eigen::Vector2d;

struct Inverse {
  double alpha;
  double sigma;
  double epsilon;
  OutlierShape shape;
  double v_o;

  ContaminationSpec spec(const Vec2& p) const {
    ContaminationSpec s;
    s.epsilon = epsilon;
    s.m_g = 0.0;
    s.v_g = std::exp(p(0));
    s.outlier = OutlierSpec::standardized(shape, std::exp(p(1)), v_o);
    return s;
  }

  // (G, H) at m = m_g = 0 for p = (ln V_g, ln m_o)
  Vec2 residual(const Vec2& p) const {
    const Fgh v = fgh(0.0, alpha, sigma, spec(p));
    return {v.g, v.h};
  }
};

struct InverseResult {
  Vec2 p;
  Vec2 r;
  bool converged = false;
  std::string message;
};

InverseResult solve_inverse(const Inverse& inv, Vec2 p) {
  InverseResult out;
  Vec2 r = inv.residual(p);
  for (int it = 0; it < 100; ++it) {
    Eigen::Matrix2d jac;
    for (int i = 0; i < 2; ++i) {
      const double d = 1e-6 * std::max(1.0, std::abs(p(i)));
      Vec2 pp = p;
      Vec2 pm = p;
      pp(i) += d;
      pm(i) -= d;
      jac.col(i) = (inv.residual(pp) - inv.residual(pm)) / (2.0 * d);
    }
    Vec2 dp = jac.fullPivLu().solve(-r);
    if (!dp.allFinite()) {
      out.message = "singular Jacobian";
      break;
    }
    const double big = dp.lpNorm<Eigen::Infinity>();
    if (big > 1.0) dp /= big;
    double lambda = 1.0;
    Vec2 p_new = p + dp;
    Vec2 r_new = inv.residual(p_new);
    for (int bt = 0; bt < 30 && !(r_new.squaredNorm() < r.squaredNorm()); ++bt) {
      lambda *= 0.5;
      p_new = p + lambda * dp;
      r_new = inv.residual(p_new);
    }
    const double step = (p_new - p).lpNorm<Eigen::Infinity>();
    if (r_new.squaredNorm() <= r.squaredNorm()) {
      p = p_new;
      r = r_new;
    }
    if (step < 1e-14 || r.lpNorm<Eigen::Infinity>() < 1e-15) break;
  }
  out.p = p;
  out.r = r;
  out.converged = r.lpNorm<Eigen::Infinity>() < 1e-11;
  if (!out.converged && out.message.empty()) {
    std::ostringstream os;
    os << "inverse solve did not converge (residual " << r.lpNorm<Eigen::Infinity>() << ")";
    out.message = os.str();
  }
  return out;
}

// Root of F in m near m_g = 0 for the recovered setup.
double mean_root(const ContaminationSpec& spec, double alpha, double sigma) {
  const double e = spec.epsilon;
  auto outlier_f = [&](double m) {
    return fgh_component(m, alpha, sigma, spec.outlier.shape, spec.outlier.mean,
                         spec.outlier.variance)
        .f;
  };
  auto total = [&](double m) {
    return (1.0 - e) * ground_f(m, sigma, spec.m_g, spec.v_g) + e * outlier_f(m);
  };
  const double delta = 1e-8 * std::sqrt(spec.v_g);
  const double slope = (1.0 - e) * ground_f(spec.m_g + delta, sigma, spec.m_g, spec.v_g) / delta;
  double m = spec.m_g - e * outlier_f(spec.m_g) / slope;
  for (int it = 0; it < 3; ++it) m -= total(m) / slope;
  return m;
}

}  // namespace

std::vector<double> halving_sequence(double first, int count) {
  if (!(first > 0.0) || count < 1) throw DomainError("halving sequence: bad arguments");
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(std::ldexp(first, -k));
  return out;
}

VarianceCorrectionReport verify_variance_correction(double alpha, double sigma,
                                                    OutlierShape shape, double v_o,
                                                    const std::vector<double>& epsilons) {
  if (!(alpha > 0.0) || !(sigma > 0.0)) throw DomainError("alpha and sigma must be positive");
  if (!(v_o > 0.0)) throw DomainError("outlier variance must be positive");
  VarianceCorrectionReport rep;
  rep.alpha = alpha;
  rep.sigma = sigma;
  rep.v_p = sigma / special::solve_gap(alpha);
  const CorrectionConstants cc = correction_constants(alpha, sigma);
  rep.b = cc.b;
  rep.b0 = cc.b0;
  rep.b1 = cc.b1;
  {
    ContaminationSpec clean;
    clean.v_g = rep.v_p;
    rep.zero_eps_residual = std::abs(fgh(0.0, alpha, sigma, clean).h);
  }

  double prev_error = 0.0;
  double prev_eps = 0.0;
  for (double eps : epsilons) {
    VarianceCorrectionRow row;
    row.epsilon = eps;
    row.predicted = (1.0 - rep.b * eps) * rep.v_p;
    if (eps == 0.0) {
      row.converged = true;
      row.v_g = rep.v_p;
      row.error = std::abs(row.v_g - row.predicted);
      row.residuals = {0.0, rep.zero_eps_residual};
      rep.rows.push_back(row);
      continue;
    }
    const Inverse inv{alpha, sigma, eps, shape, v_o};
    const double vg0 = row.predicted > 0.0 ? row.predicted : rep.v_p;
    const double log_mo0 =
        0.5 * std::log(2.0 * sigma) + 0.5 * cc.b1 + cc.b0 / (2.0 * eps);
    const InverseResult res = solve_inverse(inv, {std::log(vg0), log_mo0});
    row.converged = res.converged;
    row.message = res.message;
    row.v_g = std::exp(res.p(0));
    row.m_o = std::exp(res.p(1));
    row.residuals = {std::abs(res.r(0)), std::abs(res.r(1))};
    row.error = std::abs(row.v_g - row.predicted);
    row.slope = (rep.v_p - row.v_g) / (eps * rep.v_p);
    if (prev_eps > 0.0 && std::abs(prev_eps - 2.0 * eps) <= 1e-12 * eps && prev_error > 0.0) {
      row.ratio = row.error / prev_error;
    }
    const ContaminationSpec s = inv.spec(res.p);
    row.m_p = mean_root(s, alpha, sigma);
    row.mean_gap = std::abs(row.m_p - s.m_g);
    row.mean_gap_eps2 = row.mean_gap / (eps * eps);
    row.mean_gap_eps3 = row.mean_gap / (eps * eps * eps);
    prev_error = row.error;
    prev_eps = eps;
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<FieldSample> vector_field(const ContaminationSpec& spec, double m, double nu,
                                      double alpha_lo, double alpha_hi, double sigma_lo,
                                      double sigma_hi, int n_alpha, int n_sigma) {
  if (!(alpha_lo > 0.0 && alpha_lo < alpha_hi && sigma_lo > 0.0 && sigma_lo < sigma_hi)) {
    throw DomainError("vector field: bad ranges");
  }
  if (n_alpha < 2 || n_sigma < 2) throw DomainError("vector field: need at least 2x2 points");
  if (!(nu > 0.0)) throw DomainError("vector field: nu must be positive");
  std::vector<FieldSample> out;
  for (int i = 0; i < n_alpha; ++i) {
    const double a =
        alpha_lo * std::pow(alpha_hi / alpha_lo, static_cast<double>(i) / (n_alpha - 1));
    for (int j = 0; j < n_sigma; ++j) {
      const double s =
          sigma_lo * std::pow(sigma_hi / sigma_lo, static_cast<double>(j) / (n_sigma - 1));
      const Fgh v = fgh(m, a, s, spec);
      DynState st;
      st.m = m;
      st.alpha = a;
      st.nu = nu;
      st.beta = s * nu / (nu + 1.0);
      out.push_back({a, s, -v.g, sigma_rate(st, v.h)});
    }
  }
  return out;
}

}  // namespace gcp::dynamics
