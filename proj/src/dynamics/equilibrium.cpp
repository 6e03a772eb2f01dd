#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "gcp/dynamics.hpp"
#include "gcp/special.hpp"

namespace gcp::dynamics {
namespace {

using Vec3 = Eigen::Vector3d;

Vec3 residual(const Vec3& x, const ContaminationSpec& spec, const QuadratureSettings& quad) {
  const Fgh v = fgh(x(0), std::exp(x(1)), std::exp(x(2)), spec, quad);
  return {v.f, v.g, v.h};
}

bool jacobian(const Vec3& x, const ContaminationSpec& spec, const QuadratureSettings& quad,
              Eigen::Matrix3d& jac) {
  for (int i = 0; i < 3; ++i) {
    const double d = i == 0 ? 1e-6 * std::max(1.0, std::abs(x(0))) : 1e-6;
    Vec3 xp = x;
    Vec3 xm = x;
    xp(i) += d;
    xm(i) -= d;
    jac.col(i) = (residual(xp, spec, quad) - residual(xm, spec, quad)) / (2.0 * d);
  }
  return jac.allFinite();
}

void finish(Equilibrium& eq, const Vec3& x, const ContaminationSpec& spec,
            const QuadratureSettings& quad) {
  eq.m = x(0);
  eq.alpha = std::exp(x(1));
  eq.sigma = std::exp(x(2));
  if (!(eq.alpha > 0.0 && eq.sigma > 0.0 && std::isfinite(eq.alpha) && std::isfinite(eq.sigma))) {
    eq.residuals = {NAN, NAN, NAN};
    return;
  }
  const Vec3 r = residual(x, spec, quad.refined());
  eq.residuals = {std::abs(r(0)), std::abs(r(1)), std::abs(r(2))};
}

}  // namespace

double Equilibrium::max_residual() const {
  return std::max({residuals[0], residuals[1], residuals[2]});
}

Equilibrium newton_equilibrium(const ContaminationSpec& spec, const EquilibriumPoint& start,
                               const NewtonOptions& opt) {
  spec.validate();
  if (!(start.alpha > 0.0) || !(start.sigma > 0.0)) {
    throw DomainError("newton_equilibrium: start needs positive alpha and sigma");
  }
  const QuadratureSettings quad;
  const double log_cap = std::log(opt.divergence_cap);
  Vec3 x(start.m, std::log(start.alpha), std::log(start.sigma));
  Equilibrium eq;
  Vec3 r = residual(x, spec, quad);
  double merit = r.squaredNorm();
  double last_step = INFINITY;

  for (int it = 1; it <= opt.max_iterations; ++it) {
    eq.iterations = it;
    Eigen::Matrix3d jac;
    if (!jacobian(x, spec, quad, jac)) {
      eq.message = "non-finite Jacobian";
      break;
    }
    Vec3 dx = jac.colPivHouseholderQr().solve(-r);
    if (!dx.allFinite()) {
      eq.message = "singular Jacobian";
      break;
    }
    const double big = dx.lpNorm<Eigen::Infinity>();
    if (big > opt.max_step) dx *= opt.max_step / big;

    double lambda = 1.0;
    bool accepted = false;
    Vec3 x_new = x;
    Vec3 r_new = r;
    for (int bt = 0; bt <= opt.max_backtracks; ++bt, lambda *= 0.5) {
      x_new = x + lambda * dx;
      try {
        r_new = residual(x_new, spec, quad);
      } catch (const DomainError&) {
        continue;
      }
      if (r_new.allFinite() && r_new.squaredNorm() < merit) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // At the quadrature noise floor no descent is possible; a tiny full
      // step then still counts as convergence.
      last_step = dx.lpNorm<Eigen::Infinity>();
      if (last_step < opt.step_tol) x_new = x + dx;
      else eq.message = "line search failed";
      x = x_new;
      break;
    }
    last_step = (lambda * dx).lpNorm<Eigen::Infinity>();
    x = x_new;
    r = r_new;
    merit = r.squaredNorm();
    if (x(1) > log_cap || x(2) > log_cap) {
      eq.message = "diverged: alpha or sigma exceeded the cap";
      break;
    }
    if (last_step < opt.step_tol && lambda == 1.0) break;
  }

  finish(eq, x, spec, quad);
  const bool small_residual = eq.max_residual() < opt.residual_tol;
  const bool small_step = last_step < opt.step_tol;
  eq.converged = small_residual && small_step && eq.message.empty();
  if (eq.message.empty() && !eq.converged) {
    std::ostringstream os;
    os << "not certified (max residual " << eq.max_residual() << ", last step " << last_step
       << ")";
    eq.message = os.str();
  }
  if (eq.converged) eq.message = "certified";
  return eq;
}

Equilibrium equilibrium(const ContaminationSpec& spec, std::optional<EquilibriumPoint> guess,
                        const NewtonOptions& options) {
  spec.validate();
  if (!(spec.epsilon > 0.0)) {
    throw PreconditionError("no finite equilibrium exists without contamination (epsilon = 0)");
  }
  const OutlierIndicators ind = indicators(spec);
  if (!(ind.c_go > 0.0)) {
    throw PreconditionError("outlier indicator c_go must be positive for a finite equilibrium");
  }
  if (guess) return newton_equilibrium(spec, *guess, options);

  // Short stiff run from a neutral start, then Newton.
  DynState s0;
  s0.m = spec.m_g;
  s0.alpha = 1.0;
  s0.nu = 1.0;
  s0.beta = 0.5 * spec.v_g * special::alpha_table().gap(1.0);
  StepControl c;
  c.method = Integrator::Rosenbrock;
  c.rtol = 1e-6;
  c.atol = 1e-9;
  c.max_steps = 5000;
  c.stride = 1000000;
  const Trajectory tr = integrate(s0, spec, 1e6, c);
  const DynState& s = tr.final_state();
  Equilibrium best = newton_equilibrium(spec, {s.m, s.alpha, s.sigma()}, options);
  if (best.converged) return best;

  const AsymptoticBranch a = asymptotic_branch(spec);
  Equilibrium alt = newton_equilibrium(spec, {a.m_first, a.alpha, a.sigma}, options);
  if (alt.converged) return alt;
  return best;
}

std::vector<SweepRow> sweep(const ContaminationSpec& base, const std::vector<double>& epsilons,
                            const NewtonOptions& options) {
  std::vector<SweepRow> rows;
  std::optional<Equilibrium> prev;
  double prev_eps = 0.0;
  for (double eps : epsilons) {
    ContaminationSpec spec = base;
    spec.epsilon = eps;
    SweepRow row;
    row.epsilon = eps;
    row.ind = indicators(spec);
    row.asym = asymptotic_branch(spec);
    if (prev && prev->converged) {
      const double k = prev_eps / eps;
      const EquilibriumPoint g{spec.m_g + (prev->m - spec.m_g) / k, prev->alpha * k,
                               prev->sigma * k};
      row.eq = newton_equilibrium(spec, g, options);
      if (!row.eq.converged) row.eq = equilibrium(spec, std::nullopt, options);
    } else {
      row.eq = equilibrium(spec, std::nullopt, options);
    }
    const double dm = spec.outlier.mean - spec.m_g;
    const double vg3 = spec.v_g * spec.v_g * spec.v_g;
    row.eps_alpha = eps * row.eq.alpha;
    row.eps_alpha_limit = 3.0 * spec.v_g * spec.v_g / row.ind.c_go;
    row.eps_alpha_ratio = row.eps_alpha / row.eps_alpha_limit;
    row.mean_first = (row.eq.m - spec.m_g) / eps;
    row.mean_first_limit = dm;
    row.mean_second = (row.eq.m - spec.m_g - dm * eps) / (eps * eps);
    row.mean_second_limit = -row.ind.c_go * row.ind.d_go / (6.0 * vg3);
    rows.push_back(row);
    prev = row.eq;
    prev_eps = eps;
  }
  return rows;
}

}  // namespace gcp::dynamics
