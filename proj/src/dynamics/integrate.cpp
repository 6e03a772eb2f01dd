#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "gcp/dynamics.hpp"

namespace gcp::dynamics {
namespace {

using Vec = Eigen::Vector4d;

DynState from_vec(const Vec& v) { return {v(0), v(1), v(2), v(3)}; }
Vec to_vec(const DynState& s) { return {s.m, s.alpha, s.beta, s.nu}; }

// nullopt when the point leaves the admissible region
std::optional<Vec> eval(const Vec& y, const ContaminationSpec& spec) {
  const DynState s = from_vec(y);
  if (!s.valid()) return std::nullopt;
  try {
    const auto r = rhs(s, spec);
    Vec out(r[0], r[1], r[2], r[3]);
    if (!out.allFinite()) return std::nullopt;
    return out;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, const StepControl& c) {
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double scale = c.atol + c.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    worst = std::max(worst, std::abs(err(i)) / scale);
  }
  return worst;
}

struct Trial {
  Vec y;
  double err;
};

std::optional<Vec> rk4(const Vec& y, double h, const ContaminationSpec& spec) {
  const auto k1 = eval(y, spec);
  if (!k1) return std::nullopt;
  const auto k2 = eval(y + 0.5 * h * *k1, spec);
  if (!k2) return std::nullopt;
  const auto k3 = eval(y + 0.5 * h * *k2, spec);
  if (!k3) return std::nullopt;
  const auto k4 = eval(y + h * *k3, spec);
  if (!k4) return std::nullopt;
  return y + h / 6.0 * (*k1 + 2.0 * *k2 + 2.0 * *k3 + *k4);
}

// One full step against two half steps; Richardson error estimate.
std::optional<Trial> rk4_doubling(const Vec& y, double h, const ContaminationSpec& spec,
                                  const StepControl& c) {
  const auto full = rk4(y, h, spec);
  if (!full) return std::nullopt;
  const auto half = rk4(y, 0.5 * h, spec);
  if (!half) return std::nullopt;
  const auto two = rk4(*half, 0.5 * h, spec);
  if (!two || !from_vec(*two).valid()) return std::nullopt;
  const Vec err = (*two - *full) / 15.0;
  return Trial{*two + err, error_norm(err, y, *two, c)};
}

std::optional<Eigen::Matrix4d> jacobian(const Vec& y, const ContaminationSpec& spec) {
  Eigen::Matrix4d j;
  for (int i = 0; i < 4; ++i) {
    const double d = 1e-6 * (i == 0 ? std::max(1.0, std::abs(y(i))) : y(i));
    Vec yp = y;
    Vec ym = y;
    yp(i) += d;
    ym(i) -= d;
    const auto fp = eval(yp, spec);
    const auto fm = eval(ym, spec);
    if (!fp || !fm) return std::nullopt;
    j.col(i) = (*fp - *fm) / (2.0 * d);
  }
  return j;
}

std::optional<Trial> rosenbrock(const Vec& y, double h, const ContaminationSpec& spec,
                                const StepControl& c, const Eigen::Matrix4d& jac,
                                const Vec& f0) {
  const double d = 1.0 / (2.0 + std::sqrt(2.0));
  const double e32 = 6.0 + std::sqrt(2.0);
  const Eigen::Matrix4d w = Eigen::Matrix4d::Identity() - h * d * jac;
  const Eigen::PartialPivLU<Eigen::Matrix4d> lu(w);
  const Vec k1 = lu.solve(f0);
  const auto f1 = eval(y + 0.5 * h * k1, spec);
  if (!f1) return std::nullopt;
  const Vec k2 = lu.solve(*f1 - k1) + k1;
  const Vec y1 = y + h * k2;
  const auto f2 = eval(y1, spec);
  if (!f2) return std::nullopt;
  const Vec k3 = lu.solve(*f2 - e32 * (k2 - *f1) - 2.0 * (k1 - f0));
  const Vec err = h / 6.0 * (k1 - 2.0 * k2 + k3);
  if (!y1.allFinite() || !err.allFinite()) return std::nullopt;
  return Trial{y1, error_norm(err, y, y1, c)};
}

}  // namespace

Trajectory integrate(const DynState& state0, const ContaminationSpec& spec, double t_end,
                     const StepControl& c) {
  spec.validate();
  if (!state0.valid()) throw DomainError("integrate: initial state is not admissible");
  if (!(t_end > 0.0)) throw DomainError("integrate: t_end must be positive");

  Trajectory tr;
  Vec y = to_vec(state0);
  double t = 0.0;
  double h = std::min(c.h_initial, t_end);
  tr.t.push_back(t);
  tr.states.push_back(state0);
  const bool stiff = c.method == Integrator::Rosenbrock;
  const double order_exp = stiff ? 1.0 / 3.0 : 1.0 / 5.0;

  std::size_t since_record = 0;
  while (t < t_end) {
    if (tr.accepted + tr.rejected >= c.max_steps) {
      tr.truncated = true;
      tr.message = "step budget exhausted";
      break;
    }
    if (h < c.h_min) {
      tr.truncated = true;
      tr.message = "step size underflow at t = " + std::to_string(t);
      break;
    }
    h = std::min({h, t_end - t, c.h_max});

    std::optional<Trial> trial;
    if (stiff) {
      const auto f0 = eval(y, spec);
      const auto jac = f0 ? jacobian(y, spec) : std::nullopt;
      if (!f0 || !jac) {
        tr.truncated = true;
        tr.message = "state left the admissible region at t = " + std::to_string(t);
        break;
      }
      // reuse the Jacobian across rejections of this step
      while (h >= c.h_min) {
        trial = rosenbrock(y, h, spec, c, *jac, *f0);
        if (trial && trial->err <= 1.0 && from_vec(trial->y).valid()) break;
        ++tr.rejected;
        h *= trial ? std::clamp(0.8 * std::pow(trial->err, -order_exp), 0.1, 0.5) : 0.5;
        trial.reset();
      }
    } else {
      trial = rk4_doubling(y, h, spec, c);
      if (!trial || trial->err > 1.0) {
        ++tr.rejected;
        h *= trial ? std::clamp(0.9 * std::pow(trial->err, -order_exp), 0.1, 0.5) : 0.5;
        continue;
      }
    }
    if (!trial) continue;  // loop head reports the underflow

    t += h;
    y = trial->y;
    ++tr.accepted;
    const double grow = trial->err > 0.0 ? 0.9 * std::pow(trial->err, -order_exp) : 5.0;
    h *= std::clamp(grow, 0.2, 5.0);

    const DynState s = from_vec(y);
    const bool stop = c.stop && c.stop(t, s);
    if (++since_record >= c.stride || t >= t_end || stop) {
      tr.t.push_back(t);
      tr.states.push_back(s);
      since_record = 0;
    }
    if (stop) {
      tr.stopped = true;
      break;
    }
  }
  if (tr.t.back() != t) {
    tr.t.push_back(t);
    tr.states.push_back(from_vec(y));
  }
  return tr;
}

}  // namespace gcp::dynamics
