#pragma once

// Idealized training dynamics of a single GCP output under contaminated
// data: the F/G/H integrals, the ODE for (m, alpha, beta, nu), equilibria,
// outlier indicators, and numerical checks of the asymptotic results.

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcp/errors.hpp"

namespace gcp::dynamics {

enum class OutlierShape { Gaussian, Uniform };

// Outlier distribution described by shape, mean and variance. A uniform
// outlier on (lo, hi) has mean (lo + hi) / 2 and variance (hi - lo)^2 / 12.
struct OutlierSpec {
  OutlierShape shape = OutlierShape::Gaussian;
  double mean = 0.0;
  double variance = 1.0;

  static OutlierSpec gaussian(double mean, double variance);
  static OutlierSpec uniform(double lo, double hi);
  // shape standardized to the given mean and variance
  static OutlierSpec standardized(OutlierShape shape, double mean, double variance);

  // support of the uniform shape
  double lo() const;
  double hi() const;
  // central moment of order k <= 6
  double central_moment(int k) const;
  std::string describe() const;
};

struct ContaminationSpec {
  double epsilon = 0.0;
  double m_g = 0.0;
  double v_g = 1.0;
  OutlierSpec outlier;

  void validate() const;
};

void to_json(nlohmann::json& j, const ContaminationSpec& s);

struct OutlierIndicators {
  double c_go = 0.0;
  double d_go = 0.0;
};

OutlierIndicators indicators(const ContaminationSpec& spec);

// Quadrature orders used by fgh. refined() doubles every order.
struct QuadratureSettings {
  int hermite_nodes;
  int legendre_nodes = 256;
  int panel_nodes = 20;

  QuadratureSettings();
  QuadratureSettings refined() const;
};

struct Fgh {
  double f = 0.0;
  double g = 0.0;
  double h = 0.0;
};

Fgh fgh(double m, double alpha, double sigma, const ContaminationSpec& spec,
        const QuadratureSettings& quad = {});

// The three integrals (without the digamma term of G) under a single
// component of the given shape, mean and variance.
Fgh fgh_component(double m, double alpha, double sigma, OutlierShape shape, double mean,
                  double variance, const QuadratureSettings& quad = {});

// Expectation of z / (2 sigma + z^2), z = y - m, under the ground-truth
// component only. Accurate in relative terms for |m - m_g| << sqrt(V_g).
double ground_f(double m, double sigma, double m_g, double v_g,
                const QuadratureSettings& quad = {});

struct DynState {
  double m = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double nu = 1.0;

  double sigma() const { return beta * (nu + 1.0) / nu; }
  bool valid() const;
};

// Right-hand side (dm, dalpha, dbeta, dnu).
std::array<double, 4> rhs(const DynState& s, const ContaminationSpec& spec,
                          const QuadratureSettings& quad = {});
// d sigma / dt from H and nu.
double sigma_rate(const DynState& s, double h);

enum class Integrator {
  // classical RK4 with step doubling
  Rk4,
  // L-stable linearly implicit second/third order pair; for stiff runs
  Rosenbrock,
};

struct StepControl {
  Integrator method = Integrator::Rk4;
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_initial = 1e-2;
  double h_min = 1e-12;
  double h_max = 1e300;
  std::size_t max_steps = 200000;
  // record every `stride`-th accepted step (the last state is always kept)
  std::size_t stride = 1;
  // optional early stop, checked after each accepted step
  std::function<bool(double, const DynState&)> stop;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<DynState> states;
  // integration ended before t_end without the stop predicate firing
  bool truncated = false;
  bool stopped = false;
  std::string message;
  std::size_t accepted = 0;
  std::size_t rejected = 0;

  const DynState& final_state() const { return states.back(); }
};

Trajectory integrate(const DynState& state0, const ContaminationSpec& spec, double t_end,
                     const StepControl& control = {});

struct EquilibriumPoint {
  double m = 0.0;
  double alpha = 1.0;
  double sigma = 1.0;
};

struct Equilibrium {
  double m = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  std::array<double, 3> residuals{};  // |F|, |G|, |H| under the refined rule
  bool converged = false;
  int iterations = 0;
  std::string message;

  double max_residual() const;
  EquilibriumPoint point() const { return {m, alpha, sigma}; }
};

struct NewtonOptions {
  int max_iterations = 200;
  double residual_tol = 1e-9;
  double step_tol = 1e-8;
  // iterates with alpha or sigma above this count as divergence to infinity
  double divergence_cap = 1e10;
  int max_backtracks = 30;
  // cap on the Newton step in (m, ln alpha, ln sigma)
  double max_step = 2.0;
};

// Damped Newton in (m, ln alpha, ln sigma) from the given start, with a
// central-difference Jacobian. `converged` means certified: residuals below
// the tolerance under the refined rule and a final step below step_tol.
// No preconditions are checked.
Equilibrium newton_equilibrium(const ContaminationSpec& spec, const EquilibriumPoint& start,
                               const NewtonOptions& options = {});

// Requires epsilon > 0 and c_go > 0 (PreconditionError otherwise). Without
// a guess, starts from a short stiff ODE run and falls back to the
// asymptotic small-epsilon branch.
Equilibrium equilibrium(const ContaminationSpec& spec,
                        std::optional<EquilibriumPoint> guess = std::nullopt,
                        const NewtonOptions& options = {});

// Leading terms of the small-epsilon equilibrium branch.
struct AsymptoticBranch {
  double m_first = 0.0;   // m_g + (m_o - m_g) eps
  double m_second = 0.0;  // m_first - C D eps^2 / (6 V_g^3)
  double alpha = 0.0;     // 3 V_g^2 / (C eps)
  double sigma = 0.0;     // 3 V_g^3 / (C eps)
};
AsymptoticBranch asymptotic_branch(const ContaminationSpec& spec);

struct SweepRow {
  double epsilon = 0.0;
  Equilibrium eq;
  OutlierIndicators ind;
  AsymptoticBranch asym;
  // eps * alpha against 3 V_g^2 / C
  double eps_alpha = 0.0;
  double eps_alpha_limit = 0.0;
  double eps_alpha_ratio = 0.0;
  // (m - m_g) / eps against m_o - m_g
  double mean_first = 0.0;
  double mean_first_limit = 0.0;
  // (m - m_g - (m_o - m_g) eps) / eps^2 against -C D / (6 V_g^3)
  double mean_second = 0.0;
  double mean_second_limit = 0.0;
};

// Equilibria along the epsilon list (in the given order), each warm-started
// from its predecessor's branch.
std::vector<SweepRow> sweep(const ContaminationSpec& base, const std::vector<double>& epsilons,
                            const NewtonOptions& options = {});

struct VarianceCorrectionRow {
  double epsilon = 0.0;
  bool converged = false;
  std::string message;
  double v_g = 0.0;
  double m_o = 0.0;
  double predicted = 0.0;  // (1 - b eps) V_p
  double error = 0.0;      // |v_g - predicted|
  double ratio = 0.0;      // error / error at the previous (doubled) epsilon; 0 if none
  double slope = 0.0;      // (V_p - v_g) / (eps V_p)
  // root of F in m for the recovered setup, and |m_p - m_g| / eps^k
  double m_p = 0.0;
  double mean_gap = 0.0;
  double mean_gap_eps2 = 0.0;
  double mean_gap_eps3 = 0.0;
  std::array<double, 2> residuals{};  // |G|, |H|
};

struct VarianceCorrectionReport {
  double alpha = 0.0;
  double sigma = 0.0;
  double v_p = 0.0;
  double b = 0.0;
  double b0 = 0.0;
  double b1 = 0.0;
  // V_p - V relation residual, i.e. H at eps = 0, V_g = V_p
  double zero_eps_residual = 0.0;
  std::vector<VarianceCorrectionRow> rows;
};

// Halving sequence eps_0, eps_0/2, ... (count terms).
std::vector<double> halving_sequence(double first, int count);

// For each epsilon, finds V_g and m_o (outlier variance fixed at v_o, m_g = 0)
// such that (m_g, alpha, sigma) zeroes G and H, then compares V_g with the
// first-order correction and locates the root of F in m.
VarianceCorrectionReport verify_variance_correction(double alpha, double sigma,
                                                    OutlierShape shape, double v_o,
                                                    const std::vector<double>& epsilons);

// (alpha, sigma) vector field at fixed m and nu.
struct FieldSample {
  double alpha = 0.0;
  double sigma = 0.0;
  double dalpha = 0.0;
  double dsigma = 0.0;
};
std::vector<FieldSample> vector_field(const ContaminationSpec& spec, double m, double nu,
                                      double alpha_lo, double alpha_hi, double sigma_lo,
                                      double sigma_hi, int n_alpha, int n_sigma);

// CSV writers.
void write_trajectory_csv(const Trajectory& tr, const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_field_csv(const std::vector<FieldSample>& field, const std::string& path);
void write_variance_csv(const VarianceCorrectionReport& report, const std::string& path);
nlohmann::json to_json(const Equilibrium& eq);

}  // namespace gcp::dynamics
