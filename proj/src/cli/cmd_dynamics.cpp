#include <cmath>
#include <iomanip>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "gcp/cli.hpp"
#include "gcp/core.hpp"
#include "gcp/dynamics.hpp"

namespace gcp::cli {
namespace {

using dynamics::ContaminationSpec;
using dynamics::OutlierShape;
using dynamics::OutlierSpec;

struct SpecFlags {
  std::optional<double> epsilon;
  std::optional<double> m_g;
  std::optional<double> v_g;
  std::optional<std::string> gaussian;
  std::optional<std::string> uniform;
};

void add_spec_flags(CLI::App& sub, SpecFlags& f) {
  sub.add_option("--epsilon", f.epsilon, "Contamination level");
  sub.add_option("--mg", f.m_g, "Ground-truth mean");
  sub.add_option("--vg", f.v_g, "Ground-truth variance");
  sub.add_option("--gaussian-outliers", f.gaussian, "Gaussian outliers: mean,variance");
  sub.add_option("--uniform-outliers", f.uniform, "Uniform outliers: lo,hi");
}

// defaults < config "contamination" < flags
ContaminationSpec resolve_spec(const SpecFlags& f, const GlobalOptions& g, double default_eps) {
  ContaminationSpec s;
  s.epsilon = default_eps;
  s.m_g = 0.0;
  s.v_g = 1.0;
  s.outlier = OutlierSpec::gaussian(5.0, 1.0);
  const auto config = g.config_json();
  if (config.contains("contamination")) {
    try {
      const auto& c = config.at("contamination");
      if (c.contains("epsilon")) c.at("epsilon").get_to(s.epsilon);
      if (c.contains("m_g")) c.at("m_g").get_to(s.m_g);
      if (c.contains("v_g")) c.at("v_g").get_to(s.v_g);
      if (c.contains("outlier")) {
        const auto& o = c.at("outlier");
        const std::string shape = o.value("shape", std::string("gaussian"));
        if (shape != "gaussian" && shape != "uniform") {
          throw ParseError("config: outlier shape must be gaussian or uniform");
        }
        s.outlier = OutlierSpec::standardized(
            shape == "gaussian" ? OutlierShape::Gaussian : OutlierShape::Uniform,
            o.value("mean", s.outlier.mean), o.value("variance", s.outlier.variance));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("config: ") + e.what());
    }
  }
  if (f.gaussian && f.uniform) {
    throw UsageError("--gaussian-outliers and --uniform-outliers are exclusive");
  }
  if (f.epsilon) s.epsilon = *f.epsilon;
  if (f.m_g) s.m_g = *f.m_g;
  if (f.v_g) s.v_g = *f.v_g;
  if (f.gaussian) {
    const auto v = parse_list(*f.gaussian, "--gaussian-outliers");
    if (v.size() != 2) throw UsageError("--gaussian-outliers expects mean,variance");
    if (!(v[1] > 0.0)) throw UsageError("--gaussian-outliers: variance must be positive");
    s.outlier = OutlierSpec::gaussian(v[0], v[1]);
  }
  if (f.uniform) {
    const auto v = parse_list(*f.uniform, "--uniform-outliers");
    if (v.size() != 2 || !(v[0] < v[1])) throw UsageError("--uniform-outliers expects lo,hi with lo < hi");
    s.outlier = OutlierSpec::uniform(v[0], v[1]);
  }
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return s;
}

nlohmann::json spec_json(const ContaminationSpec& s) {
  nlohmann::json j = s;
  const auto ind = dynamics::indicators(s);
  j["c_go"] = ind.c_go;
  j["d_go"] = ind.d_go;
  return j;
}

struct SimulateOptions {
  SpecFlags spec;
  double m0 = 0.3;
  double alpha0 = 1.0;
  double beta0 = 0.5;
  double nu0 = 1.0;
  double t_end = 1e4;
  std::string method = "rosenbrock";
  double rtol = 1e-8;
  std::size_t max_steps = 200000;
  std::size_t stride = 1;
};

void run_simulate(const GlobalOptions& g, const SimulateOptions& o) {
  const ContaminationSpec spec = resolve_spec(o.spec, g, 0.01);
  const auto ind = dynamics::indicators(spec);
  if (spec.epsilon > 0.0 && !(ind.c_go > 0.0)) {
    std::cerr << "warning: c_go = " << ind.c_go
              << " is not positive; no finite equilibrium is expected\n";
  }
  dynamics::DynState s0{o.m0, o.alpha0, o.beta0, o.nu0};
  if (!s0.valid()) throw UsageError("initial state needs alpha, beta, nu > 0");
  if (!(o.t_end > 0.0)) throw UsageError("--t-end must be positive");
  dynamics::StepControl control;
  if (o.method == "rk4") {
    control.method = dynamics::Integrator::Rk4;
  } else if (o.method == "rosenbrock") {
    control.method = dynamics::Integrator::Rosenbrock;
  } else {
    throw UsageError("--method must be rk4 or rosenbrock");
  }
  control.rtol = o.rtol;
  control.max_steps = o.max_steps;
  control.stride = std::max<std::size_t>(o.stride, 1);

  const auto tr = dynamics::integrate(s0, spec, o.t_end, control);
  const auto dir = g.out_dir();
  dynamics::write_trajectory_csv(tr, (dir / "trajectory.csv").string());
  write_manifest(g, "dynamics simulate",
                 {{"contamination", spec_json(spec)},
                  {"initial", {{"m", o.m0}, {"alpha", o.alpha0}, {"beta", o.beta0}, {"nu", o.nu0}}},
                  {"t_end", o.t_end},
                  {"method", o.method},
                  {"rtol", o.rtol},
                  {"max_steps", o.max_steps},
                  {"stride", control.stride}});
  const auto& f = tr.final_state();
  std::cout << std::setprecision(8) << "t = " << tr.t.back() << ": m = " << f.m
            << ", alpha = " << f.alpha << ", sigma = " << f.sigma() << " (" << tr.accepted
            << " steps)\n";
  if (tr.truncated) {
    std::cerr << "warning: integration stopped early: " << tr.message << "\n";
  }
}

struct EquilibriumOptions {
  SpecFlags spec;
};

void run_equilibrium(const GlobalOptions& g, const EquilibriumOptions& o) {
  const ContaminationSpec spec = resolve_spec(o.spec, g, 0.01);
  const auto eq = dynamics::equilibrium(spec);
  const auto asym = dynamics::asymptotic_branch(spec);
  nlohmann::json j;
  j["contamination"] = spec_json(spec);
  j["equilibrium"] = dynamics::to_json(eq);
  j["asymptotic"] = {{"m_first", asym.m_first},
                     {"m_second", asym.m_second},
                     {"alpha", asym.alpha},
                     {"sigma", asym.sigma}};
  if (eq.converged) {
    const auto est = prognostic(GcpParams{eq.m, 1.0, eq.alpha, eq.sigma / 2.0});
    j["prognostic_variance"] = est.variance;
    j["student_variance"] = est.student_variance.to_string();
  }
  const auto dir = g.out_dir();
  net::write_json(j, dir / "equilibrium.json");
  write_manifest(g, "dynamics equilibrium", {{"contamination", spec_json(spec)}});
  std::cout << std::setprecision(10) << "m = " << eq.m << ", alpha = " << eq.alpha
            << ", sigma = " << eq.sigma << ", max residual " << eq.max_residual() << "\n";
  if (!eq.converged) throw SolverError("equilibrium not certified: " + eq.message);
}

struct SweepOptions {
  SpecFlags spec;
  std::string eps = "0.08,0.04,0.02,0.01,0.005";
};

void run_sweep(const GlobalOptions& g, const SweepOptions& o) {
  if (o.spec.epsilon) throw UsageError("sweep takes --eps, not --epsilon");
  const ContaminationSpec spec = resolve_spec(o.spec, g, 0.0);
  const auto eps = parse_list(o.eps, "--eps");
  for (double e : eps) {
    if (!(e > 0.0 && e < 1.0)) throw UsageError("--eps values must lie in (0, 1)");
  }
  const auto rows = dynamics::sweep(spec, eps);
  const auto dir = g.out_dir();
  dynamics::write_sweep_csv(rows, (dir / "sweep.csv").string());
  write_manifest(g, "dynamics sweep", {{"contamination", spec_json(spec)}, {"eps", eps}});
  std::cout << "epsilon,alpha,eps_alpha_ratio,m_over_eps,m_second,converged\n"
            << std::setprecision(8);
  bool all = true;
  for (const auto& r : rows) {
    std::cout << r.epsilon << "," << r.eq.alpha << "," << r.eps_alpha_ratio << "," << r.mean_first
              << "," << r.mean_second << "," << (r.eq.converged ? 1 : 0) << "\n";
    all = all && r.eq.converged;
  }
  if (!all) std::cerr << "warning: some sweep points are not certified\n";
}

struct FieldOptions {
  SpecFlags spec;
  std::optional<double> m;
  double nu = 1.0;
  std::string alpha_range = "0.1:1000:30";
  std::string sigma_range = "0.1:1000:30";
};

void run_field(const GlobalOptions& g, const FieldOptions& o) {
  const ContaminationSpec spec = resolve_spec(o.spec, g, 0.0);
  const auto a = parse_grid(o.alpha_range, "--alpha-range");
  const auto s = parse_grid(o.sigma_range, "--sigma-range");
  if (!(a.lo > 0.0) || !(s.lo > 0.0) || a.n < 2 || s.n < 2) {
    throw UsageError("field ranges need lo > 0 and at least two points");
  }
  if (!(o.nu > 0.0)) throw UsageError("--nu must be positive");
  const double m = o.m.value_or(spec.m_g);
  const auto field = dynamics::vector_field(spec, m, o.nu, a.lo, a.hi, s.lo, s.hi, a.n, s.n);
  const auto dir = g.out_dir();
  dynamics::write_field_csv(field, (dir / "field.csv").string());
  write_manifest(g, "dynamics field",
                 {{"contamination", spec_json(spec)},
                  {"m", m},
                  {"nu", o.nu},
                  {"alpha_range", o.alpha_range},
                  {"sigma_range", o.sigma_range}});
  double min_norm = std::numeric_limits<double>::infinity();
  for (const auto& p : field) min_norm = std::min(min_norm, std::hypot(p.dalpha, p.dsigma));
  std::cout << field.size() << " field samples, smallest |(dalpha, dsigma)| = " << min_norm
            << "\n";
}

struct VerifyOptions {
  double alpha = 2.0;
  double sigma = 2.0;
  double v_o = 1.0;
  std::string shape = "gaussian";
  std::optional<std::string> eps;
};

void run_verify(const GlobalOptions& g, const VerifyOptions& o) {
  if (!(o.alpha > 0.0) || !(o.sigma > 0.0) || !(o.v_o > 0.0)) {
    throw UsageError("--alpha, --sigma and --vo must be positive");
  }
  if (o.shape != "gaussian" && o.shape != "uniform") {
    throw UsageError("--shape must be gaussian or uniform");
  }
  const auto eps = o.eps ? parse_list(*o.eps, "--eps") : dynamics::halving_sequence(0.005, 5);
  for (double e : eps) {
    if (!(e > 0.0 && e < 1.0)) throw UsageError("--eps values must lie in (0, 1)");
  }
  const auto report = dynamics::verify_variance_correction(
      o.alpha, o.sigma, o.shape == "gaussian" ? OutlierShape::Gaussian : OutlierShape::Uniform,
      o.v_o, eps);
  const auto dir = g.out_dir();
  dynamics::write_variance_csv(report, (dir / "variance_correction.csv").string());
  write_manifest(g, "dynamics verify",
                 {{"alpha", o.alpha}, {"sigma", o.sigma}, {"v_o", o.v_o}, {"shape", o.shape},
                  {"eps", eps}});
  std::cout << std::setprecision(8) << "V_p = " << report.v_p << ", b = " << report.b
            << ", b0 = " << report.b0 << ", b1 = " << report.b1 << "\n"
            << "epsilon,v_g,predicted,ratio,slope,mean_gap_eps3,converged\n";
  for (const auto& r : report.rows) {
    std::cout << r.epsilon << "," << r.v_g << "," << r.predicted << "," << r.ratio << ","
              << r.slope << "," << r.mean_gap_eps3 << "," << (r.converged ? 1 : 0) << "\n";
  }
}

}  // namespace

void add_dynamics(CLI::App& app, GlobalOptions& g) {
  auto* dyn = app.add_subcommand("dynamics", "Training dynamics of one output under contamination");
  dyn->require_subcommand(1);
  dyn->fallthrough();

  auto sim = std::make_shared<SimulateOptions>();
  auto* s = dyn->add_subcommand("simulate", "Integrate the ODE from an initial state");
  add_spec_flags(*s, sim->spec);
  s->add_option("--m0", sim->m0)->capture_default_str();
  s->add_option("--alpha0", sim->alpha0)->capture_default_str();
  s->add_option("--beta0", sim->beta0)->capture_default_str();
  s->add_option("--nu0", sim->nu0)->capture_default_str();
  s->add_option("--t-end", sim->t_end)->capture_default_str();
  s->add_option("--method", sim->method, "rk4 or rosenbrock")->capture_default_str();
  s->add_option("--rtol", sim->rtol)->capture_default_str();
  s->add_option("--max-steps", sim->max_steps)->capture_default_str();
  s->add_option("--stride", sim->stride, "Keep every n-th step")->capture_default_str();
  s->callback([&g, sim] { run_simulate(g, *sim); });

  auto eqo = std::make_shared<EquilibriumOptions>();
  auto* e = dyn->add_subcommand("equilibrium", "Certified finite equilibrium");
  add_spec_flags(*e, eqo->spec);
  e->callback([&g, eqo] { run_equilibrium(g, *eqo); });

  auto sw = std::make_shared<SweepOptions>();
  auto* w = dyn->add_subcommand("sweep", "Equilibrium branch over a list of epsilon values");
  add_spec_flags(*w, sw->spec);
  w->add_option("--eps", sw->eps, "Comma-separated epsilon values")->capture_default_str();
  w->callback([&g, sw] { run_sweep(g, *sw); });

  auto fo = std::make_shared<FieldOptions>();
  auto* f = dyn->add_subcommand("field", "(alpha, sigma) vector field at fixed m and nu");
  add_spec_flags(*f, fo->spec);
  f->add_option("--m", fo->m, "Mean (default: the ground-truth mean)");
  f->add_option("--nu", fo->nu)->capture_default_str();
  f->add_option("--alpha-range", fo->alpha_range, "lo:hi:n, log spaced")->capture_default_str();
  f->add_option("--sigma-range", fo->sigma_range, "lo:hi:n, log spaced")->capture_default_str();
  f->callback([&g, fo] { run_field(g, *fo); });

  auto vo = std::make_shared<VerifyOptions>();
  auto* v = dyn->add_subcommand("verify", "Inverse-equilibrium check of the variance correction");
  v->add_option("--alpha", vo->alpha)->capture_default_str();
  v->add_option("--sigma", vo->sigma)->capture_default_str();
  v->add_option("--vo", vo->v_o, "Outlier variance")->capture_default_str();
  v->add_option("--shape", vo->shape, "gaussian or uniform")->capture_default_str();
  v->add_option("--eps", vo->eps, "Comma-separated epsilon values");
  v->callback([&g, vo] { run_verify(g, *vo); });
}

}  // namespace gcp::cli
