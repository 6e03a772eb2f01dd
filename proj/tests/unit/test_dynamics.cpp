#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include "gcp/core.hpp"
#include "gcp/dynamics.hpp"
#include "gcp/special.hpp"

using namespace gcp::dynamics;

namespace {

ContaminationSpec gaussian_spec(double eps, double m_o = 5.0, double v_o = 1.0) {
  ContaminationSpec s;
  s.epsilon = eps;
  s.m_g = 0.0;
  s.v_g = 1.0;
  s.outlier = OutlierSpec::gaussian(m_o, v_o);
  return s;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("indicators") {
  const auto same = indicators(gaussian_spec(0.1, 0.0, 1.0));
  CHECK(std::abs(same.c_go) < 1e-12);
  CHECK(std::abs(same.d_go) < 1e-12);
  const auto far = indicators(gaussian_spec(0.1));
  CHECK(far.c_go == doctest::Approx(625.0).epsilon(1e-14));
  CHECK(far.d_go == doctest::Approx(125.0).epsilon(1e-14));
  const auto wide = indicators(gaussian_spec(0.1, 0.0, 2.0));
  CHECK(wide.c_go == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(wide.d_go) < 1e-12);
}

TEST_CASE("outlier spec moments") {
  const auto u = OutlierSpec::uniform(-1.0, 3.0);
  CHECK(u.mean == 1.0);
  CHECK(u.variance == doctest::Approx(16.0 / 12.0));
  CHECK(u.lo() == doctest::Approx(-1.0));
  CHECK(u.hi() == doctest::Approx(3.0));
  CHECK(u.central_moment(4) == doctest::Approx(std::pow(2.0, 4) / 5.0));
  const auto g = OutlierSpec::gaussian(0.0, 2.0);
  CHECK(g.central_moment(4) == doctest::Approx(12.0));
  CHECK(g.central_moment(3) == 0.0);
}

TEST_CASE("F vanishes at the ground-truth mean without contamination") {
  for (double sigma : {0.01, 0.5, 3.0, 100.0}) {
    CHECK(std::abs(fgh(0.0, 2.0, sigma, gaussian_spec(0.0)).f) < 1e-15);
  }
}

TEST_CASE("H vanishes on the prognostic-variance relation") {
  for (double alpha : {0.05, 0.7, 2.0, 30.0}) {
    const double sigma = 1.0 * gcp::special::solve_gap(alpha);
    CAPTURE(alpha);
    CHECK(std::abs(fgh(0.0, alpha, sigma, gaussian_spec(0.0)).h) < 1e-9);
  }
}

TEST_CASE("contamination by the ground truth is no contamination") {
  const auto clean = fgh(0.3, 1.7, 0.9, gaussian_spec(0.0));
  const auto self = fgh(0.3, 1.7, 0.9, gaussian_spec(0.4, 0.0, 1.0));
  CHECK(std::abs(clean.f - self.f) < 1e-12);
  CHECK(std::abs(clean.g - self.g) < 1e-12);
  CHECK(std::abs(clean.h - self.h) < 1e-12);
}

TEST_CASE("uniform component against a brute-force sum") {
  const double m = 0.4, alpha = 1.3, sigma = 0.2, lo = -1.0, hi = 2.5;
  const auto q = fgh_component(m, alpha, sigma, OutlierShape::Uniform, 0.5 * (lo + hi),
                               (hi - lo) * (hi - lo) / 12.0);
  const int n = 400000;
  double f = 0.0, g = 0.0, h = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = lo + (hi - lo) * (i + 0.5) / n;
    const double z = y - m;
    f += z / (2 * sigma + z * z);
    g += std::log1p(z * z / (2 * sigma));
    h += (alpha * z * z - sigma) / (2 * sigma + z * z);
  }
  CHECK(q.f == doctest::Approx(f / n).epsilon(1e-7));
  CHECK(q.g == doctest::Approx(g / n).epsilon(1e-7));
  CHECK(q.h == doctest::Approx(h / n).epsilon(1e-7));
}

TEST_CASE("right-hand side and sigma rate") {
  const auto spec = gaussian_spec(0.05);
  const DynState s{0.2, 1.5, 0.8, 2.0};
  const auto r = rhs(s, spec);
  const auto q = fgh(s.m, s.alpha, s.sigma(), spec);
  CHECK(r[0] == doctest::Approx((2 * s.alpha + 1) * q.f).epsilon(1e-14));
  CHECK(r[1] == doctest::Approx(-q.g).epsilon(1e-14));
  const double dsigma = r[2] * (s.nu + 1) / s.nu - s.beta * r[3] / (s.nu * s.nu);
  CHECK(sigma_rate(s, q.h) == doctest::Approx(dsigma).epsilon(1e-12));
}

TEST_CASE("no contamination: alpha and sigma grow without bound") {
  StepControl c;
  c.method = Integrator::Rosenbrock;
  c.rtol = 1e-7;
  c.max_steps = 100000;
  c.stride = 1000;
  c.stop = [](double, const DynState& s) { return s.alpha > 1e3 && s.sigma() > 1e3; };
  const auto tr = integrate({0.3, 1.0, 0.5, 1.0}, gaussian_spec(0.0), 1e14, c);
  CHECK(tr.stopped);
  CHECK(tr.final_state().alpha > 1e3);
  CHECK(std::abs(tr.final_state().m) < 1e-3);
}

TEST_CASE("equilibrium is certified and attracts the flow") {
  const auto spec = gaussian_spec(0.05);
  const auto eq = equilibrium(spec);
  REQUIRE(eq.converged);
  CHECK(eq.max_residual() < 1e-9);
  const auto refined = QuadratureSettings().refined();
  const auto q = fgh(eq.m, eq.alpha, eq.sigma, spec, refined);
  CHECK(std::max({std::abs(q.f), std::abs(q.g), std::abs(q.h)}) < 1e-9);

  StepControl c;
  c.method = Integrator::Rosenbrock;
  c.rtol = 1e-10;
  c.atol = 1e-12;
  c.stride = 100000;
  const auto tr = integrate({0.3, 1.0, 0.5, 1.0}, spec, 1e8, c);
  const auto& s = tr.final_state();
  CHECK(std::abs(s.m - eq.m) < 1e-6);
  CHECK(std::abs(s.alpha - eq.alpha) < 1e-6 * eq.alpha);
  CHECK(std::abs(s.sigma() - eq.sigma) < 1e-6 * eq.sigma);

  // started on the equilibrium the state stays put
  const DynState at{eq.m, eq.alpha, eq.sigma / 2.0, 1.0};
  StepControl c2;
  c2.rtol = 1e-10;
  const auto still = integrate(at, spec, 100.0, c2);
  CHECK(std::abs(still.final_state().m - eq.m) < 1e-8);
  CHECK(std::abs(still.final_state().alpha - eq.alpha) < 1e-8 * eq.alpha);
}

TEST_CASE("ODE and Newton agree") {
  for (double eps : {0.01, 0.05, 0.1}) {
    const auto spec = gaussian_spec(eps);
    const auto eq = equilibrium(spec);
    REQUIRE(eq.converged);
    StepControl c;
    c.method = Integrator::Rosenbrock;
    c.rtol = 1e-11;
    c.atol = 1e-13;
    c.stride = 1000000;
    const auto tr = integrate({0.0, 1.0, 0.5, 1.0}, spec, 1e9, c);
    const auto& s = tr.final_state();
    CAPTURE(eps);
    CHECK(std::abs(s.m - eq.m) < 1e-5);
    CHECK(std::abs(s.alpha - eq.alpha) < 1e-5);
    CHECK(std::abs(s.sigma() - eq.sigma) < 1e-5);
  }
}

TEST_CASE("equilibrium preconditions") {
  CHECK_THROWS_AS(equilibrium(gaussian_spec(0.0)), gcp::PreconditionError);
  // outliers equal to the ground truth: c_go = 0
  CHECK_THROWS_AS(equilibrium(gaussian_spec(0.1, 0.0, 1.0)), gcp::PreconditionError);
  auto bad = gaussian_spec(0.1);
  bad.v_g = -1.0;
  CHECK_THROWS_AS(equilibrium(bad), gcp::DomainError);
}

TEST_CASE("no certified equilibrium without contamination") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    const EquilibriumPoint start{0.5 * u(gen), std::exp(2.0 * u(gen)), std::exp(2.0 * u(gen))};
    CHECK_FALSE(newton_equilibrium(gaussian_spec(0.0), start).converged);
  }
}

TEST_CASE("branch trends toward the small-epsilon limits") {
  const auto rows = sweep(gaussian_spec(0.0), {0.04, 0.02, 0.01, 0.005});
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].eq.converged);
    CHECK(rows[i].eps_alpha_limit == doctest::Approx(0.0048));
    CHECK(rows[i].mean_second_limit == doctest::Approx(-625.0 * 125.0 / 6.0));
    if (i > 0) {
      CHECK(std::abs(rows[i].eps_alpha_ratio - 1.0) < std::abs(rows[i - 1].eps_alpha_ratio - 1.0));
      CHECK(std::abs(rows[i].mean_first - 5.0) < std::abs(rows[i - 1].mean_first - 5.0));
    }
  }
  // at eps = 0.01 the branch is still pre-asymptotic
  CHECK(rows[2].eps_alpha_ratio > 1.25);
}

TEST_CASE("symmetric outliers keep F's root at the ground-truth mean") {
  auto spec = gaussian_spec(0.2, 0.0, 9.0);
  CHECK(std::abs(fgh(0.0, 1.3, 0.7, spec).f) < 1e-15);
  spec.outlier = OutlierSpec::uniform(-4.0, 4.0);
  CHECK(std::abs(fgh(0.0, 1.3, 0.7, spec).f) < 1e-15);
}

TEST_CASE("variance correction report") {
  const auto report = verify_variance_correction(2.0, 2.0, OutlierShape::Gaussian, 1.0,
                                                 halving_sequence(0.005, 5));
  CHECK(report.zero_eps_residual < 1e-9);
  CHECK(report.b == doctest::Approx(gcp::correction_constants(2.0).b));
  REQUIRE(report.rows.size() == 5);
  for (const auto& r : report.rows) CHECK(r.converged);
  for (std::size_t i = 2; i < 5; ++i) CHECK(std::abs(report.rows[i].ratio - 0.25) < 0.1);
  CHECK(report.rows.back().slope == doctest::Approx(report.b).epsilon(0.1));
  CHECK(halving_sequence(1.0, 3) == std::vector<double>{1.0, 0.5, 0.25});
}

TEST_CASE("vector field without contamination never vanishes") {
  const auto field = vector_field(gaussian_spec(0.0), 0.0, 1.0, 0.1, 1e3, 0.1, 1e3, 12, 12);
  REQUIRE(field.size() == 144);
  for (const auto& p : field) CHECK(std::hypot(p.dalpha, p.dsigma) > 0.0);
}

TEST_CASE("csv outputs carry headers") {
  const auto dir = std::filesystem::temp_directory_path() / "gcp_dyn_tests";
  std::filesystem::create_directories(dir);
  const auto rows = sweep(gaussian_spec(0.0), {0.05});
  write_sweep_csv(rows, (dir / "sweep.csv").string());
  std::ifstream in(dir / "sweep.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("epsilon,m_eq,alpha_eq,sigma_eq", 0) == 0);
  const auto j = to_json(rows[0].eq);
  CHECK(j.at("converged").get<bool>());
}

}  // TEST_SUITE
