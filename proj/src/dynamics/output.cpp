#include <fstream>
#include <iomanip>

#include "gcp/dynamics.hpp"

namespace gcp::dynamics {
namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  auto out = open_csv(path);
  out << "t,m,alpha,beta,nu,sigma\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const DynState& s = tr.states[i];
    out << tr.t[i] << "," << s.m << "," << s.alpha << "," << s.beta << "," << s.nu << ","
        << s.sigma() << "\n";
  }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  auto out = open_csv(path);
  out << "epsilon,m_eq,alpha_eq,sigma_eq,c_go,d_go,residual,converged,eps_alpha,"
         "eps_alpha_limit,eps_alpha_ratio,m_over_eps,m_over_eps_limit,m_second,"
         "m_second_limit\n";
  for (const auto& r : rows) {
    out << r.epsilon << "," << r.eq.m << "," << r.eq.alpha << "," << r.eq.sigma << ","
        << r.ind.c_go << "," << r.ind.d_go << "," << r.eq.max_residual() << ","
        << (r.eq.converged ? 1 : 0) << "," << r.eps_alpha << "," << r.eps_alpha_limit << ","
        << r.eps_alpha_ratio << "," << r.mean_first << "," << r.mean_first_limit << ","
        << r.mean_second << "," << r.mean_second_limit << "\n";
  }
}

void write_field_csv(const std::vector<FieldSample>& field, const std::string& path) {
  auto out = open_csv(path);
  out << "alpha,sigma,dalpha,dsigma\n";
  for (const auto& f : field) {
    out << f.alpha << "," << f.sigma << "," << f.dalpha << "," << f.dsigma << "\n";
  }
}

void write_variance_csv(const VarianceCorrectionReport& report, const std::string& path) {
  auto out = open_csv(path);
  out << "epsilon,converged,v_g,m_o,predicted,error,ratio,slope,b,m_p,mean_gap,"
         "mean_gap_eps2,mean_gap_eps3,residual_g,residual_h\n";
  for (const auto& r : report.rows) {
    out << r.epsilon << "," << (r.converged ? 1 : 0) << "," << r.v_g << "," << r.m_o << ","
        << r.predicted << "," << r.error << "," << r.ratio << "," << r.slope << "," << report.b
        << "," << r.m_p << "," << r.mean_gap << "," << r.mean_gap_eps2 << ","
        << r.mean_gap_eps3 << "," << r.residuals[0] << "," << r.residuals[1] << "\n";
  }
}

nlohmann::json to_json(const Equilibrium& eq) {
  return {{"m", eq.m},
          {"alpha", eq.alpha},
          {"sigma", eq.sigma},
          {"residuals", {{"F", eq.residuals[0]}, {"G", eq.residuals[1]}, {"H", eq.residuals[2]}}},
          {"max_residual", eq.max_residual()},
          {"converged", eq.converged},
          {"iterations", eq.iterations},
          {"message", eq.message}};
}

}  // namespace gcp::dynamics
