#include <cmath>
#include <numbers>
#include <string>

#include "gcp/core.hpp"
#include "gcp/special.hpp"

namespace gcp {
namespace {

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

bool GcpParams::valid() const {
  return std::isfinite(m) && positive_finite(nu) && positive_finite(alpha) &&
         positive_finite(beta);
}

void GcpParams::validate(const char* where) const {
  const auto fail = [where](const char* field, double v, const char* need) {
    throw DomainError(std::string(where) + ": " + field + " must be " + need + ", got " +
                      std::to_string(v));
  };
  if (!std::isfinite(m)) fail("m", m, "finite");
  if (!positive_finite(nu)) fail("nu", nu, "positive and finite");
  if (!positive_finite(alpha)) fail("alpha", alpha, "positive and finite");
  if (!positive_finite(beta)) fail("beta", beta, "positive and finite");
}

GcpParams posterior_update(const GcpParams& prior, double y) {
  prior.validate("posterior_update");
  if (!std::isfinite(y)) throw DomainError("posterior_update: y must be finite");
  const double z = y - prior.m;
  return {(prior.nu * prior.m + y) / (prior.nu + 1.0), prior.nu + 1.0, prior.alpha + 0.5,
          prior.beta + prior.nu / (prior.nu + 1.0) * z * z / 2.0};
}

double kl_loss(const GcpParams& params, const GcpParams& fixed, double y) {
  params.validate("kl_loss");
  const GcpParams post = posterior_update(fixed, y);
  post.validate("kl_loss (posterior)");
  const double dm = params.m - post.m;
  return post.alpha * dm * dm * params.nu / (2.0 * post.beta) + params.nu / (2.0 * post.nu) -
         0.5 * std::log(params.nu / post.nu) - 0.5 -
         params.alpha * std::log(params.beta / post.beta) + special::log_gamma(params.alpha) -
         special::log_gamma(post.alpha) -
         (params.alpha - post.alpha) * special::digamma(post.alpha) +
         post.alpha * (params.beta - post.beta) / post.beta;
}

ParamGrad kl_loss_grad(const GcpParams& params, const GcpParams& fixed, double y) {
  params.validate("kl_loss_grad");
  const GcpParams post = posterior_update(fixed, y);
  const double dm = params.m - post.m;
  ParamGrad g;
  g.m = post.alpha * params.nu * dm / post.beta;
  g.nu = post.alpha * dm * dm / (2.0 * post.beta) + 1.0 / (2.0 * post.nu) - 0.5 / params.nu;
  g.alpha = -std::log(params.beta / post.beta) + special::digamma(params.alpha) -
            special::digamma(post.alpha);
  g.beta = -params.alpha / params.beta + post.alpha / post.beta;
  return g;
}

double student_nll(const GcpParams& params, double y) {
  params.validate("student_nll");
  const double sigma = params.sigma();
  const double z = y - params.m;
  const double a = params.alpha;
  return special::log_gamma(a) - special::log_gamma(a + 0.5) +
         0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * std::log(sigma) +
         (a + 0.5) * std::log1p(z * z / (2.0 * sigma));
}

ParamGrad student_nll_grad(const GcpParams& params, double y) {
  params.validate("student_nll_grad");
  const double sigma = params.sigma();
  const double z = y - params.m;
  const double z2 = z * z;
  const double a = params.alpha;
  const double denom = 2.0 * sigma + z2;
  const double d_sigma = -(a * z2 - sigma) / (sigma * denom);
  ParamGrad g;
  g.m = -(2.0 * a + 1.0) * z / denom;
  g.alpha = special::delta_psi(a) + std::log1p(z2 / (2.0 * sigma));
  g.beta = d_sigma * (params.nu + 1.0) / params.nu;
  g.nu = -d_sigma * params.beta / (params.nu * params.nu);
  return g;
}

}  // namespace gcp
