#pragma once

// Normal-gamma parameters of a GCP network output, the conjugate posterior
// update, the two training losses and the prognostic mean/variance.

#include <limits>
#include <string>

#include "gcp/errors.hpp"

namespace gcp {

// Output of the four heads at one input point. The normal-gamma prior over
// (mean, precision) has location m, pseudo-count nu, shape alpha, rate beta.
struct GcpParams {
  double m = 0.0;
  double nu = 1.0;
  double alpha = 1.0;
  double beta = 1.0;

  // beta (nu + 1) / nu
  double sigma() const { return beta * (nu + 1.0) / nu; }

  bool valid() const;
  // Throws DomainError naming the offending field.
  void validate(const char* where) const;
};

inline double sigma_of(const GcpParams& p) { return p.sigma(); }

// Partial derivatives with respect to (m, nu, alpha, beta).
struct ParamGrad {
  double m = 0.0;
  double nu = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

GcpParams posterior_update(const GcpParams& prior, double y);

// KL divergence from the posterior (built from `fixed` and y) to the prior
// `params`. `fixed` is the stop-gradient snapshot.
double kl_loss(const GcpParams& params, const GcpParams& fixed, double y);
ParamGrad kl_loss_grad(const GcpParams& params, const GcpParams& fixed, double y);

// Negative log density of the marginal Student's t with 2 alpha degrees of
// freedom, location m and squared scale beta (nu + 1) / (nu alpha).
double student_nll(const GcpParams& params, double y);
ParamGrad student_nll_grad(const GcpParams& params, double y);

// Variance of the marginal Student's t; infinite for alpha <= 1. The infinite
// case is a tag, never an IEEE infinity in arithmetic.
class StudentVariance {
 public:
  static StudentVariance infinite() { return StudentVariance(true, 0.0); }
  static StudentVariance finite(double v) { return StudentVariance(false, v); }

  bool is_infinite() const { return infinite_; }
  // Throws std::logic_error when infinite.
  double value() const;
  // Ordering key: +inf for the infinite tag. Only for sorting.
  double sort_key() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }
  std::string to_string() const;

 private:
  StudentVariance(bool inf, double v) : infinite_(inf), value_(v) {}
  bool infinite_;
  double value_;
};

struct PrognosticEstimate {
  double mean = 0.0;
  double variance = 0.0;  // sigma / (alpha - A(alpha))
  StudentVariance student_variance = StudentVariance::infinite();
  double alpha = 0.0;
};

PrognosticEstimate prognostic(const GcpParams& params);

// First-order contamination corrections; functions of alpha only. `sigma`
// is exposed so that the cancellation can be checked.
struct CorrectionConstants {
  double b0 = 0.0;
  double b1 = 0.0;
  double b = 0.0;
};

CorrectionConstants correction_constants(double alpha, double sigma = 1.0);

// (1 - b(alpha) epsilon) V_p. Throws DomainError if the factor is not positive.
double corrected_variance(const PrognosticEstimate& estimate, double epsilon);

}  // namespace gcp
