#include <cmath>

#include "gcp/net.hpp"

namespace gcp::net {

double positive_transform(double raw) {
  const double sp = raw > 0.0 ? raw + std::log1p(std::exp(-raw)) : std::log1p(std::exp(raw));
  return sp + 1e-6;
}

double positive_transform_grad(double raw) {
  if (raw >= 0.0) return 1.0 / (1.0 + std::exp(-raw));
  const double e = std::exp(raw);
  return e / (1.0 + e);
}

MlpHead::MlpHead(int in_dim, int hidden) : in_dim_(in_dim), hidden_(hidden) {
  if (in_dim < 1) throw PreconditionError("MlpHead: input dimension must be at least 1");
  if (hidden < 1) throw PreconditionError("MlpHead: hidden width must be at least 1");
  const Eigen::Index n = w1_size() + 2 * static_cast<Eigen::Index>(hidden) + 1;
  theta_ = Eigen::VectorXd::Zero(n);
  adam_m_ = Eigen::VectorXd::Zero(n);
  adam_v_ = Eigen::VectorXd::Zero(n);
}

void MlpHead::initialize(data::Rng& rng) {
  theta_.setZero();
  adam_m_.setZero();
  adam_v_.setZero();
  step_ = 0;
  const double limit = std::sqrt(6.0 / in_dim_);
  auto w = w1();
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
  }
  auto v = w2();
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-0.01, 0.01);
}

double MlpHead::forward(const Eigen::VectorXd& x, const Eigen::VectorXd* mask,
                        Cache* cache) const {
  Eigen::VectorXd pre = w1() * x + b1();
  Eigen::VectorXd act = pre.cwiseMax(0.0);
  if (mask != nullptr) act.array() *= mask->array();
  const double out = w2().dot(act) + b2();
  if (cache != nullptr) {
    cache->pre = std::move(pre);
    cache->act = std::move(act);
    cache->mask = mask != nullptr ? *mask : Eigen::VectorXd::Ones(hidden_);
  }
  return out;
}

void MlpHead::backward(const Eigen::VectorXd& x, const Cache& cache, double d_out,
                       Eigen::VectorXd& grad) const {
  if (grad.size() != theta_.size()) grad = Eigen::VectorXd::Zero(theta_.size());
  const Eigen::Index off_b1 = w1_size();
  const Eigen::Index off_w2 = off_b1 + hidden_;
  grad.segment(off_w2, hidden_) += d_out * cache.act;
  grad(grad.size() - 1) += d_out;
  const Eigen::VectorXd d_pre =
      (d_out * w2().array() * cache.mask.array() * (cache.pre.array() > 0.0).cast<double>())
          .matrix();
  Eigen::Map<Eigen::MatrixXd> g_w1(grad.data(), hidden_, in_dim_);
  g_w1.noalias() += d_pre * x.transpose();
  grad.segment(off_b1, hidden_) += d_pre;
}

void MlpHead::adam_step(const Eigen::VectorXd& grad, const AdamSettings& s) {
  if (grad.size() != theta_.size()) throw PreconditionError("adam_step: gradient size mismatch");
  ++step_;
  adam_m_ = s.beta1 * adam_m_ + (1.0 - s.beta1) * grad;
  adam_v_ = s.beta2 * adam_v_ + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(step_));
  theta_.array() -= s.learning_rate * (adam_m_.array() / c1) /
                    ((adam_v_.array() / c2).sqrt() + s.eps);
}

}  // namespace gcp::net
