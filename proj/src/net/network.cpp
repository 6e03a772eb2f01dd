#include <cmath>
#include <numbers>
#include <sstream>

#include "gcp/net.hpp"

namespace gcp::net {

std::string to_string(LossKind k) { return k == LossKind::Kl ? "kl" : "student_nll"; }

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "student_nll" || s == "nll") return LossKind::StudentNll;
  if (s == "kl") return LossKind::Kl;
  throw PreconditionError("unknown loss '" + s + "' (expected student_nll or kl)");
}

HeadNetwork::HeadNetwork(int n_heads, int in_dim, int hidden, double dropout)
    : in_dim_(in_dim), hidden_(hidden), dropout_(dropout) {
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw PreconditionError("network: dropout rate must lie in [0, 1)");
  }
  heads_.reserve(static_cast<std::size_t>(n_heads));
  for (int k = 0; k < n_heads; ++k) heads_.emplace_back(in_dim, hidden);
}

void HeadNetwork::initialize(std::uint64_t seed) {
  const data::Rng root(seed);
  for (std::size_t k = 0; k < heads_.size(); ++k) {
    data::Rng rng = root.split(k);
    heads_[k].initialize(rng);
  }
}

void HeadNetwork::check_input(const Eigen::VectorXd& x) const {
  if (x.size() != in_dim_) {
    std::ostringstream os;
    os << "network expects " << in_dim_ << " input features, got " << x.size();
    throw PreconditionError(os.str());
  }
}

Eigen::VectorXd HeadNetwork::raw_forward(const Eigen::VectorXd& x, Mode mode, data::Rng* rng,
                                         std::vector<MlpHead::Cache>* caches) const {
  check_input(x);
  const bool drop = mode == Mode::Train && dropout_ > 0.0;
  if (drop && rng == nullptr) throw PreconditionError("train-mode dropout needs an rng");
  if (caches != nullptr) caches->resize(heads_.size());
  Eigen::VectorXd raw(static_cast<Eigen::Index>(heads_.size()));
  Eigen::VectorXd mask;
  for (std::size_t k = 0; k < heads_.size(); ++k) {
    if (drop) {
      mask.resize(hidden_);
      const double keep_scale = 1.0 / (1.0 - dropout_);
      for (int i = 0; i < hidden_; ++i) mask(i) = rng->bernoulli(dropout_) ? 0.0 : keep_scale;
    }
    raw(static_cast<Eigen::Index>(k)) =
        heads_[k].forward(x, drop ? &mask : nullptr, caches != nullptr ? &(*caches)[k] : nullptr);
  }
  return raw;
}

double HeadNetwork::sample_loss(const Eigen::VectorXd& x, double y, Mode mode, data::Rng* rng,
                                Gradients* grads, double weight) const {
  if (grads == nullptr) return output_loss(raw_forward(x, mode, rng), y, nullptr);
  std::vector<MlpHead::Cache> caches;
  const Eigen::VectorXd raw = raw_forward(x, mode, rng, &caches);
  Eigen::VectorXd d_raw(raw.size());
  const double loss = output_loss(raw, y, &d_raw);
  if (grads->size() != heads_.size()) *grads = zero_gradients();
  for (std::size_t k = 0; k < heads_.size(); ++k) {
    heads_[k].backward(x, caches[k], weight * d_raw(static_cast<Eigen::Index>(k)), (*grads)[k]);
  }
  return loss;
}

Gradients HeadNetwork::zero_gradients() const {
  Gradients g;
  g.reserve(heads_.size());
  for (const auto& h : heads_) {
    g.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.param_count())));
  }
  return g;
}

void HeadNetwork::adam_step(const Gradients& grads, const AdamSettings& s) {
  if (grads.size() != heads_.size()) throw PreconditionError("adam_step: head count mismatch");
  for (std::size_t k = 0; k < heads_.size(); ++k) heads_[k].adam_step(grads[k], s);
}

GcpNetwork::GcpNetwork(int in_dim, int hidden, double dropout, LossKind loss)
    : HeadNetwork(4, in_dim, hidden, dropout), loss_(loss) {}

GcpParams GcpNetwork::params_from_raw(const Eigen::VectorXd& raw) {
  return {raw(0), positive_transform(raw(1)), positive_transform(raw(2)),
          positive_transform(raw(3))};
}

GcpParams GcpNetwork::forward(const Eigen::VectorXd& x, Mode mode, data::Rng* rng) const {
  return params_from_raw(raw_forward(x, mode, rng));
}

double GcpNetwork::output_loss(const Eigen::VectorXd& raw, double y,
                               Eigen::VectorXd* d_raw) const {
  const GcpParams p = params_from_raw(raw);
  // The KL loss is evaluated with the stop-gradient snapshot equal to the
  // current parameters.
  const double loss = loss_ == LossKind::Kl ? kl_loss(p, p, y) : student_nll(p, y);
  if (d_raw != nullptr) {
    const ParamGrad g = loss_ == LossKind::Kl ? kl_loss_grad(p, p, y) : student_nll_grad(p, y);
    d_raw->resize(4);
    (*d_raw)(0) = g.m;
    (*d_raw)(1) = g.nu * positive_transform_grad(raw(1));
    (*d_raw)(2) = g.alpha * positive_transform_grad(raw(2));
    (*d_raw)(3) = g.beta * positive_transform_grad(raw(3));
  }
  return loss;
}

GaussianNetwork::GaussianNetwork(int in_dim, int hidden, double dropout)
    : HeadNetwork(2, in_dim, hidden, dropout) {}

GaussianNetwork::Prediction GaussianNetwork::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd raw = raw_forward(x, Mode::Eval, nullptr);
  return {raw(0), std::exp(raw(1))};
}

double GaussianNetwork::output_loss(const Eigen::VectorXd& raw, double y,
                                    Eigen::VectorXd* d_raw) const {
  const double r = y - raw(0);
  const double inv_var = std::exp(-raw(1));
  if (d_raw != nullptr) {
    d_raw->resize(2);
    (*d_raw)(0) = -r * inv_var;
    (*d_raw)(1) = 0.5 - 0.5 * r * r * inv_var;
  }
  return 0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * raw(1) + 0.5 * r * r * inv_var;
}

}  // namespace gcp::net
