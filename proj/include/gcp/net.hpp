#pragma once

// One-hidden-layer ReLU heads with hand-written backpropagation, dropout
// and Adam; the four-head GCP network, a two-head Gaussian baseline, and
// ensembles.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "gcp/core.hpp"
#include "gcp/data.hpp"

namespace gcp::net {

enum class Mode { Train, Eval };
enum class LossKind { StudentNll, Kl };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct AdamSettings {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// ln(1 + e^r) + 1e-6 and its derivative.
double positive_transform(double raw);
double positive_transform_grad(double raw);

class MlpHead {
 public:
  struct Cache {
    Eigen::VectorXd pre;   // W1 x + b1
    Eigen::VectorXd act;   // relu(pre) * mask
    Eigen::VectorXd mask;  // 0 or 1 / (1 - p) per unit; all ones in eval mode
  };

  MlpHead() = default;
  MlpHead(int in_dim, int hidden);

  // He-uniform first layer, uniform(-0.01, 0.01) output weights, zero biases.
  void initialize(data::Rng& rng);

  int in_dim() const { return in_dim_; }
  int hidden() const { return hidden_; }
  std::size_t param_count() const { return static_cast<std::size_t>(theta_.size()); }

  // Parameter layout: w1 (hidden x in_dim, column major), b1, w2, b2.
  Eigen::Map<Eigen::MatrixXd> w1() { return {theta_.data(), hidden_, in_dim_}; }
  Eigen::Map<const Eigen::MatrixXd> w1() const { return {theta_.data(), hidden_, in_dim_}; }
  Eigen::Map<Eigen::VectorXd> b1() { return {theta_.data() + w1_size(), hidden_}; }
  Eigen::Map<const Eigen::VectorXd> b1() const { return {theta_.data() + w1_size(), hidden_}; }
  Eigen::Map<Eigen::VectorXd> w2() { return {theta_.data() + w1_size() + hidden_, hidden_}; }
  Eigen::Map<const Eigen::VectorXd> w2() const {
    return {theta_.data() + w1_size() + hidden_, hidden_};
  }
  double& b2() { return theta_(theta_.size() - 1); }
  double b2() const { return theta_(theta_.size() - 1); }

  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }
  const Eigen::VectorXd& adam_m() const { return adam_m_; }
  const Eigen::VectorXd& adam_v() const { return adam_v_; }
  long step_count() const { return step_; }

  // `mask` null means no dropout.
  double forward(const Eigen::VectorXd& x, const Eigen::VectorXd* mask, Cache* cache) const;
  // grad += d_out * d(out)/d(theta)
  void backward(const Eigen::VectorXd& x, const Cache& cache, double d_out,
                Eigen::VectorXd& grad) const;
  // Increments the step count, then applies bias-corrected Adam.
  void adam_step(const Eigen::VectorXd& grad, const AdamSettings& s);

 private:
  Eigen::Index w1_size() const { return static_cast<Eigen::Index>(hidden_) * in_dim_; }

  int in_dim_ = 0;
  int hidden_ = 0;
  Eigen::VectorXd theta_;
  Eigen::VectorXd adam_m_;
  Eigen::VectorXd adam_v_;
  long step_ = 0;
};

using Gradients = std::vector<Eigen::VectorXd>;

// Independent heads sharing only the input. Subclasses turn the raw head
// outputs into a per-sample loss.
class HeadNetwork {
 public:
  HeadNetwork(int n_heads, int in_dim, int hidden, double dropout);
  virtual ~HeadNetwork() = default;

  int in_dim() const { return in_dim_; }
  int hidden() const { return hidden_; }
  double dropout() const { return dropout_; }
  std::vector<MlpHead>& heads() { return heads_; }
  const std::vector<MlpHead>& heads() const { return heads_; }
  virtual std::vector<std::string> head_names() const = 0;
  virtual std::string kind() const = 0;

  // Each head draws its initial weights from its own child stream.
  void initialize(std::uint64_t seed);

  // Raw outputs of all heads. Train mode needs an rng for the dropout masks.
  Eigen::VectorXd raw_forward(const Eigen::VectorXd& x, Mode mode, data::Rng* rng,
                              std::vector<MlpHead::Cache>* caches = nullptr) const;

  // Loss at one sample; when `grads` is given, adds weight * gradient.
  double sample_loss(const Eigen::VectorXd& x, double y, Mode mode, data::Rng* rng,
                     Gradients* grads = nullptr, double weight = 1.0) const;

  Gradients zero_gradients() const;
  void adam_step(const Gradients& grads, const AdamSettings& s);

  // Loss from raw head outputs; fills d_raw when non-null.
  virtual double output_loss(const Eigen::VectorXd& raw, double y,
                             Eigen::VectorXd* d_raw) const = 0;

 protected:
  void check_input(const Eigen::VectorXd& x) const;

 private:
  int in_dim_;
  int hidden_;
  double dropout_;
  std::vector<MlpHead> heads_;
};

class GcpNetwork : public HeadNetwork {
 public:
  GcpNetwork(int in_dim, int hidden = 50, double dropout = 0.0,
             LossKind loss = LossKind::StudentNll);

  std::vector<std::string> head_names() const override { return {"m", "nu", "alpha", "beta"}; }
  std::string kind() const override { return "gcp"; }
  LossKind loss() const { return loss_; }

  GcpParams forward(const Eigen::VectorXd& x, Mode mode = Mode::Eval,
                    data::Rng* rng = nullptr) const;
  static GcpParams params_from_raw(const Eigen::VectorXd& raw);

  double output_loss(const Eigen::VectorXd& raw, double y, Eigen::VectorXd* d_raw) const override;

 private:
  LossKind loss_;
};

// Mean and log-variance heads trained on the Gaussian negative log-likelihood.
class GaussianNetwork : public HeadNetwork {
 public:
  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
  };

  GaussianNetwork(int in_dim, int hidden = 50, double dropout = 0.0);

  std::vector<std::string> head_names() const override { return {"mean", "log_variance"}; }
  std::string kind() const override { return "gaussian"; }

  Prediction predict(const Eigen::VectorXd& x) const;
  double output_loss(const Eigen::VectorXd& raw, double y, Eigen::VectorXd* d_raw) const override;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double dropout = 0.0;
  int epochs = 1000;
  int minibatch = 5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::uint64_t seed = 0;
  int hidden = 50;
  LossKind loss = LossKind::StudentNll;

  void validate() const;
  AdamSettings adam() const { return {learning_rate, adam_beta1, adam_beta2, 1e-8}; }
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainResult {
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

// Non-finite loss or parameters during training.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(int epoch, int batch, std::size_t sample, const std::string& what);
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }
  std::size_t sample() const { return sample_; }

 private:
  int epoch_;
  int batch_;
  std::size_t sample_;
};

// epochs x ceil(N / minibatch) Adam steps over minibatches of a per-epoch
// shuffle. Deterministic given cfg.seed.
TrainResult train(HeadNetwork& net, const data::Dataset& ds, const TrainConfig& cfg);

// Builds and initializes a network from the config (dropout, hidden, loss, seed).
GcpNetwork make_gcp_network(int in_dim, const TrainConfig& cfg);
GaussianNetwork make_gaussian_network(int in_dim, const TrainConfig& cfg);

struct Ensemble {
  std::vector<GcpNetwork> members;
  std::vector<std::uint64_t> seeds;
};

// Member configuration: the single-network settings with half the dropout.
TrainConfig ensemble_member_config(const TrainConfig& cfg);

// Trains `size` members concurrently (at most `jobs` at a time); member k
// uses seed derive_seed(cfg.seed, k) and `cfg` as given.
Ensemble train_ensemble(const data::Dataset& ds, const TrainConfig& cfg, int size = 5,
                        int jobs = 1, std::vector<TrainResult>* traces = nullptr);

// Gaussian-mixture combination of member estimates.
PrognosticEstimate mixture(std::span<const PrognosticEstimate> members);
PrognosticEstimate predict_ensemble(const Ensemble& ens, const Eigen::VectorXd& x);

// Self-describing JSON with all weights as decimal floats.
nlohmann::json network_to_json(const HeadNetwork& net);
GcpNetwork gcp_network_from_json(const nlohmann::json& j);
GaussianNetwork gaussian_network_from_json(const nlohmann::json& j);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace gcp::net
