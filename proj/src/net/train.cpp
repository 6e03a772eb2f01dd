#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "gcp/net.hpp"

namespace gcp::net {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw PreconditionError("train: learning rate must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw PreconditionError("train: dropout must lie in [0, 1)");
  if (epochs < 1) throw PreconditionError("train: epochs must be at least 1");
  if (minibatch < 1) throw PreconditionError("train: minibatch must be at least 1");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw PreconditionError("train: Adam betas must lie in (0, 1)");
  }
  if (hidden < 1) throw PreconditionError("train: hidden width must be at least 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate}, {"dropout", c.dropout},
                     {"epochs", c.epochs},               {"minibatch", c.minibatch},
                     {"adam_beta1", c.adam_beta1},       {"adam_beta2", c.adam_beta2},
                     {"seed", c.seed},                   {"hidden", c.hidden},
                     {"loss", to_string(c.loss)}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
  if (j.contains("dropout")) j.at("dropout").get_to(c.dropout);
  if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  if (j.contains("minibatch")) j.at("minibatch").get_to(c.minibatch);
  if (j.contains("adam_beta1")) j.at("adam_beta1").get_to(c.adam_beta1);
  if (j.contains("adam_beta2")) j.at("adam_beta2").get_to(c.adam_beta2);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("hidden")) j.at("hidden").get_to(c.hidden);
  if (j.contains("loss")) c.loss = loss_kind_from_string(j.at("loss").get<std::string>());
}

TrainingDiverged::TrainingDiverged(int epoch, int batch, std::size_t sample,
                                   const std::string& what)
    : NumericError([&] {
        std::ostringstream os;
        os << "training diverged at epoch " << epoch << ", batch " << batch << ", sample "
           << sample << ": " << what;
        return os.str();
      }()),
      epoch_(epoch), batch_(batch), sample_(sample) {}

TrainResult train(HeadNetwork& net, const data::Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.dim() != net.in_dim()) {
    throw PreconditionError("train: dataset dimension differs from network input");
  }
  const data::Rng root(cfg.seed);
  data::Rng shuffle_rng = root.split(100);
  data::Rng dropout_rng = root.split(101);
  const AdamSettings adam = cfg.adam();

  const std::size_t n = ds.size();
  const auto batch_size = static_cast<std::size_t>(cfg.minibatch);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Eigen::VectorXd> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = ds.features.row(static_cast<Eigen::Index>(i)).transpose();

  TrainResult result;
  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  Gradients grads = net.zero_gradients();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sum = 0.0;
    int batch = 0;
    for (std::size_t start = 0; start < n; start += batch_size, ++batch) {
      const std::size_t end = std::min(n, start + batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      for (auto& g : grads) g.setZero();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        double loss = 0.0;
        try {
          loss = net.sample_loss(rows[i], ds.targets(static_cast<Eigen::Index>(i)), Mode::Train,
                                 &dropout_rng, &grads, weight);
        } catch (const DomainError& e) {
          throw TrainingDiverged(epoch, batch, i, e.what());
        }
        if (!std::isfinite(loss)) throw TrainingDiverged(epoch, batch, i, "non-finite loss");
        epoch_sum += loss;
      }
      for (const auto& g : grads) {
        if (!g.allFinite()) throw TrainingDiverged(epoch, batch, order[start], "non-finite gradient");
      }
      net.adam_step(grads, adam);
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
  }
  return result;
}

GcpNetwork make_gcp_network(int in_dim, const TrainConfig& cfg) {
  GcpNetwork net(in_dim, cfg.hidden, cfg.dropout, cfg.loss);
  net.initialize(cfg.seed);
  return net;
}

GaussianNetwork make_gaussian_network(int in_dim, const TrainConfig& cfg) {
  GaussianNetwork net(in_dim, cfg.hidden, cfg.dropout);
  net.initialize(cfg.seed);
  return net;
}

TrainConfig ensemble_member_config(const TrainConfig& cfg) {
  TrainConfig out = cfg;
  out.dropout = 0.5 * cfg.dropout;
  return out;
}

Ensemble train_ensemble(const data::Dataset& ds, const TrainConfig& cfg, int size, int jobs,
                        std::vector<TrainResult>* traces) {
  if (size < 1) throw PreconditionError("ensemble: need at least one member");
  cfg.validate();
  const auto count = static_cast<std::size_t>(size);
  Ensemble ens;
  std::vector<TrainResult> results(count);
  for (std::size_t k = 0; k < count; ++k) {
    ens.seeds.push_back(data::derive_seed(cfg.seed, k));
    TrainConfig member = cfg;
    member.seed = ens.seeds.back();
    ens.members.push_back(make_gcp_network(ds.dim(), member));
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        TrainConfig member = cfg;
        member.seed = ens.seeds[k];
        results[k] = train(ens.members[k], ds, member);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, size);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  if (traces != nullptr) *traces = std::move(results);
  return ens;
}

PrognosticEstimate mixture(std::span<const PrognosticEstimate> members) {
  if (members.empty()) throw PreconditionError("ensemble: no members");
  const double k = static_cast<double>(members.size());
  double mean = 0.0;
  double second = 0.0;
  double student_second = 0.0;
  double alpha = 0.0;
  bool student_infinite = false;
  for (const auto& e : members) {
    mean += e.mean / k;
    second += (e.variance + e.mean * e.mean) / k;
    alpha += e.alpha / k;
    if (e.student_variance.is_infinite()) {
      student_infinite = true;
    } else {
      student_second += (e.student_variance.value() + e.mean * e.mean) / k;
    }
  }
  PrognosticEstimate out;
  out.mean = mean;
  out.variance = std::max(second - mean * mean, 0.0);
  out.student_variance = student_infinite
                             ? StudentVariance::infinite()
                             : StudentVariance::finite(std::max(student_second - mean * mean, 0.0));
  out.alpha = alpha;
  return out;
}

PrognosticEstimate predict_ensemble(const Ensemble& ens, const Eigen::VectorXd& x) {
  if (ens.members.empty()) throw PreconditionError("ensemble: no members");
  std::vector<PrognosticEstimate> parts;
  parts.reserve(ens.members.size());
  for (const auto& m : ens.members) parts.push_back(prognostic(m.forward(x)));
  return mixture(parts);
}

}  // namespace gcp::net
