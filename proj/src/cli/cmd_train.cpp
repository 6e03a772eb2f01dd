#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "gcp/cli.hpp"

namespace gcp::cli {

void to_json(nlohmann::json& j, const TrainSetup& s) {
  j = nlohmann::json{{"preset", s.preset}, {"train", s.train}, {"data", s.data}};
}

void add_train_flags(CLI::App& sub, TrainFlags& f) {
  sub.add_option("--data", f.data, "CSV path, or 'synthetic'");
  sub.add_option("--preset", f.preset, "Hyperparameter preset, e.g. boston-gcp");
  sub.add_option("--lr", f.learning_rate, "Adam learning rate");
  sub.add_option("--dropout", f.dropout, "Dropout probability");
  sub.add_option("--epochs", f.epochs, "Training epochs");
  sub.add_option("--minibatch", f.minibatch, "Minibatch size");
  sub.add_option("--hidden", f.hidden, "Hidden units per head");
  sub.add_option("--loss", f.loss, "student_nll or kl");
  sub.add_option("--train-fraction", f.train_fraction, "Train share of a CSV dataset");
  sub.add_option("--test-n", f.test_n, "Size of the synthetic test set");
  sub.add_option("--synthetic-n", f.synthetic_n, "Size of the synthetic training set");
  sub.add_option("--outlier-prob", f.outlier_prob, "Synthetic outlier probability");
}

TrainSetup resolve_train_setup(const TrainFlags& f, const nlohmann::json& config,
                               TrainSetup s) {
  std::string preset = s.preset;
  if (config.contains("preset")) preset = config.at("preset").get<std::string>();
  if (f.preset) preset = *f.preset;
  if (!preset.empty()) apply_preset(find_preset(preset), s.train);
  s.preset = preset;

  try {
    if (config.contains("train")) net::from_json(config.at("train"), s.train);
    if (config.contains("synthetic")) data::from_json(config.at("synthetic"), s.data.synthetic);
    if (config.contains("data")) {
      const auto& d = config.at("data");
      if (d.contains("source")) d.at("source").get_to(s.data.source);
      if (d.contains("test_n")) d.at("test_n").get_to(s.data.test_n);
      if (d.contains("train_fraction")) d.at("train_fraction").get_to(s.data.train_fraction);
      if (d.contains("contamination")) d.at("contamination").get_to(s.data.contamination);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  if (f.data) s.data.source = *f.data;
  if (f.learning_rate) s.train.learning_rate = *f.learning_rate;
  if (f.dropout) s.train.dropout = *f.dropout;
  if (f.epochs) s.train.epochs = *f.epochs;
  if (f.minibatch) s.train.minibatch = *f.minibatch;
  if (f.hidden) s.train.hidden = *f.hidden;
  if (f.loss) {
    try {
      s.train.loss = net::loss_kind_from_string(*f.loss);
    } catch (const PreconditionError& e) {
      throw UsageError(e.what());
    }
  }
  if (f.train_fraction) s.data.train_fraction = *f.train_fraction;
  if (f.test_n) s.data.test_n = *f.test_n;
  if (f.synthetic_n) s.data.synthetic.n = *f.synthetic_n;
  if (f.outlier_prob) s.data.synthetic.outlier_prob = *f.outlier_prob;

  try {
    s.train.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (!(s.data.train_fraction > 0.0 && s.data.train_fraction < 1.0)) {
    throw UsageError("--train-fraction must lie in (0, 1)");
  }
  if (!(s.data.contamination >= 0.0 && s.data.contamination < 1.0)) {
    throw UsageError("contamination fraction must lie in [0, 1)");
  }
  return s;
}

Scores score(const Predictions& p, bool student_variance) {
  const auto curve = student_variance
                         ? metrics::rejection_curve(p.mean, p.student_variance, p.target)
                         : metrics::rejection_curve(p.mean, p.variance, p.target);
  return {metrics::rmse(p.mean, p.target), curve.auc};
}

namespace {

struct TrainOptions {
  TrainFlags flags;
  bool ensemble = false;
  int members = 5;
  bool baseline = false;
  double contaminate = 0.0;
};

void run_train(const GlobalOptions& g, const TrainOptions& o, bool contaminate_set) {
  if (o.ensemble && o.baseline) throw UsageError("--ensemble and --baseline are exclusive");
  if (o.members < 1) throw UsageError("--members must be at least 1");
  TrainSetup setup = resolve_train_setup(o.flags, g.config_json());
  if (contaminate_set) setup.data.contamination = o.contaminate;
  if (!(setup.data.contamination >= 0.0 && setup.data.contamination < 1.0)) {
    throw UsageError("--contaminate must lie in [0, 1)");
  }
  setup.train.seed = data::derive_seed(g.seed, 4);

  const PreparedData prepared = prepare_data(setup.data, g.seed);
  const auto dir = g.out_dir();
  const int in_dim = prepared.train.dim();

  nlohmann::json checkpoint;
  nlohmann::json metrics_json;
  Predictions preds;
  net::TrainConfig used = setup.train;
  std::string model;

  if (o.baseline) {
    model = "baseline";
    auto net = net::make_gaussian_network(in_dim, used);
    const auto trace = net::train(net, prepared.train, used);
    preds = predict_baseline(net, prepared.test, prepared.test_raw);
    checkpoint["network"] = net::network_to_json(net);
    metrics_json["final_train_loss"] = trace.epoch_loss.back();
  } else if (o.ensemble) {
    model = "ensemble";
    used = net::ensemble_member_config(setup.train);
    std::vector<net::TrainResult> traces;
    const auto ens = net::train_ensemble(prepared.train, used, o.members, g.jobs, &traces);
    preds = predict_ensemble(ens, prepared.test, prepared.test_raw);
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : ens.members) members.push_back(net::network_to_json(m));
    checkpoint["members"] = members;
    checkpoint["member_seeds"] = ens.seeds;
    std::vector<double> final_losses;
    for (const auto& t : traces) final_losses.push_back(t.epoch_loss.back());
    metrics_json["final_train_loss"] = final_losses;
  } else {
    model = "gcp";
    auto net = net::make_gcp_network(in_dim, used);
    const auto trace = net::train(net, prepared.train, used);
    preds = predict_gcp(net, prepared.test, prepared.test_raw);
    checkpoint["network"] = net::network_to_json(net);
    metrics_json["final_train_loss"] = trace.epoch_loss.back();
  }
  checkpoint["format"] = "gcp-checkpoint";
  checkpoint["model"] = model;
  checkpoint["normalization"] = *prepared.train.normalization;
  checkpoint["train_config"] = used;

  const auto curve = metrics::rejection_curve(preds.mean, preds.variance, preds.target);
  metrics_json["model"] = model;
  metrics_json["n_train"] = prepared.train.size();
  metrics_json["n_test"] = prepared.test.size();
  metrics_json["rmse"] = metrics::rmse(preds.mean, preds.target);
  metrics_json["auc"] = curve.auc;
  if (!o.baseline) {
    metrics_json["auc_student_variance"] = score(preds, true).auc;
    metrics_json["median_alpha"] = [&] {
      auto a = preds.alpha;
      std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2), a.end());
      return a[a.size() / 2];
    }();
  }
  const auto& dropped = prepared.train.normalization->dropped_columns;
  if (!dropped.empty()) {
    std::cerr << "warning: dropped constant feature columns:";
    for (const auto& c : dropped) std::cerr << " " << c;
    std::cerr << "\n";
    metrics_json["dropped_columns"] = dropped;
  }

  net::write_json(checkpoint, dir / "checkpoint.json");
  net::write_json(metrics_json, dir / "metrics.json");
  metrics::write_curve_csv(curve, dir / "rejection_curve.csv");
  write_predictions_csv(preds, dir / "predictions.csv", !o.baseline);

  nlohmann::json resolved = setup;
  resolved["train"] = used;
  resolved["model"] = model;
  resolved["members"] = o.ensemble ? o.members : 1;
  write_manifest(g, "train", resolved);

  std::cout << model << ": rmse " << metrics_json["rmse"].get<double>() << ", auc "
            << curve.auc << " on " << prepared.test.size() << " test points -> "
            << dir.string() << "\n";
}

}  // namespace

void add_train(CLI::App& app, GlobalOptions& g) {
  auto opts = std::make_shared<TrainOptions>();
  auto* sub = app.add_subcommand("train", "Train a GCP network, ensemble or Gaussian baseline");
  add_train_flags(*sub, opts->flags);
  sub->add_flag("--ensemble", opts->ensemble, "Train an ensemble of GCP networks");
  sub->add_option("--members", opts->members, "Ensemble size")->capture_default_str();
  sub->add_flag("--baseline", opts->baseline, "Train the Gaussian-likelihood baseline");
  auto* contaminate =
      sub->add_option("--contaminate", opts->contaminate, "Fraction of training targets replaced");
  sub->callback([&g, opts, contaminate] { run_train(g, *opts, contaminate->count() > 0); });
}

}  // namespace gcp::cli
