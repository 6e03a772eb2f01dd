#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "gcp/cli.hpp"

namespace gcp::cli {
namespace {

struct BenchOptions {
  TrainFlags flags;
  std::string fractions = "0,0.05,0.1,0.15,0.2";
  int repeats = 3;
  bool ensemble = false;
  int members = 5;
};

struct BenchRecord {
  double fraction = 0.0;
  int repeat = 0;
  std::string method;
  Scores scores;
};

// One repeat: every fraction, every method. Seeds depend on the repeat only,
// so the fractions of one repeat share their split and initial weights.
std::vector<BenchRecord> run_repeat(const TrainSetup& setup, const std::vector<double>& fractions,
                                    int repeat, std::uint64_t root_seed, const BenchOptions& o) {
  const std::uint64_t seed = data::derive_seed(root_seed, static_cast<std::uint64_t>(repeat));
  std::vector<BenchRecord> out;
  for (double frac : fractions) {
    DataOptions d = setup.data;
    d.contamination = frac;
    const PreparedData prepared = prepare_data(d, seed);
    const int in_dim = prepared.train.dim();

    net::TrainConfig cfg = setup.train;
    cfg.seed = data::derive_seed(seed, 4);
    auto gcp_net = net::make_gcp_network(in_dim, cfg);
    net::train(gcp_net, prepared.train, cfg);
    const auto gp = predict_gcp(gcp_net, prepared.test, prepared.test_raw);
    out.push_back({frac, repeat, "gcp", score(gp, false)});
    out.push_back({frac, repeat, "gcp_student_variance", score(gp, true)});

    net::TrainConfig base_cfg = setup.train;
    base_cfg.seed = data::derive_seed(seed, 5);
    auto base = net::make_gaussian_network(in_dim, base_cfg);
    net::train(base, prepared.train, base_cfg);
    out.push_back({frac, repeat, "baseline",
                   score(predict_baseline(base, prepared.test, prepared.test_raw))});

    if (o.ensemble) {
      net::TrainConfig ens_cfg = net::ensemble_member_config(setup.train);
      ens_cfg.seed = data::derive_seed(seed, 6);
      const auto ens = net::train_ensemble(prepared.train, ens_cfg, o.members, 1);
      out.push_back({frac, repeat, "ensemble",
                     score(predict_ensemble(ens, prepared.test, prepared.test_raw))});
    }
  }
  return out;
}

std::pair<double, double> mean_stderr(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

void run_bench(const GlobalOptions& g, const BenchOptions& o) {
  if (o.repeats < 1) throw UsageError("--repeats must be at least 1");
  if (o.members < 1) throw UsageError("--members must be at least 1");
  const auto fractions = parse_list(o.fractions, "--fractions");
  for (double f : fractions) {
    if (!(f >= 0.0 && f < 1.0)) throw UsageError("--fractions values must lie in [0, 1)");
  }
  // Synthetic bench data is clean before contamination.
  TrainSetup defaults;
  defaults.data.synthetic.outlier_prob = 0.0;
  const TrainSetup setup = resolve_train_setup(o.flags, g.config_json(), defaults);
  const auto dir = g.out_dir();

  std::vector<std::vector<BenchRecord>> results(static_cast<std::size_t>(o.repeats));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (int r = next++; r < o.repeats; r = next++) {
      try {
        results[static_cast<std::size_t>(r)] = run_repeat(setup, fractions, r, g.seed, o);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(g.jobs, 1, o.repeats);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::ofstream longf(dir / "bench_long.csv");
  if (!longf) throw ParseError((dir / "bench_long.csv").string() + ": cannot open for writing");
  longf << std::setprecision(17) << "fraction,repeat,method,rmse,auc\n";
  std::map<std::pair<double, std::string>, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::vector<std::string> method_order;
  for (const auto& rep : results) {
    for (const auto& rec : rep) {
      longf << rec.fraction << "," << rec.repeat << "," << rec.method << "," << rec.scores.rmse
            << "," << rec.scores.auc << "\n";
      auto& gr = groups[{rec.fraction, rec.method}];
      gr.first.push_back(rec.scores.rmse);
      gr.second.push_back(rec.scores.auc);
      if (std::find(method_order.begin(), method_order.end(), rec.method) == method_order.end()) {
        method_order.push_back(rec.method);
      }
    }
  }

  std::ofstream sum(dir / "bench_summary.csv");
  if (!sum) throw ParseError((dir / "bench_summary.csv").string() + ": cannot open for writing");
  sum << std::setprecision(17)
      << "fraction,method,repeats,rmse_mean,rmse_stderr,auc_mean,auc_stderr\n";
  std::cout << std::left << std::setw(10) << "fraction" << std::setw(24) << "method"
            << std::setw(24) << "rmse" << "auc\n";
  for (double f : fractions) {
    for (const auto& m : method_order) {
      const auto& gr = groups.at({f, m});
      const auto [rm, rs] = mean_stderr(gr.first);
      const auto [am, as] = mean_stderr(gr.second);
      sum << f << "," << m << "," << gr.first.size() << "," << rm << "," << rs << "," << am << ","
          << as << "\n";
      std::ostringstream r, a;
      r << std::setprecision(4) << rm << " +- " << rs;
      a << std::setprecision(4) << am << " +- " << as;
      std::cout << std::setw(10) << f << std::setw(24) << m << std::setw(24) << r.str() << a.str()
                << "\n";
    }
  }

  nlohmann::json resolved = setup;
  resolved["fractions"] = fractions;
  resolved["repeats"] = o.repeats;
  resolved["ensemble"] = o.ensemble;
  resolved["members"] = o.members;
  resolved["ensemble_train"] = net::ensemble_member_config(setup.train);
  write_manifest(g, "bench", resolved);
}

}  // namespace

void add_bench(CLI::App& app, GlobalOptions& g) {
  auto opts = std::make_shared<BenchOptions>();
  auto* sub = app.add_subcommand("bench", "Contamination benchmark: GCP against the baseline");
  add_train_flags(*sub, opts->flags);
  sub->add_option("--fractions", opts->fractions, "Comma-separated contamination fractions")
      ->capture_default_str();
  sub->add_option("--repeats", opts->repeats, "Repeats per fraction")->capture_default_str();
  sub->add_flag("--ensemble", opts->ensemble, "Also train GCP ensembles");
  sub->add_option("--members", opts->members, "Ensemble size")->capture_default_str();
  sub->callback([&g, opts] { run_bench(g, *opts); });
}

}  // namespace gcp::cli
