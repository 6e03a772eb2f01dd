#pragma once

// Command-line front end: solve-a, train, dynamics, bench.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcp/data.hpp"
#include "gcp/metrics.hpp"
#include "gcp/net.hpp"

namespace CLI {
class App;
}

namespace gcp::cli {

enum ExitCode : int {
  kSuccess = 0,
  kFailure = 1,
  kUsage = 2,
  kNumeric = 3,
  kPrecondition = 4,
};

// Bad flag values detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out = "gcp-run";
  std::string config;
  int jobs = 1;
  std::vector<std::string> argv;

  // the --config document, or an empty object
  nlohmann::json config_json() const;
  std::filesystem::path out_dir() const;
};

struct Preset {
  std::string name;
  double learning_rate;
  double dropout;
  int epochs;
  int minibatch;
};

const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);
void apply_preset(const Preset& p, net::TrainConfig& cfg);

// Writes manifest.json: command line, resolved configuration and seed.
void write_manifest(const GlobalOptions& g, const std::string& command,
                    const nlohmann::json& resolved);

std::vector<double> parse_list(const std::string& text, const std::string& flag);
// "lo:hi:n"
struct GridSpec {
  double lo;
  double hi;
  int n;
};
GridSpec parse_grid(const std::string& text, const std::string& flag);

// FNV-1a over the bytes of the feature values, as 16 hex digits.
std::string feature_hash(const Eigen::VectorXd& x);

// Predictions of one model on a test set, in the raw target scale.
struct Predictions {
  std::vector<std::string> hashes;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<StudentVariance> student_variance;
  std::vector<double> alpha;
  std::vector<double> target;
};

// `test_raw` supplies hashes and targets, `test_norm` the network inputs.
Predictions predict_gcp(const net::GcpNetwork& model, const data::Dataset& test_norm,
                        const data::Dataset& test_raw);
Predictions predict_ensemble(const net::Ensemble& model, const data::Dataset& test_norm,
                             const data::Dataset& test_raw);
Predictions predict_baseline(const net::GaussianNetwork& model, const data::Dataset& test_norm,
                             const data::Dataset& test_raw);

void write_predictions_csv(const Predictions& p, const std::filesystem::path& path,
                           bool gcp_columns);

// Training/test data ready for fitting.
struct PreparedData {
  data::Dataset train_raw;
  data::Dataset train;  // normalized
  data::Dataset test_raw;
  data::Dataset test;   // normalized with the training statistics
};

struct DataOptions {
  std::string source = "synthetic";  // or a CSV path
  data::SyntheticSpec synthetic;
  int test_n = 200;
  double train_fraction = 0.95;
  double contamination = 0.0;
};

void to_json(nlohmann::json& j, const DataOptions& d);

// Synthetic: train set from the spec, clean test set of test_n points.
// CSV: split, then training targets contaminated. Training statistics are
// applied to the test set.
PreparedData prepare_data(const DataOptions& opts, std::uint64_t seed);

// Training flags shared by train and bench. Unset members fall back to the
// config file, then the preset, then the defaults.
struct TrainFlags {
  std::optional<std::string> data;
  std::optional<std::string> preset;
  std::optional<double> learning_rate;
  std::optional<double> dropout;
  std::optional<int> epochs;
  std::optional<int> minibatch;
  std::optional<int> hidden;
  std::optional<std::string> loss;
  std::optional<double> train_fraction;
  std::optional<int> test_n;
  std::optional<int> synthetic_n;
  std::optional<double> outlier_prob;
};

struct TrainSetup {
  std::string preset;  // empty when none applied
  net::TrainConfig train;
  DataOptions data;
};

void to_json(nlohmann::json& j, const TrainSetup& s);

void add_train_flags(CLI::App& sub, TrainFlags& f);
TrainSetup resolve_train_setup(const TrainFlags& f, const nlohmann::json& config,
                               TrainSetup defaults = {});

struct Scores {
  double rmse = 0.0;
  double auc = 0.0;
};
Scores score(const Predictions& p, bool student_variance = false);

void add_solve_a(CLI::App& app, GlobalOptions& g);
void add_train(CLI::App& app, GlobalOptions& g);
void add_dynamics(CLI::App& app, GlobalOptions& g);
void add_bench(CLI::App& app, GlobalOptions& g);

// Parses and dispatches; maps exceptions to exit codes.
int run(int argc, char** argv);

}  // namespace gcp::cli
