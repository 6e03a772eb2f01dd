#pragma once

// Datasets: synthetic generation, CSV ingestion, contamination by outliers,
// normalization and train/test splitting.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "gcp/errors.hpp"

namespace gcp::data {

// SplitMix64 finalizer applied to seed + stream * golden gamma. Used to
// derive independent child seeds from (seed, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// mt19937_64 seeded with derive_seed(seed, 0). Normal draws use the polar
// Box-Muller method and shuffles are Fisher-Yates from the last element
// down, so the streams are reproducible from this description alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  // uniform on [0, 1) with 53 random bits
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  // uniform integer in [0, n); rejection sampling, no modulo bias
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // Child generator for stream `index`; depends only on the original seed.
  Rng split(std::uint64_t index) const { return Rng(derive_seed(seed_, index + 1)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

struct Normalization {
  // indices (into the raw feature columns) that were kept
  std::vector<int> kept_columns;
  std::vector<std::string> dropped_columns;
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  double target_mean = 0.0;
  double target_std = 1.0;
  int raw_dim = 0;
};

void to_json(nlohmann::json& j, const Normalization& n);
void from_json(const nlohmann::json& j, Normalization& n);

struct Dataset {
  Eigen::MatrixXd features;  // N x d
  Eigen::VectorXd targets;   // N
  std::optional<std::vector<bool>> outlier_mask;
  std::vector<std::string> feature_names;
  std::string target_name = "y";
  std::optional<Normalization> normalization;

  std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
  int dim() const { return static_cast<int>(features.cols()); }
  // Throws PreconditionError if shapes disagree or N == 0.
  void validate() const;
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct SyntheticSpec {
  int n = 400;
  double x_lo = -1.0;
  double x_hi = 1.0;
  double outlier_prob = 0.05;
  double outlier_lo = -4.0;
  double outlier_hi = 16.0;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

// Clean signal of the synthetic problem.
inline double synthetic_mean(double x) { return std::sin(3.0 * x); }
inline double synthetic_std(double x) {
  const double c = std::cos(x);
  return 0.5 * c * c * c * c;
}

Dataset generate_synthetic(const SyntheticSpec& spec);
// n evenly spaced points strictly inside (x_lo, x_hi) with targets equal to
// the clean mean.
Dataset synthetic_grid(int n, double x_lo = -1.0, double x_hi = 1.0);

// Replaces floor(fraction N) targets, chosen without replacement, by draws
// from N(mean, (10 std)^2) of the original targets.
Dataset contaminate(const Dataset& ds, double fraction, std::uint64_t seed);

// Zero mean / unit variance from the dataset's own statistics. Constant
// feature columns are dropped and listed in the result's normalization.
Dataset normalize(const Dataset& ds);
// Applies stored statistics (e.g. train statistics to a test set).
Dataset apply_normalization(const Dataset& ds, const Normalization& norm);
// Restores raw features (kept columns only) and targets.
Dataset denormalize(const Dataset& ds);
inline double denormalize_target(double t, const Normalization& n) {
  return n.target_mean + n.target_std * t;
}
inline double denormalize_variance(double v, const Normalization& n) {
  return v * n.target_std * n.target_std;
}

// Seeded shuffle, then the first round(train_fraction N) rows form the
// training set. Both parts are non-empty.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);
// Index form of split, exposed for tests.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed);

// Header row, comma separated, last column is the target. A trailing column
// named `is_outlier` (0/1) is read as the outlier mask. Blank lines are
// ignored.
Dataset load_csv(const std::filesystem::path& path);
// Writes the same format; adds `is_outlier` when a mask is present.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

double mean_of(const Eigen::VectorXd& v);
// population standard deviation
double std_of(const Eigen::VectorXd& v);

}  // namespace gcp::data
