#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gcp/data.hpp"

namespace gcp::data {

double mean_of(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw PreconditionError("mean of an empty vector");
  return v.mean();
}

double std_of(const Eigen::VectorXd& v) {
  const double mu = mean_of(v);
  return std::sqrt((v.array() - mu).square().mean());
}

void Dataset::validate() const {
  if (targets.size() == 0) throw PreconditionError("dataset is empty");
  if (features.rows() != targets.size()) {
    throw PreconditionError("dataset: feature rows and target length differ");
  }
  if (outlier_mask && outlier_mask->size() != size()) {
    throw PreconditionError("dataset: outlier mask length differs from N");
  }
  if (!feature_names.empty() && static_cast<int>(feature_names.size()) != dim()) {
    throw PreconditionError("dataset: feature name count differs from d");
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  if (outlier_mask) out.outlier_mask.emplace(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    if (rows[i] >= size()) throw PreconditionError("dataset subset: row out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
    out.targets(static_cast<Eigen::Index>(i)) = targets(r);
    if (outlier_mask) (*out.outlier_mask)[i] = (*outlier_mask)[rows[i]];
  }
  out.feature_names = feature_names;
  out.target_name = target_name;
  out.normalization = normalization;
  return out;
}

void to_json(nlohmann::json& j, const Normalization& n) {
  j = nlohmann::json{{"kept_columns", n.kept_columns},   {"dropped_columns", n.dropped_columns},
                     {"feature_mean", n.feature_mean},   {"feature_std", n.feature_std},
                     {"target_mean", n.target_mean},     {"target_std", n.target_std},
                     {"raw_dim", n.raw_dim}};
}

void from_json(const nlohmann::json& j, Normalization& n) {
  j.at("kept_columns").get_to(n.kept_columns);
  j.at("dropped_columns").get_to(n.dropped_columns);
  j.at("feature_mean").get_to(n.feature_mean);
  j.at("feature_std").get_to(n.feature_std);
  j.at("target_mean").get_to(n.target_mean);
  j.at("target_std").get_to(n.target_std);
  j.at("raw_dim").get_to(n.raw_dim);
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = nlohmann::json{{"n", s.n},
                     {"x_range", {s.x_lo, s.x_hi}},
                     {"outlier_prob", s.outlier_prob},
                     {"outlier_support", {s.outlier_lo, s.outlier_hi}},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  if (j.contains("n")) j.at("n").get_to(s.n);
  if (j.contains("x_range")) {
    s.x_lo = j.at("x_range").at(0).get<double>();
    s.x_hi = j.at("x_range").at(1).get<double>();
  }
  if (j.contains("outlier_prob")) j.at("outlier_prob").get_to(s.outlier_prob);
  if (j.contains("outlier_support")) {
    s.outlier_lo = j.at("outlier_support").at(0).get<double>();
    s.outlier_hi = j.at("outlier_support").at(1).get<double>();
  }
  if (j.contains("seed")) j.at("seed").get_to(s.seed);
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1) throw PreconditionError("synthetic: n must be at least 1");
  if (!(spec.outlier_prob >= 0.0 && spec.outlier_prob < 1.0)) {
    throw PreconditionError("synthetic: outlier_prob must lie in [0, 1)");
  }
  if (!(spec.x_lo < spec.x_hi) || !(spec.outlier_lo < spec.outlier_hi)) {
    throw PreconditionError("synthetic: ranges must satisfy lo < hi");
  }
  Rng rng(spec.seed);
  Dataset ds;
  ds.features.resize(spec.n, 1);
  ds.targets.resize(spec.n);
  ds.outlier_mask.emplace(static_cast<std::size_t>(spec.n), false);
  ds.feature_names = {"x"};
  for (int i = 0; i < spec.n; ++i) {
    const double x = rng.uniform(spec.x_lo, spec.x_hi);
    const bool outlier = rng.bernoulli(spec.outlier_prob);
    ds.features(i, 0) = x;
    ds.targets(i) = outlier ? rng.uniform(spec.outlier_lo, spec.outlier_hi)
                            : rng.normal(synthetic_mean(x), synthetic_std(x));
    (*ds.outlier_mask)[static_cast<std::size_t>(i)] = outlier;
  }
  return ds;
}

Dataset synthetic_grid(int n, double x_lo, double x_hi) {
  if (n < 1 || !(x_lo < x_hi)) throw PreconditionError("synthetic grid: bad size or range");
  Dataset ds;
  ds.features.resize(n, 1);
  ds.targets.resize(n);
  ds.outlier_mask.emplace(static_cast<std::size_t>(n), false);
  ds.feature_names = {"x"};
  for (int i = 0; i < n; ++i) {
    const double x = x_lo + (x_hi - x_lo) * (i + 0.5) / n;
    ds.features(i, 0) = x;
    ds.targets(i) = synthetic_mean(x);
  }
  return ds;
}

Dataset contaminate(const Dataset& ds, double fraction, std::uint64_t seed) {
  ds.validate();
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw PreconditionError("contaminate: fraction must lie in [0, 1)");
  }
  if (ds.normalization) {
    throw PreconditionError("contaminate: dataset is already normalized");
  }
  Dataset out = ds;
  if (!out.outlier_mask) out.outlier_mask.emplace(ds.size(), false);
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ds.size())));
  if (count == 0) return out;

  const double mu = mean_of(ds.targets);
  const double sd = std_of(ds.targets);
  Rng rng(seed);
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  Rng draws = rng.split(0);
  for (std::size_t i : idx) {
    out.targets(static_cast<Eigen::Index>(i)) = draws.normal(mu, 10.0 * sd);
    (*out.outlier_mask)[i] = true;
  }
  return out;
}

Dataset normalize(const Dataset& ds) {
  ds.validate();
  Normalization norm;
  norm.raw_dim = ds.dim();
  for (int c = 0; c < ds.dim(); ++c) {
    const Eigen::VectorXd col = ds.features.col(c);
    const double sd = std_of(col);
    const std::string name =
        ds.feature_names.empty() ? "x" + std::to_string(c) : ds.feature_names[static_cast<std::size_t>(c)];
    if (!(sd > 0.0)) {
      norm.dropped_columns.push_back(name);
      continue;
    }
    norm.kept_columns.push_back(c);
    norm.feature_mean.push_back(mean_of(col));
    norm.feature_std.push_back(sd);
  }
  norm.target_mean = mean_of(ds.targets);
  norm.target_std = std_of(ds.targets);
  if (!(norm.target_std > 0.0)) throw PreconditionError("normalize: target is constant");
  return apply_normalization(ds, norm);
}

Dataset apply_normalization(const Dataset& ds, const Normalization& norm) {
  ds.validate();
  if (ds.normalization) throw PreconditionError("apply_normalization: already normalized");
  if (ds.dim() != norm.raw_dim) {
    throw PreconditionError("apply_normalization: feature dimension differs from statistics");
  }
  Dataset out;
  const auto n = static_cast<Eigen::Index>(ds.size());
  const auto kept = static_cast<Eigen::Index>(norm.kept_columns.size());
  out.features.resize(n, kept);
  for (Eigen::Index k = 0; k < kept; ++k) {
    const auto c = norm.kept_columns[static_cast<std::size_t>(k)];
    out.features.col(k) = (ds.features.col(c).array() - norm.feature_mean[static_cast<std::size_t>(k)]) /
                          norm.feature_std[static_cast<std::size_t>(k)];
    if (!ds.feature_names.empty()) {
      out.feature_names.push_back(ds.feature_names[static_cast<std::size_t>(c)]);
    }
  }
  out.targets = (ds.targets.array() - norm.target_mean) / norm.target_std;
  out.outlier_mask = ds.outlier_mask;
  out.target_name = ds.target_name;
  out.normalization = norm;
  return out;
}

Dataset denormalize(const Dataset& ds) {
  if (!ds.normalization) throw PreconditionError("denormalize: dataset is not normalized");
  const Normalization& norm = *ds.normalization;
  Dataset out = ds;
  out.normalization.reset();
  for (Eigen::Index k = 0; k < ds.features.cols(); ++k) {
    const auto s = static_cast<std::size_t>(k);
    out.features.col(k) = ds.features.col(k).array() * norm.feature_std[s] + norm.feature_mean[s];
  }
  out.targets = ds.targets.array() * norm.target_std + norm.target_mean;
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed) {
  if (n < 2) throw PreconditionError("split: need at least two samples");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw PreconditionError("split: train fraction must lie in (0, 1)");
  }
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  ds.validate();
  auto [train, test] = split_indices(ds.size(), train_fraction, seed);
  return {ds.subset(train), ds.subset(test)};
}

}  // namespace gcp::data
