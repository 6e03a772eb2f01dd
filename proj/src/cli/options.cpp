#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gcp/cli.hpp"

namespace gcp::cli {

nlohmann::json GlobalOptions::config_json() const {
  if (config.empty()) return nlohmann::json::object();
  auto j = net::read_json(config);
  if (!j.is_object()) throw ParseError(config + ": config must be a JSON object");
  return j;
}

std::filesystem::path GlobalOptions::out_dir() const {
  std::filesystem::path p(out);
  std::filesystem::create_directories(p);
  return p;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"synthetic-gcp", 1e-3, 0.0, 1000, 5},
      {"boston-gcp", 1e-4, 0.3, 700, 5},
      {"concrete-gcp", 1e-4, 0.1, 1000, 5},
      {"power-gcp", 5e-5, 0.0, 150, 10},
      {"yacht-gcp", 1e-3, 0.1, 1000, 5},
      {"kin8nm-gcp", 7e-4, 0.0, 250, 10},
  };
  return table;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw UsageError("unknown preset '" + name + "' (known: " + known + ")");
}

void apply_preset(const Preset& p, net::TrainConfig& cfg) {
  cfg.learning_rate = p.learning_rate;
  cfg.dropout = p.dropout;
  cfg.epochs = p.epochs;
  cfg.minibatch = p.minibatch;
}

void write_manifest(const GlobalOptions& g, const std::string& command,
                    const nlohmann::json& resolved) {
  nlohmann::json m;
  m["command"] = command;
  m["argv"] = g.argv;
  m["seed"] = g.seed;
  m["jobs"] = g.jobs;
  m["out"] = g.out;
  m["config_file"] = g.config;
  if (const char* q = std::getenv("GCP_QUAD_NODES")) m["GCP_QUAD_NODES"] = q;
  m["resolved"] = resolved;
  net::write_json(m, g.out_dir() / "manifest.json");
}

namespace {

double parse_number(const std::string& s, const std::string& flag) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw UsageError(flag + ": not a number: '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& part : split_on(text, ',')) out.push_back(parse_number(part, flag));
  return out;
}

GridSpec parse_grid(const std::string& text, const std::string& flag) {
  const auto parts = split_on(text, ':');
  if (parts.size() != 3) throw UsageError(flag + ": expected lo:hi:n, got '" + text + "'");
  GridSpec g{parse_number(parts[0], flag), parse_number(parts[1], flag), 0};
  const double n = parse_number(parts[2], flag);
  if (n < 1 || n != std::floor(n) || n > 1e7) throw UsageError(flag + ": n must be a positive integer");
  g.n = static_cast<int>(n);
  if (g.n > 1 && !(g.lo < g.hi)) throw UsageError(flag + ": need lo < hi");
  return g;
}

std::string feature_hash(const Eigen::VectorXd& x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(x.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(x.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

template <class Estimate>
Predictions collect(const data::Dataset& test_norm, const data::Dataset& test_raw,
                    Estimate&& estimate) {
  if (test_norm.size() != test_raw.size()) {
    throw PreconditionError("predictions: raw and normalized test sets differ in size");
  }
  if (!test_norm.normalization) throw PreconditionError("predictions: test set not normalized");
  const auto& norm = *test_norm.normalization;
  Predictions p;
  for (std::size_t i = 0; i < test_norm.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd x = test_norm.features.row(r).transpose();
    const PrognosticEstimate e = estimate(x);
    p.hashes.push_back(feature_hash(test_raw.features.row(r).transpose()));
    p.mean.push_back(data::denormalize_target(e.mean, norm));
    p.variance.push_back(data::denormalize_variance(e.variance, norm));
    p.student_variance.push_back(
        e.student_variance.is_infinite()
            ? StudentVariance::infinite()
            : StudentVariance::finite(data::denormalize_variance(e.student_variance.value(), norm)));
    p.alpha.push_back(e.alpha);
    p.target.push_back(test_raw.targets(r));
  }
  return p;
}

}  // namespace

Predictions predict_gcp(const net::GcpNetwork& model, const data::Dataset& test_norm,
                        const data::Dataset& test_raw) {
  return collect(test_norm, test_raw,
                 [&](const Eigen::VectorXd& x) { return prognostic(model.forward(x)); });
}

Predictions predict_ensemble(const net::Ensemble& model, const data::Dataset& test_norm,
                             const data::Dataset& test_raw) {
  return collect(test_norm, test_raw,
                 [&](const Eigen::VectorXd& x) { return net::predict_ensemble(model, x); });
}

Predictions predict_baseline(const net::GaussianNetwork& model, const data::Dataset& test_norm,
                             const data::Dataset& test_raw) {
  return collect(test_norm, test_raw, [&](const Eigen::VectorXd& x) {
    const auto g = model.predict(x);
    PrognosticEstimate e;
    e.mean = g.mean;
    e.variance = g.variance;
    e.student_variance = StudentVariance::finite(g.variance);
    e.alpha = std::numeric_limits<double>::quiet_NaN();
    return e;
  });
}

void write_predictions_csv(const Predictions& p, const std::filesystem::path& path,
                           bool gcp_columns) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  out << std::setprecision(17);
  out << (gcp_columns ? "x_hash,mean,v_p,v_st,alpha,target\n" : "x_hash,mean,variance,target\n");
  for (std::size_t i = 0; i < p.mean.size(); ++i) {
    out << p.hashes[i] << "," << p.mean[i] << "," << p.variance[i] << ",";
    if (gcp_columns) out << p.student_variance[i].to_string() << "," << p.alpha[i] << ",";
    out << p.target[i] << "\n";
  }
  if (!out) throw ParseError(path.string() + ": write failed");
}

void to_json(nlohmann::json& j, const DataOptions& d) {
  j = nlohmann::json{{"source", d.source},
                     {"test_n", d.test_n},
                     {"train_fraction", d.train_fraction},
                     {"contamination", d.contamination}};
  if (d.source == "synthetic") j["synthetic"] = d.synthetic;
}

PreparedData prepare_data(const DataOptions& opts, std::uint64_t seed) {
  PreparedData out;
  if (opts.source == "synthetic") {
    data::SyntheticSpec train_spec = opts.synthetic;
    train_spec.seed = data::derive_seed(seed, 1);
    out.train_raw = data::generate_synthetic(train_spec);
    if (opts.test_n < 2) throw UsageError("--test-n must be at least 2");
    data::SyntheticSpec test_spec = opts.synthetic;
    test_spec.n = opts.test_n;
    test_spec.outlier_prob = 0.0;
    test_spec.seed = data::derive_seed(seed, 3);
    out.test_raw = data::generate_synthetic(test_spec);
  } else {
    const data::Dataset all = data::load_csv(opts.source);
    auto [train, test] = data::split(all, opts.train_fraction, data::derive_seed(seed, 1));
    out.train_raw = std::move(train);
    out.test_raw = std::move(test);
  }
  if (opts.contamination > 0.0) {
    out.train_raw = data::contaminate(out.train_raw, opts.contamination, data::derive_seed(seed, 2));
  }
  out.train = data::normalize(out.train_raw);
  out.test = data::apply_normalization(out.test_raw, *out.train.normalization);
  return out;
}

}  // namespace gcp::cli
