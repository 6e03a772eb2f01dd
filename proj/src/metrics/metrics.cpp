#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "gcp/metrics.hpp"

namespace gcp::metrics {

double rmse(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw PreconditionError("rmse: length mismatch");
  if (preds.empty()) throw PreconditionError("rmse: no samples");
  double ss = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double r = preds[i] - targets[i];
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(preds.size()));
}

double curve_auc(std::span<const double> rmse_at_n) {
  if (rmse_at_n.size() < 2) throw PreconditionError("auc: curve needs at least two points");
  double area = 0.0;
  for (std::size_t n = 0; n + 1 < rmse_at_n.size(); ++n) {
    area += 0.5 * (rmse_at_n[n] + rmse_at_n[n + 1]);
  }
  return area / static_cast<double>(rmse_at_n.size() - 1);
}

EvalCurve rejection_curve(std::span<const double> preds, std::span<const double> variances,
                          std::span<const double> targets) {
  const std::size_t n = preds.size();
  if (variances.size() != n || targets.size() != n) {
    throw PreconditionError("rejection_curve: length mismatch");
  }
  if (n < 2) throw PreconditionError("rejection_curve: need at least two samples");
  for (double v : variances) {
    if (std::isnan(v)) throw PreconditionError("rejection_curve: NaN variance");
  }

  EvalCurve curve;
  curve.ordering.resize(n);
  std::iota(curve.ordering.begin(), curve.ordering.end(), 0);
  std::stable_sort(curve.ordering.begin(), curve.ordering.end(),
                   [&](std::size_t a, std::size_t b) { return variances[a] > variances[b]; });

  // suffix sums of squared residuals in rejection order
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t i = curve.ordering[k];
    const double r = preds[i] - targets[i];
    tail[k] = tail[k + 1] + r * r;
  }
  curve.rmse_at_n.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    curve.rmse_at_n[k] = std::sqrt(tail[k] / static_cast<double>(n - k));
  }
  curve.auc = curve_auc(curve.rmse_at_n);
  return curve;
}

EvalCurve rejection_curve(std::span<const double> preds,
                          std::span<const StudentVariance> variances,
                          std::span<const double> targets) {
  std::vector<double> keys(variances.size());
  std::transform(variances.begin(), variances.end(), keys.begin(),
                 [](const StudentVariance& v) { return v.sort_key(); });
  return rejection_curve(preds, keys, targets);
}

void write_curve_csv(const EvalCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  out << std::setprecision(17) << "n,rmse\n";
  for (std::size_t k = 0; k < curve.rmse_at_n.size(); ++k) {
    out << k << "," << curve.rmse_at_n[k] << "\n";
  }
}

nlohmann::json summary_json(const EvalCurve& curve) {
  return {{"rmse", curve.rmse_at_n.empty() ? 0.0 : curve.rmse_at_n.front()},
          {"auc", curve.auc},
          {"n_samples", curve.rmse_at_n.size()}};
}

}  // namespace gcp::metrics
