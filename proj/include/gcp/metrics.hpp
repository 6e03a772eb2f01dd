#pragma once

// RMSE and the RMSE(n) rejection curve with its normalized area.

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "gcp/core.hpp"

namespace gcp::metrics {

double rmse(std::span<const double> preds, std::span<const double> targets);

struct EvalCurve {
  // rmse_at_n[n] is the RMSE after removing the n samples with the largest
  // predicted variance; n = 0 .. N-1.
  std::vector<double> rmse_at_n;
  double auc = 0.0;
  // Sample indices in rejection order (largest variance first, equal
  // variances by ascending index).
  std::vector<std::size_t> ordering;
};

// `variances` may contain +inf (an infinite Student variance); NaN is
// rejected. Requires N >= 2.
EvalCurve rejection_curve(std::span<const double> preds, std::span<const double> variances,
                          std::span<const double> targets);
EvalCurve rejection_curve(std::span<const double> preds,
                          std::span<const StudentVariance> variances,
                          std::span<const double> targets);

// Trapezoid sum of the curve divided by N - 1.
double curve_auc(std::span<const double> rmse_at_n);

void write_curve_csv(const EvalCurve& curve, const std::filesystem::path& path);
nlohmann::json summary_json(const EvalCurve& curve);

}  // namespace gcp::metrics
