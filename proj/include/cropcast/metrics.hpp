#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace cropcast::metrics {

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // rows whose true label is `label`
};

struct ClassificationReport {
  double accuracy = 0.0;
  // Support-weighted means of the per-class values.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassMetrics> per_class;  // sorted by label
  /// Labels whose precision or recall had a zero denominator and were set to 0.
  std::vector<std::string> zero_division;

  nlohmann::json to_json() const;
};

struct RegressionReport {
  double mse = 0.0;
  double rmse = 0.0;
  /// NaN when y_true is constant; see r_squared_defined.
  double r_squared = 0.0;
  bool r_squared_defined = true;

  nlohmann::json to_json() const;
};

/// Labels are the sorted union of both sequences. Throws on empty input or
/// length mismatch.
ClassificationReport classification_report(std::span<const std::string> y_true,
                                           std::span<const std::string> y_pred);

/// Throws on length mismatch or fewer than two values.
RegressionReport regression_report(std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace cropcast::metrics
