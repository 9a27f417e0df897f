#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cropcast/data.hpp"
#include "cropcast/metrics.hpp"
#include "cropcast/ml/model.hpp"
#include "cropcast/pipeline.hpp"

namespace cropcast::cli {

/// Exit codes: 0 success, 1 runtime error, 2 usage error.
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

struct EvaluationReport {
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  std::size_t disease_train_rows = 0;
  std::size_t disease_test_rows = 0;
  std::size_t yield_train_rows = 0;
  std::size_t yield_test_rows = 0;
  std::vector<std::pair<ml::ModelKind, metrics::ClassificationReport>> classification;
  std::vector<std::pair<ml::ModelKind, metrics::RegressionReport>> regression;

  nlohmann::json to_json() const;
};

/// Trains every classifier on the disease table and every regressor on the
/// yield table over one stratified split, scoring on the held-out rows.
/// Hyperparameters come from `training`. Throws Error(invalid_data) when a
/// label cannot appear on both sides of the split.
EvaluationReport evaluate(const std::vector<data::DiseaseRecord>& diseases, const std::vector<data::YieldRecord>& yields,
                          const pipeline::TrainingConfig& training, double test_fraction = 0.2);

/// Model x (Accuracy, Precision, Recall, F1 Score), two decimals.
std::string classification_table(const EvaluationReport& report);
/// Model x (MSE, RMSE, R-Squared); R-Squared with three decimals.
std::string regression_table(const EvaluationReport& report);
/// Final Order / Crop / Production / Disease, "Not found" for no disease.
std::string recommendation_table(const pipeline::Recommendation& rec);
std::string weather_table(const pipeline::MonthlyWeather& weather);

/// Training settings gen-data writes into a synthetic bundle's manifest.
nlohmann::json synthetic_training(std::uint64_t seed);

/// Parses and runs one command. Tables go to `out` unless JSON is sent to
/// stdout with "--json -"; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cropcast::cli
