#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cropcast/data.hpp"
#include "cropcast/geo.hpp"
#include "cropcast/ml/model.hpp"
#include "cropcast/timeseries.hpp"

namespace cropcast::pipeline {

/// Seasonal orders used for each weather variable.
inline constexpr ts::SarimaxOrder kTemperatureOrder{1, 0, 0, 2, 1, 0, 12};
inline constexpr ts::SarimaxOrder kRainfallOrder{1, 0, 0, 0, 1, 1, 12};
inline constexpr ts::SarimaxOrder kHumidityOrder{1, 0, 1, 1, 1, 0, 12};

const ts::SarimaxOrder& order_for(data::WeatherVariable v) noexcept;

struct MonthWeather {
  int month = 1;
  double temperature = 0.0;
  double rainfall = 0.0;
  double humidity = 0.0;
  /// True when all three values come from recorded history.
  bool observed = false;

  bool operator==(const MonthWeather&) const = default;
};

struct MonthlyWeather {
  std::string station;
  int year = 0;
  std::vector<MonthWeather> months;  // January..December

  /// Throws Error(invalid_data) unless there are 12 ordered months with
  /// finite values, rainfall >= 0 and humidity in [0, 100].
  void validate() const;
  double mean_temperature() const;
  double total_rainfall() const;
  nlohmann::json to_json() const;

  bool operator==(const MonthlyWeather&) const = default;
};

struct ForecastOptions {
  /// Furthest target year allowed, counted from the last recorded year.
  int max_horizon_years = 5;
};

/// Twelve months of `year` for `station`. Months present in the history are
/// returned as recorded; the rest come from SARIMAX fits on the full
/// history, forecast through December. Rainfall is floored at 0 and humidity
/// clamped to [0, 100].
/// Errors: unknown_station, insufficient_history, year_out_of_range.
MonthlyWeather forecast_weather(std::string_view station, int year, const data::WeatherTable& temperature,
                                const data::WeatherTable& rainfall, const data::WeatherTable& humidity,
                                const ForecastOptions& options = {});

struct PrimaryOptions {
  /// Also require the crop's pH range to overlap the soil's.
  bool ph_filter = false;
};

/// Crops whose every stated nutrient requirement is met by the soil on the
/// VL..VH scale, alphabetical.
std::vector<std::string> primary_crops(const geo::SoilProfile& soil, const std::vector<data::CropRequirement>& requirements,
                                       const PrimaryOptions& options = {});

inline constexpr std::string_view kCropPrefix = "crop=";

/// Feature layouts: [temperature, humidity, latitude, longitude, crop=...]
/// and [temperature, rainfall, ph, crop=...], crops sorted.
ml::LabeledTable disease_table(const std::vector<data::DiseaseRecord>& records);
ml::LabeledTable yield_table(const std::vector<data::YieldRecord>& records);

/// Rows in the layouts above for an already trained model. Throws
/// unknown_crop when the model has no column for `crop`.
std::vector<double> disease_features(const ml::TrainedModel& model, std::string_view crop, double temperature,
                                     double humidity, const geo::GeoPoint& location);
std::vector<double> yield_features(const ml::TrainedModel& model, std::string_view crop, double temperature,
                                   double rainfall, double ph);

/// Distinct non-"None" labels over the 12 months, sorted, per crop.
std::vector<std::vector<std::string>> predict_diseases(const std::vector<std::string>& crops,
                                                       const MonthlyWeather& weather, const geo::ZoneRecord& zone,
                                                       const ml::TrainedModel& model);
/// Production per crop from annual mean temperature, total rainfall and the
/// soil pH midpoint, clamped at 0.
std::vector<double> predict_yields(const std::vector<std::string>& crops, const geo::SoilProfile& soil,
                                   const MonthlyWeather& weather, const ml::TrainedModel& model);

struct CropAssessment {
  std::string crop;
  double predicted_production = 0.0;
  std::vector<std::string> diseases;

  int disease_count() const noexcept { return static_cast<int>(diseases.size()); }
  bool operator==(const CropAssessment&) const = default;
};

/// Production descending, then crop name ascending.
void rank(std::vector<CropAssessment>& assessments);

struct Recommendation {
  geo::GeoPoint location{0.0, 0.0};
  int year = 0;
  geo::ZoneRecord zone;
  std::vector<std::string> primary_crops;
  std::vector<std::string> excluded_crops;
  MonthlyWeather weather;
  std::vector<CropAssessment> ranking;

  nlohmann::json to_json() const;
};

nlohmann::json zone_to_json(const geo::ZoneRecord& zone);

/// JSON form: {"seed", "disease_model", "yield_model", "hyperparams": {kind: {...}}}.
/// Kinds without an entry use their defaults.
struct TrainingConfig {
  std::uint64_t seed = 42;
  ml::ModelKind disease_kind = ml::ModelKind::SVC;
  ml::ModelKind yield_kind = ml::ModelKind::DTR;
  std::map<ml::ModelKind, ml::Hyperparams> hyperparams;

  ml::Hyperparams hyperparams_for(ml::ModelKind kind) const;

  static TrainingConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct PipelineConfig {
  bool ph_filter = false;
  int max_horizon_years = 5;

  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Everything a recommendation needs, immutable once built.
struct Bundle {
  data::Datasets datasets;
  ml::TrainedModel disease_model;
  ml::TrainedModel yield_model;
  PipelineConfig config;
};

ml::TrainedModel train_disease_model(const data::Datasets& datasets, const TrainingConfig& config);
ml::TrainedModel train_yield_model(const data::Datasets& datasets, const TrainingConfig& config);

Bundle build_bundle(data::Datasets datasets, const TrainingConfig& training, const PipelineConfig& config);

/// Loads the manifest's datasets and models. Model files that do not exist
/// are trained from the datasets with the manifest's training section.
Bundle load_bundle(const std::filesystem::path& manifest_file);

struct RecommendRequest {
  geo::GeoPoint location{0.0, 0.0};
  int year = 0;
  std::vector<std::string> exclude_crops;
};

using ForecastProvider = std::function<MonthlyWeather(const std::string& station, int year)>;

/// nearest zone -> primary crops (minus exclusions) -> weather -> diseases
/// -> yields -> ranking. Errors carry the failing stage. `forecast`
/// replaces the direct forecast_weather call when given.
Recommendation recommend(const Bundle& bundle, const RecommendRequest& request, const ForecastProvider& forecast = {});

/// forecast_weather over the bundle's weather tables and horizon setting.
MonthlyWeather forecast_for(const Bundle& bundle, const std::string& station, int year);

}  // namespace cropcast::pipeline
