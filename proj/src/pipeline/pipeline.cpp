#include <algorithm>
#include <set>
#include <tuple>

#include "cropcast/error.hpp"
#include "cropcast/pipeline.hpp"

namespace cropcast::pipeline {

namespace {

const std::vector<std::string> kDiseaseColumns = {"temperature", "humidity", "latitude", "longitude"};
const std::vector<std::string> kYieldColumns = {"temperature", "rainfall", "ph"};

bool meets(NutrientLevel soil, NutrientLevel required) { return encode_nutrient(soil) >= encode_nutrient(required); }

template <class Record>
std::vector<std::string> crop_vocabulary(const std::vector<Record>& records) {
  std::set<std::string> crops;
  for (const auto& r : records) crops.insert(r.crop);
  return {crops.begin(), crops.end()};
}

std::vector<std::string> with_crop_columns(std::vector<std::string> names, const std::vector<std::string>& crops) {
  for (const auto& c : crops) names.push_back(std::string(kCropPrefix) + c);
  return names;
}

// Builds a feature row for a model whose names are `fixed` followed by
// crop one-hot columns.
std::vector<double> feature_row(const ml::TrainedModel& model, const std::vector<std::string>& fixed,
                                std::vector<double> values, std::string_view crop) {
  const auto& names = model.feature_names();
  if (names.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), names.begin())) {
    throw Error(Errc::invalid_argument, "model features do not match the expected layout");
  }
  values.resize(names.size(), 0.0);
  const auto column = std::string(kCropPrefix) + std::string(crop);
  const auto it = std::find(names.begin() + static_cast<std::ptrdiff_t>(fixed.size()), names.end(), column);
  if (it == names.end()) throw Error(Errc::unknown_crop, "crop '" + std::string(crop) + "' is unknown to the model");
  values[static_cast<std::size_t>(it - names.begin())] = 1.0;
  return values;
}

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

}  // namespace

std::vector<std::string> primary_crops(const geo::SoilProfile& soil, const std::vector<data::CropRequirement>& requirements,
                                       const PrimaryOptions& options) {
  std::vector<std::string> out;
  for (const auto& r : requirements) {
    if (!meets(soil.phosphorus, r.phosphorus) || !meets(soil.potassium, r.potassium)) continue;
    if (r.nitrogen) {
      if (!soil.nitrogen || !meets(*soil.nitrogen, *r.nitrogen)) continue;
    }
    if (options.ph_filter && r.ph_low && r.ph_high) {
      if (*r.ph_high < soil.ph_low || *r.ph_low > soil.ph_high) continue;
    }
    out.push_back(r.crop);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ml::LabeledTable disease_table(const std::vector<data::DiseaseRecord>& records) {
  auto sorted = records;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::forward_as_tuple(a.crop, a.temperature, a.humidity, a.location.lat(), a.location.lon(), a.disease, a.region) <
           std::forward_as_tuple(b.crop, b.temperature, b.humidity, b.location.lat(), b.location.lon(), b.disease, b.region);
  });
  const auto crops = crop_vocabulary(sorted);
  const auto names = with_crop_columns(kDiseaseColumns, crops);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sorted.size()), static_cast<Eigen::Index>(names.size()));
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& r = sorted[i];
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = r.temperature;
    x(row, 1) = r.humidity;
    x(row, 2) = r.location.lat();
    x(row, 3) = r.location.lon();
    const auto c = std::lower_bound(crops.begin(), crops.end(), r.crop) - crops.begin();
    x(row, static_cast<Eigen::Index>(kDiseaseColumns.size()) + c) = 1.0;
    labels.push_back(r.disease);
  }
  return ml::LabeledTable::classification(names, std::move(x), labels);
}

ml::LabeledTable yield_table(const std::vector<data::YieldRecord>& records) {
  auto sorted = records;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.crop, a.temperature, a.rainfall, a.ph, a.production) <
           std::tie(b.crop, b.temperature, b.rainfall, b.ph, b.production);
  });
  const auto crops = crop_vocabulary(sorted);
  const auto names = with_crop_columns(kYieldColumns, crops);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sorted.size()), static_cast<Eigen::Index>(names.size()));
  std::vector<double> y;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& r = sorted[i];
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = r.temperature;
    x(row, 1) = r.rainfall;
    x(row, 2) = r.ph;
    const auto c = std::lower_bound(crops.begin(), crops.end(), r.crop) - crops.begin();
    x(row, static_cast<Eigen::Index>(kYieldColumns.size()) + c) = 1.0;
    y.push_back(r.production);
  }
  return ml::LabeledTable::regression(names, std::move(x), std::move(y));
}

std::vector<double> disease_features(const ml::TrainedModel& model, std::string_view crop, double temperature,
                                     double humidity, const geo::GeoPoint& location) {
  return feature_row(model, kDiseaseColumns, {temperature, humidity, location.lat(), location.lon()}, crop);
}

std::vector<double> yield_features(const ml::TrainedModel& model, std::string_view crop, double temperature,
                                   double rainfall, double ph) {
  return feature_row(model, kYieldColumns, {temperature, rainfall, ph}, crop);
}

std::vector<std::vector<std::string>> predict_diseases(const std::vector<std::string>& crops,
                                                       const MonthlyWeather& weather, const geo::ZoneRecord& zone,
                                                       const ml::TrainedModel& model) {
  if (!ml::is_classifier(model.kind())) throw Error(Errc::invalid_argument, "disease model must be a classifier");
  weather.validate();
  std::vector<std::vector<std::string>> out;
  for (const auto& crop : crops) {
    std::set<std::string> found;
    for (const auto& m : weather.months) {
      const auto& label = model.predict_label(disease_features(model, crop, m.temperature, m.humidity, zone.location));
      if (label != data::kNoDisease) found.insert(label);
    }
    out.emplace_back(found.begin(), found.end());
  }
  return out;
}

std::vector<double> predict_yields(const std::vector<std::string>& crops, const geo::SoilProfile& soil,
                                   const MonthlyWeather& weather, const ml::TrainedModel& model) {
  if (ml::is_classifier(model.kind())) throw Error(Errc::invalid_argument, "yield model must be a regressor");
  weather.validate();
  const double t = weather.mean_temperature();
  const double r = weather.total_rainfall();
  const double ph = soil.ph_midpoint();
  std::vector<double> out;
  for (const auto& crop : crops) out.push_back(std::max(0.0, model.predict_value(yield_features(model, crop, t, r, ph))));
  return out;
}

void rank(std::vector<CropAssessment>& assessments) {
  std::sort(assessments.begin(), assessments.end(), [](const CropAssessment& a, const CropAssessment& b) {
    if (a.predicted_production != b.predicted_production) return a.predicted_production > b.predicted_production;
    return a.crop < b.crop;
  });
}

nlohmann::json zone_to_json(const geo::ZoneRecord& zone) {
  nlohmann::json soil = {{"ph_low", zone.soil.ph_low},
                         {"ph_high", zone.soil.ph_high},
                         {"phosphorus", to_string(zone.soil.phosphorus)},
                         {"potassium", to_string(zone.soil.potassium)},
                         {"nitrogen", zone.soil.nitrogen ? nlohmann::json(to_string(*zone.soil.nitrogen)) : nlohmann::json()}};
  return {{"division", zone.division},
          {"district", zone.district},
          {"sub_district", zone.sub_district},
          {"latitude", zone.location.lat()},
          {"longitude", zone.location.lon()},
          {"aez_number", zone.aez_number},
          {"aez_name", zone.aez_name},
          {"met_station", zone.met_station},
          {"soil", std::move(soil)}};
}

nlohmann::json Recommendation::to_json() const {
  auto ranked = nlohmann::json::array();
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& a = ranking[i];
    ranked.push_back({{"rank", i + 1},
                      {"crop", a.crop},
                      {"predicted_production", a.predicted_production},
                      {"diseases", a.diseases},
                      {"disease_count", a.disease_count()}});
  }
  return {{"location", {{"lat", location.lat()}, {"lon", location.lon()}}},
          {"year", year},
          {"zone", zone_to_json(zone)},
          {"primary_crops", primary_crops},
          {"excluded_crops", excluded_crops},
          {"weather", weather.to_json()},
          {"ranking", std::move(ranked)}};
}

MonthlyWeather forecast_for(const Bundle& bundle, const std::string& station, int year) {
  return forecast_weather(station, year, bundle.datasets.temperature, bundle.datasets.rainfall,
                          bundle.datasets.humidity, {bundle.config.max_horizon_years});
}

Recommendation recommend(const Bundle& bundle, const RecommendRequest& request, const ForecastProvider& forecast) {
  Recommendation out;
  out.location = request.location;
  out.year = request.year;
  out.zone = staged("zone", [&] { return geo::nearest_zone(request.location, bundle.datasets.zones); });

  const auto all = staged("primary_crops", [&] {
    return primary_crops(out.zone.soil, bundle.datasets.requirements, {bundle.config.ph_filter});
  });
  const std::set<std::string> excluded(request.exclude_crops.begin(), request.exclude_crops.end());
  out.excluded_crops.assign(excluded.begin(), excluded.end());
  for (const auto& c : all) {
    if (!excluded.contains(c)) out.primary_crops.push_back(c);
  }

  out.weather = staged("forecast", [&] {
    auto w = forecast ? forecast(out.zone.met_station, request.year) : forecast_for(bundle, out.zone.met_station, request.year);
    w.validate();
    return w;
  });
  if (out.primary_crops.empty()) return out;

  const auto diseases = staged("disease", [&] {
    return predict_diseases(out.primary_crops, out.weather, out.zone, bundle.disease_model);
  });
  const auto yields = staged("yield", [&] {
    return predict_yields(out.primary_crops, out.zone.soil, out.weather, bundle.yield_model);
  });
  for (std::size_t i = 0; i < out.primary_crops.size(); ++i) {
    out.ranking.push_back({out.primary_crops[i], yields[i], diseases[i]});
  }
  rank(out.ranking);
  return out;
}

}  // namespace cropcast::pipeline
