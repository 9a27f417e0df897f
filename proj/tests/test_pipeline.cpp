#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cropcast/data.hpp"
#include "cropcast/error.hpp"
#include "cropcast/pipeline.hpp"
#include "cropcast/rng.hpp"

using namespace cropcast;
using namespace cropcast::pipeline;

namespace {

const std::vector<std::string> kTableIII = {"Garlic", "Lentil", "Papaya", "Rice", "Soyabean", "Sugarcane", "Tomato"};
const double kTableIVTemperature[12] = {15.8, 20.5, 23.7, 26.6, 27.4, 29, 28.4, 28.4, 28, 27.1, 22.6, 18.4};
const double kTableIVRainfall[12] = {0, 10, 24, 94, 232, 289, 542, 572, 299, 116, 3, 0};
const double kTableIVHumidity[12] = {82, 75, 68, 77, 82, 80, 83, 85, 84, 84, 78, 80};
const geo::GeoPoint kRangpur(25.74058, 89.261139);

const Bundle& fixture_bundle() {
  static const Bundle b = build_bundle(data::fixture_datasets(),
                                       TrainingConfig::from_json(data::fixture_training()), PipelineConfig{});
  return b;
}

template <class F>
Error caught(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an Error");
  return Error(Errc::invalid_argument, "");
}

data::WeatherTable table_from(data::WeatherVariable v, const std::string& station, int start_year,
                              const std::vector<double>& values) {
  data::WeatherTable t{v, {}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    t.rows.push_back({station, start_year + static_cast<int>(i / 12), static_cast<int>(i % 12) + 1, values[i]});
  }
  return t;
}

struct Histories {
  data::WeatherTable temperature, rainfall, humidity;
};

Histories periodic_histories(int years) {
  std::vector<double> t, r, h;
  for (int i = 0; i < years * 12; ++i) {
    const double s = std::sin(2.0 * std::numbers::pi * ((i % 12) - 3) / 12.0);
    t.push_back(25.0 + 6.0 * s);
    r.push_back(200.0 + 180.0 * s);
    h.push_back(78.0 + 7.0 * s);
  }
  return {table_from(data::WeatherVariable::temperature, "P", 1990, t),
          table_from(data::WeatherVariable::rainfall, "P", 1990, r),
          table_from(data::WeatherVariable::humidity, "P", 1990, h)};
}

Histories noisy_histories(std::uint64_t seed, int years) {
  Rng rng(seed);
  std::vector<double> t, r, h;
  for (int i = 0; i < years * 12; ++i) {
    const double s = std::sin(2.0 * std::numbers::pi * ((i % 12) - 3) / 12.0);
    t.push_back(25.0 + 6.0 * s + rng.normal(0.0, 0.6));
    r.push_back(std::max(0.0, 200.0 + 180.0 * s + rng.normal(0.0, 40.0)));
    h.push_back(78.0 + 7.0 * s + rng.normal(0.0, 1.5));
  }
  return {table_from(data::WeatherVariable::temperature, "N", 1980, t),
          table_from(data::WeatherVariable::rainfall, "N", 1980, r),
          table_from(data::WeatherVariable::humidity, "N", 1980, h)};
}

geo::SoilProfile soil_all(NutrientLevel level) { return {5.0, 7.0, level, level, level}; }

}  // namespace

TEST_CASE("primary crops for the Rangpur soil") {
  const auto& b = fixture_bundle();
  CHECK(primary_crops(b.datasets.zones.front().soil, b.datasets.requirements) == kTableIII);
}

TEST_CASE("maximal soil admits every crop, minimal soil none") {
  const auto& reqs = data::standard_requirements();
  auto all = primary_crops(soil_all(NutrientLevel::VH), reqs);
  CHECK(all.size() == reqs.size());
  CHECK(std::is_sorted(all.begin(), all.end()));

  // Every crop needs at least L in some nutrient, checked row by row.
  for (const auto& r : reqs) {
    const bool needs_more = r.phosphorus != NutrientLevel::VL || r.potassium != NutrientLevel::VL ||
                            (r.nitrogen && *r.nitrogen != NutrientLevel::VL);
    REQUIRE(needs_more);
  }
  CHECK(primary_crops(soil_all(NutrientLevel::VL), reqs).empty());
}

TEST_CASE("primary crop filter compares each stated nutrient") {
  std::vector<data::CropRequirement> reqs = {
      {"A", std::nullopt, NutrientLevel::M, NutrientLevel::M, std::nullopt, std::nullopt},
      {"B", NutrientLevel::H, NutrientLevel::L, NutrientLevel::L, std::nullopt, std::nullopt},
      {"C", std::nullopt, NutrientLevel::VH, NutrientLevel::L, 7.5, 8.5},
  };
  geo::SoilProfile soil{5.5, 6.5, NutrientLevel::VH, NutrientLevel::M, std::nullopt};
  CHECK(primary_crops(soil, reqs) == std::vector<std::string>{"A", "C"});
  CHECK(primary_crops(soil, reqs, {true}) == std::vector<std::string>{"A"});
  soil.nitrogen = NutrientLevel::H;
  CHECK(primary_crops(soil, reqs) == std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("fixture weather for Rangpur 2023 is the recorded table") {
  const auto& d = fixture_bundle().datasets;
  const auto w = forecast_weather("Rangpur", 2023, d.temperature, d.rainfall, d.humidity);
  REQUIRE(w.months.size() == 12);
  for (int m = 0; m < 12; ++m) {
    CHECK(w.months[m].month == m + 1);
    CHECK(w.months[m].temperature == kTableIVTemperature[m]);
    CHECK(w.months[m].rainfall == kTableIVRainfall[m]);
    CHECK(w.months[m].humidity == kTableIVHumidity[m]);
    CHECK(w.months[m].observed);
  }
}

TEST_CASE("noiseless periodic history forecasts its last cycle") {
  const auto h = periodic_histories(12);
  const auto w = forecast_weather("P", 2002, h.temperature, h.rainfall, h.humidity);
  for (int m = 0; m < 12; ++m) {
    const auto& last = h.temperature.rows[h.temperature.rows.size() - 12 + m];
    CHECK(w.months[m].temperature == doctest::Approx(last.value).epsilon(1e-6));
    CHECK(w.months[m].rainfall == doctest::Approx(h.rainfall.rows[h.rainfall.rows.size() - 12 + m].value).epsilon(1e-6));
    CHECK(w.months[m].humidity == doctest::Approx(h.humidity.rows[h.humidity.rows.size() - 12 + m].value).epsilon(1e-6));
    CHECK_FALSE(w.months[m].observed);
  }
}

TEST_CASE("stochastic forecasts are deterministic and physically bounded") {
  const auto a = noisy_histories(7, 30);
  const auto b = noisy_histories(7, 30);
  const auto wa = forecast_weather("N", 2011, a.temperature, a.rainfall, a.humidity);
  const auto wb = forecast_weather("N", 2011, b.temperature, b.rainfall, b.humidity);
  CHECK(wa == wb);
  for (const auto& m : wa.months) {
    CHECK(m.rainfall >= 0.0);
    CHECK(m.humidity >= 0.0);
    CHECK(m.humidity <= 100.0);
  }
  CHECK(wa.months[0].temperature < wa.months[6].temperature);
}

TEST_CASE("partially recorded year keeps recorded months") {
  auto h = noisy_histories(3, 20);
  for (auto* t : {&h.temperature, &h.rainfall, &h.humidity}) t->rows.resize(t->rows.size() - 5);
  const auto w = forecast_weather("N", 1999, h.temperature, h.rainfall, h.humidity);
  for (int m = 0; m < 7; ++m) {
    CHECK(w.months[m].observed);
    CHECK(w.months[m].temperature == h.temperature.rows[h.temperature.rows.size() - 7 + m].value);
  }
  for (int m = 7; m < 12; ++m) CHECK_FALSE(w.months[m].observed);
}

TEST_CASE("forecast errors") {
  const auto h = noisy_histories(3, 20);
  CHECK(caught([&] { forecast_weather("Atlantis", 2000, h.temperature, h.rainfall, h.humidity); }).code() ==
        Errc::unknown_station);
  CHECK(caught([&] { forecast_weather("N", 2005, h.temperature, h.rainfall, h.humidity, {5}); }).code() ==
        Errc::year_out_of_range);
  CHECK(caught([&] { forecast_weather("N", 1970, h.temperature, h.rainfall, h.humidity); }).code() ==
        Errc::year_out_of_range);
  const auto s = noisy_histories(3, 2);
  CHECK(caught([&] { forecast_weather("N", 1982, s.temperature, s.rainfall, s.humidity); }).code() ==
        Errc::insufficient_history);
}

TEST_CASE("fixture diseases match the reported assignments") {
  const auto& b = fixture_bundle();
  const auto& d = b.datasets;
  const auto w = forecast_weather("Rangpur", 2023, d.temperature, d.rainfall, d.humidity);
  const auto found = predict_diseases(kTableIII, w, d.zones.front(), b.disease_model);
  const std::vector<std::vector<std::string>> expected = {{}, {"Foot rot"}, {}, {}, {"Anthracnose"}, {"Smut"}, {}};
  CHECK(found == expected);
}

TEST_CASE("yield predictions equal direct model calls") {
  const auto& b = fixture_bundle();
  const auto& zone = b.datasets.zones[1];
  const auto w = forecast_for(b, zone.met_station, 2020);
  const auto crops = data::standard_requirements();
  std::vector<std::string> names;
  for (const auto& c : crops) names.push_back(c.crop);
  const auto got = predict_yields(names, zone.soil, w, b.yield_model);
  double t = 0.0, r = 0.0;
  for (const auto& m : w.months) {
    t += m.temperature;
    r += m.rainfall;
  }
  t /= 12.0;
  const auto& features = b.yield_model.feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<double> row(features.size(), 0.0);
    row[0] = t;
    row[1] = r;
    row[2] = 0.5 * (zone.soil.ph_low + zone.soil.ph_high);
    row[static_cast<std::size_t>(std::find(features.begin(), features.end(), "crop=" + names[i]) - features.begin())] = 1.0;
    CHECK(got[i] == doctest::Approx(std::max(0.0, b.yield_model.predict_value(row))).epsilon(1e-12));
  }
}

TEST_CASE("a single-leaf yield model predicts the same for every crop") {
  auto d = data::fixture_datasets();
  TrainingConfig tc;
  tc.hyperparams[ml::ModelKind::DTR] = ml::Hyperparams::defaults(ml::ModelKind::DTR);
  tc.hyperparams[ml::ModelKind::DTR].max_depth = 0;
  const auto model = train_yield_model(d, tc);
  const auto w = forecast_for(fixture_bundle(), "Rangpur", 2023);
  const auto y = predict_yields({"Papaya", "Lentil"}, d.zones.front().soil, w, model);
  CHECK(y[0] == y[1]);
}

TEST_CASE("ranking is production descending then name ascending") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CropAssessment> v;
    const auto n = 1 + rng.index(12);
    for (std::size_t i = 0; i < n; ++i) {
      v.push_back({"crop" + std::to_string(rng.index(1000)), static_cast<double>(rng.index(4)), {}});
    }
    rank(v);
    for (std::size_t i = 1; i < v.size(); ++i) {
      const auto& a = v[i - 1];
      const auto& b = v[i];
      CHECK((a.predicted_production > b.predicted_production ||
             (a.predicted_production == b.predicted_production && a.crop <= b.crop)));
    }
  }
}

TEST_CASE("fixture recommendation end to end") {
  const auto r = recommend(fixture_bundle(), {kRangpur, 2023, {}});
  CHECK(r.zone.sub_district == "Rangpur Sadar");
  CHECK(r.zone.met_station == "Rangpur");
  CHECK(r.zone.soil.ph_low == 5.6);
  CHECK(r.zone.soil.ph_high == 6.5);
  CHECK(r.zone.soil.phosphorus == NutrientLevel::VH);
  CHECK(r.zone.soil.potassium == NutrientLevel::M);
  CHECK(r.primary_crops == kTableIII);
  std::vector<std::string> order;
  for (const auto& a : r.ranking) order.push_back(a.crop);
  CHECK(order == std::vector<std::string>{"Papaya", "Sugarcane", "Tomato", "Garlic", "Soyabean", "Rice", "Lentil"});
  for (const auto& a : r.ranking) {
    if (a.crop == "Lentil") CHECK(a.diseases == std::vector<std::string>{"Foot rot"});
    else if (a.crop == "Soyabean") CHECK(a.diseases == std::vector<std::string>{"Anthracnose"});
    else if (a.crop == "Sugarcane") CHECK(a.diseases == std::vector<std::string>{"Smut"});
    else CHECK(a.diseases.empty());
  }
  CHECK(r.ranking.front().predicted_production == doctest::Approx(134.24));
  CHECK(r.ranking.back().predicted_production == doctest::Approx(0.85));
}

TEST_CASE("exclusions remove crops before prediction") {
  const auto& b = fixture_bundle();
  const auto full = recommend(b, {kRangpur, 2023, {}});
  const auto without = recommend(b, {kRangpur, 2023, {"Papaya"}});
  std::vector<CropAssessment> expected;
  for (const auto& a : full.ranking) {
    if (a.crop != "Papaya") expected.push_back(a);
  }
  CHECK(without.ranking == expected);
  CHECK(without.excluded_crops == std::vector<std::string>{"Papaya"});

  const auto none = recommend(b, {kRangpur, 2023, kTableIII});
  CHECK(none.ranking.empty());
  CHECK(none.primary_crops.empty());
}

TEST_CASE("stage tags name the failing step") {
  auto d = data::fixture_datasets();
  // A crop the disease model never saw.
  d.requirements.push_back({"Quinoa", std::nullopt, NutrientLevel::VL, NutrientLevel::VL, std::nullopt, std::nullopt});
  const auto b = build_bundle(d, TrainingConfig::from_json(data::fixture_training()), {});
  const auto e = caught([&] { recommend(b, {kRangpur, 2023, {}}); });
  CHECK(e.code() == Errc::unknown_crop);
  CHECK(e.stage() == "disease");

  const auto f = caught([&] { recommend(b, {kRangpur, 2090, {}}); });
  CHECK(f.code() == Errc::year_out_of_range);
  CHECK(f.stage() == "forecast");
}

TEST_CASE("training is invariant to input row order") {
  auto d = data::fixture_datasets();
  const auto tc = TrainingConfig::from_json(data::fixture_training());
  const auto a = train_disease_model(d, tc).to_json();
  const auto ya = train_yield_model(d, tc).to_json();
  std::reverse(d.diseases.begin(), d.diseases.end());
  std::reverse(d.yields.begin(), d.yields.end());
  CHECK(train_disease_model(d, tc).to_json() == a);
  CHECK(train_yield_model(d, tc).to_json() == ya);
}

TEST_CASE("bundle loads from a manifest and trains missing models") {
  const auto dir = std::filesystem::temp_directory_path() / "cropcast_test_bundle";
  std::filesystem::remove_all(dir);
  auto manifest = data::Manifest::standard(dir);
  manifest.training = data::fixture_training();
  data::save_datasets(manifest, data::fixture_datasets());
  manifest.write(dir / "bundle.json");
  const auto loaded = load_bundle(dir / "bundle.json");
  const auto a = recommend(loaded, {kRangpur, 2023, {}}).to_json();
  CHECK(a == recommend(fixture_bundle(), {kRangpur, 2023, {}}).to_json());

  // Saved models are used instead of retraining.
  {
    std::ofstream(manifest.disease_model_path()) << loaded.disease_model.to_json().dump();
    std::ofstream(manifest.yield_model_path()) << loaded.yield_model.to_json().dump();
  }
  CHECK(recommend(load_bundle(dir / "bundle.json"), {kRangpur, 2023, {}}).to_json() == a);
  std::filesystem::remove_all(dir);
}

TEST_CASE("configuration sections reject unknown keys") {
  CHECK(caught([] { TrainingConfig::from_json({{"sed", 1}}); }).code() == Errc::config_error);
  CHECK(caught([] { TrainingConfig::from_json({{"disease_model", "DTR"}}); }).code() == Errc::config_error);
  CHECK(caught([] { TrainingConfig::from_json({{"hyperparams", {{"SVC", {{"depth", 2}}}}}}); }).code() ==
        Errc::config_error);
  CHECK(caught([] { PipelineConfig::from_json({{"horizon", 2}}); }).code() == Errc::config_error);
  const auto tc = TrainingConfig::from_json(data::fixture_training());
  CHECK(TrainingConfig::from_json(tc.to_json()).to_json() == tc.to_json());
}
