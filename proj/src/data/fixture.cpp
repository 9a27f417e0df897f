#include <cmath>

#include "cropcast/data.hpp"
#include "cropcast/error.hpp"
#include "synthetic.hpp"

namespace cropcast::data {

namespace {

using NL = NutrientLevel;

constexpr std::uint64_t kFixtureSeed = 2023;
constexpr int kHistoryStart = 1973;
constexpr int kHistoryYears = 50;
constexpr int kTargetYear = 2023;

const double kTemperature2023[12] = {15.8, 20.5, 23.7, 26.6, 27.4, 29, 28.4, 28.4, 28, 27.1, 22.6, 18.4};
const double kRainfall2023[12] = {0, 10, 24, 94, 232, 289, 542, 572, 299, 116, 3, 0};
const double kHumidity2023[12] = {82, 75, 68, 77, 82, 80, 83, 85, 84, 84, 78, 80};

struct FixtureYield {
  const char* crop;
  double production;
};

// Production at the Rangpur 2023 feature point.
const FixtureYield kRangpurYields[] = {
    {"Papaya", 134.24}, {"Sugarcane", 106.79}, {"Tomato", 35.17}, {"Garlic", 12.79},
    {"Soyabean", 11.44}, {"Rice", 7.99},       {"Lentil", 0.85},
};

geo::ZoneRecord fixture_zone(const detail::StationClimate& c, std::string sub_district, double ph_low, double ph_high,
                             NL p, NL k, NL n) {
  geo::ZoneRecord z;
  z.division = c.division;
  z.district = c.name;
  z.sub_district = std::move(sub_district);
  z.location = geo::GeoPoint(c.lat, c.lon);
  z.aez_number = c.aez_number;
  z.aez_name = c.aez_name;
  z.met_station = c.name;
  z.soil = {ph_low, ph_high, p, k, n};
  return z;
}

const detail::StationClimate& climate(std::string_view name) {
  for (const auto& c : detail::station_climates()) {
    if (c.name == name) return c;
  }
  throw Error(Errc::unknown_station, "no climate for station '" + std::string(name) + "'");
}

}  // namespace

Datasets fixture_datasets() {
  Datasets d;
  d.requirements = standard_requirements();
  d.zones = {
      fixture_zone(climate("Rangpur"), "Rangpur Sadar", 5.6, 6.5, NL::VH, NL::M, NL::M),
      fixture_zone(climate("Dhaka"), "Dhaka Sadar", 5.5, 6.8, NL::M, NL::H, NL::M),
      fixture_zone(climate("Rajshahi"), "Rajshahi Sadar", 6.5, 7.8, NL::H, NL::H, NL::L),
      fixture_zone(climate("Khulna"), "Khulna Sadar", 6.0, 7.5, NL::M, NL::VH, NL::H),
  };

  for (std::size_t i = 0; i < d.zones.size(); ++i) {
    Rng rng(derive_seed(kFixtureSeed, i));
    detail::synthesize_weather(climate(d.zones[i].met_station), kHistoryStart, kHistoryYears, 1.0, rng, d);
    if (i == 0) {
      for (int m = 1; m <= 12; ++m) {
        d.temperature.rows.push_back({"Rangpur", kTargetYear, m, kTemperature2023[m - 1]});
        d.rainfall.rows.push_back({"Rangpur", kTargetYear, m, kRainfall2023[m - 1]});
        d.humidity.rows.push_back({"Rangpur", kTargetYear, m, kHumidity2023[m - 1]});
      }
    }
  }

  // The yield model sees annual mean temperature, total rainfall and the
  // zone pH midpoint. Rows at the exact Rangpur 2023 point carry the target
  // production; the rest sample the production surface away from it.
  double t_sum = 0.0;
  double r_sum = 0.0;
  for (int m = 0; m < 12; ++m) {
    t_sum += kTemperature2023[m];
    r_sum += kRainfall2023[m];
  }
  const double rangpur_t = t_sum / 12.0;
  const double rangpur_ph = d.zones[0].soil.ph_midpoint();
  for (const auto& y : kRangpurYields) {
    for (int copy = 0; copy < 2; ++copy) d.yields.push_back({rangpur_t, r_sum, rangpur_ph, y.crop, y.production});
  }
  for (const auto& req : d.requirements) {
    for (double t : {20.0, 30.0}) {
      for (double r : {1200.0, 3000.0}) {
        for (double ph : {5.0, 7.0}) {
          d.yields.push_back({t, r, ph, req.crop, std::round(production_function(req.crop, t, r, ph) * 100.0) / 100.0});
        }
      }
    }
  }

  // Disease observations on a regular temperature/humidity grid per crop.
  std::size_t next_zone = 0;
  for (const auto& req : d.requirements) {
    for (int t = 10; t <= 40; t += 3) {
      for (int h = 40; h <= 100; h += 6) {
        const auto& zone = d.zones[next_zone++ % d.zones.size()];
        d.diseases.push_back({zone.district, zone.location, double(t), double(h), req.crop, disease_at(req.crop, t, h)});
      }
    }
  }
  return d;
}

nlohmann::json fixture_training() {
  return {
      {"seed", 42},
      {"disease_model", "SVC"},
      {"yield_model", "DTR"},
      {"hyperparams",
       {{"SVC", {{"cost", 100.0}, {"gamma", 1.0}}}, {"DTR", {{"max_depth", 64}, {"min_samples_leaf", 1}}}}},
  };
}

}  // namespace cropcast::data
