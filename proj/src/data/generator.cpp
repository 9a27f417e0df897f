#include <algorithm>
#include <cmath>
#include <numbers>

#include "cropcast/data.hpp"
#include "cropcast/error.hpp"
#include "synthetic.hpp"

namespace cropcast::data {

namespace {

using NL = NutrientLevel;

struct CropProfile {
  const char* name;
  NL nitrogen;
  NL phosphorus;
  NL potassium;
  double ph_low;
  double ph_high;
  double base_yield;
  double t_opt;
  double t_width;
  double rain_opt;
  double rain_width;
};

const CropProfile kCrops[] = {
    {"Banana", NL::H, NL::M, NL::H, 5.5, 7.0, 45.0, 27.0, 4.0, 2200.0, 900.0},
    {"Brinjal", NL::M, NL::M, NL::H, 5.5, 6.8, 17.0, 25.0, 5.0, 1600.0, 800.0},
    {"Chilli", NL::H, NL::M, NL::H, 6.0, 7.0, 1.8, 24.0, 5.0, 1400.0, 700.0},
    {"Garlic", NL::M, NL::H, NL::M, 6.0, 7.0, 13.0, 22.0, 5.0, 1500.0, 900.0},
    {"Jute", NL::H, NL::L, NL::M, 6.0, 7.5, 2.5, 28.0, 4.0, 2000.0, 700.0},
    {"Lentil", NL::L, NL::M, NL::L, 6.0, 7.5, 0.9, 21.0, 5.0, 1300.0, 800.0},
    {"Maize", NL::H, NL::H, NL::M, 5.5, 7.0, 7.0, 25.0, 5.0, 1700.0, 800.0},
    {"Mango", NL::M, NL::M, NL::H, 5.5, 7.5, 10.0, 27.0, 5.0, 1900.0, 900.0},
    {"Mustard", NL::H, NL::M, NL::M, 6.0, 7.5, 1.3, 20.0, 5.0, 1200.0, 700.0},
    {"Onion", NL::M, NL::H, NL::H, 6.0, 7.0, 11.0, 22.0, 5.0, 1400.0, 800.0},
    {"Papaya", NL::M, NL::H, NL::M, 5.5, 7.0, 140.0, 26.0, 5.0, 2000.0, 900.0},
    {"Potato", NL::H, NL::H, NL::VH, 5.0, 6.5, 20.0, 20.0, 5.0, 1300.0, 800.0},
    {"Pumpkin", NL::H, NL::M, NL::M, 5.5, 7.0, 15.0, 25.0, 5.0, 1700.0, 800.0},
    {"Rice", NL::M, NL::M, NL::M, 5.0, 6.5, 8.0, 26.0, 4.0, 2300.0, 900.0},
    {"Soyabean", NL::L, NL::M, NL::M, 6.0, 7.0, 12.0, 25.0, 5.0, 1800.0, 800.0},
    {"Sugarcane", NL::M, NL::H, NL::M, 5.0, 7.5, 110.0, 27.0, 5.0, 2100.0, 900.0},
    {"Tomato", NL::M, NL::H, NL::M, 5.5, 7.0, 36.0, 23.0, 5.0, 1500.0, 800.0},
    {"Wheat", NL::H, NL::M, NL::M, 6.0, 7.5, 3.5, 20.0, 4.0, 1100.0, 600.0},
};

constexpr double kPhWidth = 1.5;

const CropProfile& profile(std::string_view crop) {
  for (const auto& c : kCrops) {
    if (c.name == crop) return c;
  }
  throw Error(Errc::unknown_crop, "no production profile for crop '" + std::string(crop) + "'");
}

double gaussian_response(double x, double centre, double width) {
  const double z = (x - centre) / width;
  return std::exp(-0.5 * z * z);
}

NL random_level(Rng& rng, int lowest, int highest) {
  return static_cast<NL>(lowest + static_cast<int>(rng.index(static_cast<std::size_t>(highest - lowest + 1))));
}

double round_to(double v, double step) { return std::round(v / step) * step; }

}  // namespace

namespace detail {

const std::vector<StationClimate>& station_climates() {
  static const std::vector<StationClimate> stations = {
      {"Rangpur", "Rangpur", 25.74058, 89.261139, 3, "Tista Meander Floodplain", 24.6, 6.0, 180.0, 200.0, 79.0, 6.0},
      {"Dhaka", "Dhaka", 23.8103, 90.4125, 28, "Madhupur Tract", 26.0, 5.0, 190.0, 190.0, 74.0, 9.0},
      {"Rajshahi", "Rajshahi", 24.3745, 88.6042, 11, "High Ganges River Floodplain", 25.8, 6.5, 130.0, 150.0, 73.0, 11.0},
      {"Khulna", "Khulna", 22.8456, 89.5403, 13, "Ganges Tidal Floodplain", 26.2, 4.8, 150.0, 160.0, 79.0, 7.0},
      {"Sylhet", "Sylhet", 24.8949, 91.8687, 20, "Eastern Surma-Kusiyara Floodplain", 25.0, 4.8, 350.0, 330.0, 79.0, 7.0},
      {"Chittagong", "Chittagong", 22.3569, 91.7832, 23, "Chittagong Coastal Plains", 26.0, 4.2, 245.0, 260.0, 78.0, 7.0},
      {"Barisal", "Barisal", 22.701, 90.3535, 13, "Ganges Tidal Floodplain", 26.0, 4.6, 180.0, 190.0, 82.0, 6.0},
      {"Mymensingh", "Mymensingh", 24.7471, 90.4203, 9, "Old Brahmaputra Floodplain", 25.3, 5.4, 200.0, 210.0, 81.0, 6.0},
      {"Comilla", "Chittagong", 23.4607, 91.1809, 19, "Old Meghna Estuarine Floodplain", 25.7, 5.0, 190.0, 200.0, 79.0, 7.0},
      {"Dinajpur", "Rangpur", 25.6279, 88.6332, 1, "Old Himalayan Piedmont Plain", 24.8, 6.4, 160.0, 190.0, 78.0, 7.0},
      {"Bogra", "Rajshahi", 24.8465, 89.3773, 25, "Level Barind Tract", 25.3, 5.8, 150.0, 170.0, 78.0, 8.0},
      {"Jessore", "Khulna", 23.1664, 89.2081, 11, "High Ganges River Floodplain", 26.1, 5.4, 140.0, 160.0, 77.0, 9.0},
  };
  return stations;
}

void synthesize_weather(const StationClimate& s, int start_year, int years, double noise, Rng& rng,
                        Datasets& into) {
  double temperature_state = 0.0;
  double rainfall_state = 0.0;
  double humidity_state = 0.0;
  for (int y = 0; y < years; ++y) {
    for (int m = 1; m <= 12; ++m) {
      // Peaks in July, troughs in January.
      const double season = std::sin(2.0 * std::numbers::pi * (m - 4) / 12.0);
      temperature_state = 0.5 * temperature_state + rng.normal(0.0, 0.5 * noise);
      rainfall_state = 0.3 * rainfall_state + rng.normal(0.0, 35.0 * noise);
      humidity_state = 0.5 * humidity_state + rng.normal(0.0, 1.5 * noise);
      const double t = s.mean_temperature + s.temperature_amplitude * season + 0.015 * y + temperature_state;
      const double r = s.mean_rainfall + s.rainfall_amplitude * season + rainfall_state;
      const double h = s.mean_humidity + s.humidity_amplitude * season + humidity_state;
      const int year = start_year + y;
      into.temperature.rows.push_back({s.name, year, m, round_to(t, 0.01)});
      into.rainfall.rows.push_back({s.name, year, m, round_to(std::max(0.0, r), 0.1)});
      into.humidity.rows.push_back({s.name, year, m, round_to(std::clamp(h, 0.0, 100.0), 0.01)});
    }
  }
}

}  // namespace detail

const std::vector<CropRequirement>& standard_requirements() {
  static const std::vector<CropRequirement> table = [] {
    std::vector<CropRequirement> out;
    for (const auto& c : kCrops) out.push_back({c.name, c.nitrogen, c.phosphorus, c.potassium, c.ph_low, c.ph_high});
    return out;
  }();
  return table;
}

double production_function(std::string_view crop, double mean_temperature, double total_rainfall, double ph) {
  const auto& c = profile(crop);
  const double ph_opt = 0.5 * (c.ph_low + c.ph_high);
  return c.base_yield * gaussian_response(mean_temperature, c.t_opt, c.t_width) *
         gaussian_response(total_rainfall, c.rain_opt, c.rain_width) * gaussian_response(ph, ph_opt, kPhWidth);
}

const std::vector<RiskBox>& risk_boxes() {
  static const std::vector<RiskBox> boxes = {
      {"Banana", "Panama wilt", 25.0, 33.0, 75.0, 95.0},
      {"Brinjal", "Fruit rot", 26.0, 34.0, 80.0, 100.0},
      {"Chilli", "Leaf curl", 28.0, 36.0, 50.0, 70.0},
      {"Garlic", "Purple blotch", 10.0, 14.0, 90.0, 100.0},
      {"Jute", "Stem rot", 27.0, 35.0, 85.0, 100.0},
      {"Lentil", "Foot rot", 12.0, 21.0, 72.0, 95.0},
      {"Maize", "Leaf blight", 18.0, 27.0, 80.0, 100.0},
      {"Mango", "Powdery mildew", 15.0, 24.0, 60.0, 80.0},
      {"Mustard", "Alternaria blight", 14.0, 22.0, 85.0, 100.0},
      {"Onion", "Purple blotch", 18.0, 26.0, 80.0, 95.0},
      {"Papaya", "Ring spot", 34.0, 40.0, 40.0, 60.0},
      {"Potato", "Late blight", 10.0, 20.0, 85.0, 100.0},
      {"Pumpkin", "Downy mildew", 16.0, 24.0, 85.0, 100.0},
      {"Rice", "Blast", 33.0, 40.0, 88.0, 100.0},
      {"Soyabean", "Anthracnose", 25.0, 33.0, 79.0, 96.0},
      {"Sugarcane", "Smut", 24.0, 33.0, 60.0, 80.0},
      {"Tomato", "Early blight", 10.0, 14.0, 40.0, 60.0},
      {"Wheat", "Leaf rust", 15.0, 22.0, 70.0, 90.0},
  };
  return boxes;
}

std::string disease_at(std::string_view crop, double t, double h) {
  for (const auto& box : risk_boxes()) {
    if (box.crop == crop && box.contains(t, h)) return box.disease;
  }
  return kNoDisease;
}

void GeneratorConfig::validate() const {
  const auto& stations_available = detail::station_climates();
  if (years < 8) throw Error(Errc::invalid_argument, "generator needs at least 8 years of weather, got " + std::to_string(years));
  if (start_year < 1800 || start_year + years - 1 > 3000) throw Error(Errc::invalid_argument, "generator year range outside [1800, 3000]");
  if (stations < 1 || stations > static_cast<int>(stations_available.size())) {
    throw Error(Errc::invalid_argument,
                "generator stations must be in [1, " + std::to_string(stations_available.size()) + "]");
  }
  if (zones_per_station < 1 || zones_per_station > 9) throw Error(Errc::invalid_argument, "zones_per_station must be in [1, 9]");
  if (yield_rows < 10) throw Error(Errc::invalid_argument, "generator needs at least 10 yield rows");
  if (disease_rows < 10) throw Error(Errc::invalid_argument, "generator needs at least 10 disease rows");
  if (!(yield_noise >= 0.0 && yield_noise < 1.0)) throw Error(Errc::invalid_argument, "yield_noise must be in [0, 1)");
  if (!(weather_noise >= 0.0 && weather_noise <= 10.0)) throw Error(Errc::invalid_argument, "weather_noise must be in [0, 10]");
}

Datasets generate_synthetic(const GeneratorConfig& config) {
  config.validate();
  Datasets d;
  d.requirements = standard_requirements();
  const auto& climates = detail::station_climates();

  Rng zone_rng(derive_seed(config.seed, 0));
  for (int s = 0; s < config.stations; ++s) {
    const auto& c = climates[static_cast<std::size_t>(s)];
    Rng weather_rng(derive_seed(config.seed, 100 + static_cast<std::uint64_t>(s)));
    detail::synthesize_weather(c, config.start_year, config.years, config.weather_noise, weather_rng, d);
    for (int z = 0; z < config.zones_per_station; ++z) {
      geo::ZoneRecord zone;
      zone.division = c.division;
      zone.district = c.name;
      zone.sub_district = z == 0 ? c.name + " Sadar" : c.name + " Upazila " + std::to_string(z);
      const double lat = z == 0 ? c.lat : round_to(c.lat + zone_rng.uniform(-0.25, 0.25), 1e-5);
      const double lon = z == 0 ? c.lon : round_to(c.lon + zone_rng.uniform(-0.25, 0.25), 1e-5);
      zone.location = geo::GeoPoint(lat, lon);
      zone.aez_number = c.aez_number;
      zone.aez_name = c.aez_name;
      zone.met_station = c.name;
      zone.soil.ph_low = round_to(zone_rng.uniform(4.8, 6.8), 0.1);
      zone.soil.ph_high = round_to(zone.soil.ph_low + zone_rng.uniform(0.5, 1.2), 0.1);
      zone.soil.phosphorus = random_level(zone_rng, 2, 5);
      zone.soil.potassium = random_level(zone_rng, 2, 5);
      zone.soil.nitrogen = random_level(zone_rng, 2, 5);
      d.zones.push_back(std::move(zone));
    }
  }

  const auto zone_count = d.zones.size();
  const auto crop_count = std::size(kCrops);

  Rng yield_rng(derive_seed(config.seed, 1));
  for (int i = 0; i < config.yield_rows; ++i) {
    const auto& zone = d.zones[yield_rng.index(zone_count)];
    const int year_offset = static_cast<int>(yield_rng.index(static_cast<std::size_t>(config.years)));
    const auto& crop = kCrops[yield_rng.index(crop_count)];
    // Weather rows are stored station-major, 12 per year.
    const auto station_index = static_cast<std::size_t>(
        std::find_if(climates.begin(), climates.end(), [&](const auto& c) { return c.name == zone.met_station; }) -
        climates.begin());
    const auto first = (station_index * static_cast<std::size_t>(config.years) + static_cast<std::size_t>(year_offset)) * 12;
    double t_sum = 0.0;
    double r_sum = 0.0;
    for (std::size_t m = 0; m < 12; ++m) {
      t_sum += d.temperature.rows[first + m].value;
      r_sum += d.rainfall.rows[first + m].value;
    }
    YieldRecord r;
    r.temperature = round_to(t_sum / 12.0, 0.001);
    r.rainfall = round_to(r_sum, 0.1);
    r.ph = zone.soil.ph_midpoint();
    r.crop = crop.name;
    const double factor = 1.0 + yield_rng.uniform(-config.yield_noise, config.yield_noise);
    r.production = round_to(production_function(r.crop, r.temperature, r.rainfall, r.ph) * factor, 0.001);
    d.yields.push_back(std::move(r));
  }

  Rng disease_rng(derive_seed(config.seed, 2));
  for (int i = 0; i < config.disease_rows; ++i) {
    const auto& zone = d.zones[disease_rng.index(zone_count)];
    DiseaseRecord r;
    r.region = zone.district;
    r.location = zone.location;
    r.temperature = round_to(disease_rng.uniform(10.0, 40.0), 0.01);
    r.humidity = round_to(disease_rng.uniform(40.0, 100.0), 0.01);
    r.crop = kCrops[disease_rng.index(crop_count)].name;
    r.disease = disease_at(r.crop, r.temperature, r.humidity);
    d.diseases.push_back(std::move(r));
  }
  return d;
}

}  // namespace cropcast::data
