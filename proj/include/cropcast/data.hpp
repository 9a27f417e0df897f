#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cropcast/geo.hpp"
#include "cropcast/nutrient.hpp"
#include "cropcast/timeseries.hpp"

namespace cropcast::data {

enum class Schema {
  soil_nutrition,
  crop_nutrition,
  crop_production,
  crop_disease,
  weather_temperature,
  weather_rainfall,
  weather_humidity,
};

inline constexpr Schema kAllSchemas[] = {Schema::soil_nutrition,      Schema::crop_nutrition,
                                         Schema::crop_production,     Schema::crop_disease,
                                         Schema::weather_temperature, Schema::weather_rainfall,
                                         Schema::weather_humidity};

std::string_view to_string(Schema schema) noexcept;
Schema parse_schema(std::string_view name);

struct CropRequirement {
  std::string crop;
  std::optional<NutrientLevel> nitrogen;
  NutrientLevel phosphorus = NutrientLevel::M;
  NutrientLevel potassium = NutrientLevel::M;
  // Only consulted when the pipeline's pH filter is switched on.
  std::optional<double> ph_low;
  std::optional<double> ph_high;

  bool operator==(const CropRequirement&) const = default;
};

struct YieldRecord {
  double temperature = 0.0;
  double rainfall = 0.0;
  double ph = 0.0;
  std::string crop;
  double production = 0.0;

  bool operator==(const YieldRecord&) const = default;
};

inline const std::string kNoDisease = "None";

struct DiseaseRecord {
  std::string region;
  geo::GeoPoint location{0.0, 0.0};
  double temperature = 0.0;
  double humidity = 0.0;
  std::string crop;
  std::string disease;

  bool operator==(const DiseaseRecord&) const = default;
};

enum class WeatherVariable { temperature, rainfall, humidity };

std::string_view to_string(WeatherVariable v) noexcept;

struct WeatherRow {
  std::string station;
  int year = 0;
  int month = 1;
  double value = 0.0;

  bool operator==(const WeatherRow&) const = default;
};

struct WeatherTable {
  WeatherVariable variable = WeatherVariable::temperature;
  std::vector<WeatherRow> rows;

  /// Distinct station names, sorted.
  std::vector<std::string> stations() const;
  bool has_station(std::string_view station) const;
  /// Month-ordered series for one station. Throws unknown_station.
  ts::TimeSeries series(std::string_view station) const;

  bool operator==(const WeatherTable&) const = default;
};

/// The seven tables of one data bundle.
struct Datasets {
  std::vector<geo::ZoneRecord> zones;
  std::vector<CropRequirement> requirements;
  std::vector<YieldRecord> yields;
  std::vector<DiseaseRecord> diseases;
  WeatherTable temperature{WeatherVariable::temperature, {}};
  WeatherTable rainfall{WeatherVariable::rainfall, {}};
  WeatherTable humidity{WeatherVariable::humidity, {}};

  const WeatherTable& weather(WeatherVariable v) const;
  bool operator==(const Datasets&) const = default;
};

// Reading validates every row; errors name the source, line and field.
// A header-only file yields an empty table.
std::vector<geo::ZoneRecord> read_soil_nutrition(std::istream& in, const std::string& source = "soil_nutrition");
std::vector<CropRequirement> read_crop_nutrition(std::istream& in, const std::string& source = "crop_nutrition");
std::vector<YieldRecord> read_crop_production(std::istream& in, const std::string& source = "crop_production");
std::vector<DiseaseRecord> read_crop_disease(std::istream& in, const std::string& source = "crop_disease");
WeatherTable read_weather(std::istream& in, WeatherVariable variable, const std::string& source = "weather");

void write_soil_nutrition(std::ostream& out, const std::vector<geo::ZoneRecord>& zones);
void write_crop_nutrition(std::ostream& out, const std::vector<CropRequirement>& requirements);
void write_crop_production(std::ostream& out, const std::vector<YieldRecord>& records);
void write_crop_disease(std::ostream& out, const std::vector<DiseaseRecord>& records);
void write_weather(std::ostream& out, const WeatherTable& table);

/// Loads one file into the matching slot of `into`.
void load_dataset(const std::filesystem::path& path, Schema schema, Datasets& into);
void save_dataset(const std::filesystem::path& path, Schema schema, const Datasets& from);

/// Where a bundle's files live, relative to the manifest's directory.
struct Manifest {
  std::filesystem::path directory;
  std::map<Schema, std::string> datasets;
  std::string disease_model = "disease_model.json";
  std::string yield_model = "yield_model.json";
  /// Free-form sections passed through to training and the pipeline.
  nlohmann::json training = nlohmann::json::object();
  nlohmann::json pipeline = nlohmann::json::object();

  static Manifest standard(std::filesystem::path directory);
  static Manifest read(const std::filesystem::path& file);
  void write(const std::filesystem::path& file) const;
  nlohmann::json to_json() const;

  std::filesystem::path path_of(Schema schema) const;
  std::filesystem::path disease_model_path() const { return directory / disease_model; }
  std::filesystem::path yield_model_path() const { return directory / yield_model; }
};

Datasets load_datasets(const Manifest& manifest);
/// Writes the seven CSV files named in `manifest`, creating its directory.
void save_datasets(const Manifest& manifest, const Datasets& datasets);

struct GeneratorConfig {
  std::uint64_t seed = 42;
  int start_year = 1973;
  int years = 50;
  int stations = 8;
  int zones_per_station = 3;
  int yield_rows = 2000;
  int disease_rows = 2000;
  /// Relative half-width of the uniform multiplicative yield noise.
  double yield_noise = 0.05;
  /// Standard deviation scale of the AR(1) weather noise.
  double weather_noise = 1.0;

  void validate() const;
};

/// Deterministic synthetic bundle. Every table passes load validation.
Datasets generate_synthetic(const GeneratorConfig& config);

/// Noise-free production (ton/hectare) of `crop` under the given annual
/// weather and soil pH; the generator multiplies it by bounded noise.
double production_function(std::string_view crop, double mean_temperature, double total_rainfall, double ph);

/// Temperature/humidity rectangle in which `crop` carries `disease`.
struct RiskBox {
  std::string crop;
  std::string disease;
  double t_low, t_high, h_low, h_high;
  bool contains(double t, double h) const { return t >= t_low && t <= t_high && h >= h_low && h <= h_high; }
};
const std::vector<RiskBox>& risk_boxes();
/// Disease label for a crop at (t, h): the containing box's disease or "None".
std::string disease_at(std::string_view crop, double t, double h);

/// The 18-crop requirement table shared by the fixture and the generator.
const std::vector<CropRequirement>& standard_requirements();

/// Reference bundle around the Rangpur Sadar zone: its soil profile, the
/// recorded 2023 Rangpur weather, and disease and yield tables built so that
/// the pipeline's Rangpur 2023 recommendation has a known answer.
Datasets fixture_datasets();
/// Training settings the fixture bundle is meant to be used with.
nlohmann::json fixture_training();

}  // namespace cropcast::data
