#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>

#include "cropcast/data.hpp"
#include "cropcast/error.hpp"
#include "csv.hpp"

namespace cropcast::data {

namespace {

const char* const kSchemaNames[] = {"soil_nutrition",      "crop_nutrition",   "crop_production", "crop_disease",
                                    "weather_temperature", "weather_rainfall", "weather_humidity"};

std::string value_column(WeatherVariable v) { return std::string(to_string(v)); }

NutrientLevel nutrient_field(const csv::Table& t, std::string_view column) {
  try {
    return parse_nutrient(t.text(column));
  } catch (const Error& e) {
    if (e.code() != Errc::invalid_data || std::string_view(e.what()).find(':') != std::string_view::npos) throw;
    t.fail(column, e.what());
  }
}

std::optional<NutrientLevel> optional_nutrient(const csv::Table& t, std::string_view column) {
  if (!t.optional_text(column)) return std::nullopt;
  return nutrient_field(t, column);
}

geo::GeoPoint point_field(const csv::Table& t) {
  const double lat = t.number("latitude");
  const double lon = t.number("longitude");
  if (lat < -90 || lat > 90) t.fail("latitude", "value outside [-90, 90]");
  if (lon < -180 || lon > 180) t.fail("longitude", "value outside [-180, 180]");
  return geo::GeoPoint(lat, lon);
}

void check_range(const csv::Table& t, std::string_view column, double v, double lo, double hi) {
  if (v < lo || v > hi) {
    t.fail(column, "value " + csv::format_number(v) + " outside [" + csv::format_number(lo) + ", " +
                       csv::format_number(hi) + "]");
  }
}

std::string nutrient_text(const std::optional<NutrientLevel>& level) { return level ? to_string(*level) : ""; }
std::string optional_number_text(const std::optional<double>& v) { return v ? csv::format_number(*v) : ""; }

void check_weather_continuity(const WeatherTable& table, const std::string& source) {
  for (const auto& station : table.stations()) {
    try {
      table.series(station);
    } catch (const Error& e) {
      throw Error(Errc::invalid_data, source + ": " + e.what());
    }
  }
}

}  // namespace

std::string_view to_string(Schema schema) noexcept { return kSchemaNames[static_cast<int>(schema)]; }

Schema parse_schema(std::string_view name) {
  for (auto s : kAllSchemas) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::invalid_argument, "unknown dataset schema '" + std::string(name) + "'");
}

std::string_view to_string(WeatherVariable v) noexcept {
  switch (v) {
    case WeatherVariable::temperature: return "temperature";
    case WeatherVariable::rainfall: return "rainfall";
    case WeatherVariable::humidity: return "humidity";
  }
  return "?";
}

std::vector<std::string> WeatherTable::stations() const {
  std::set<std::string> names;
  for (const auto& r : rows) names.insert(r.station);
  return {names.begin(), names.end()};
}

bool WeatherTable::has_station(std::string_view station) const {
  return std::any_of(rows.begin(), rows.end(), [&](const WeatherRow& r) { return r.station == station; });
}

ts::TimeSeries WeatherTable::series(std::string_view station) const {
  std::vector<const WeatherRow*> selected;
  for (const auto& r : rows) {
    if (r.station == station) selected.push_back(&r);
  }
  if (selected.empty()) {
    throw Error(Errc::unknown_station, "no " + value_column(variable) + " history for station '" + std::string(station) + "'");
  }
  std::sort(selected.begin(), selected.end(),
            [](const WeatherRow* a, const WeatherRow* b) { return std::tie(a->year, a->month) < std::tie(b->year, b->month); });
  ts::TimeSeries s{selected.front()->year, selected.front()->month, {}};
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto [year, month] = s.date_at(i);
    if (selected[i]->year != year || selected[i]->month != month) {
      throw Error(Errc::invalid_data, "station '" + std::string(station) + "' " + value_column(variable) +
                                          " history has a gap or duplicate at " + std::to_string(year) + "-" +
                                          std::to_string(month));
    }
    s.values.push_back(selected[i]->value);
  }
  return s;
}

const WeatherTable& Datasets::weather(WeatherVariable v) const {
  switch (v) {
    case WeatherVariable::temperature: return temperature;
    case WeatherVariable::rainfall: return rainfall;
    case WeatherVariable::humidity: return humidity;
  }
  return temperature;
}

std::vector<geo::ZoneRecord> read_soil_nutrition(std::istream& in, const std::string& source) {
  csv::Table t(in, source,
               {"division", "district", "sub_district", "latitude", "longitude", "aez_number", "aez_name",
                "met_station", "ph_low", "ph_high", "phosphorus", "potassium"},
               {"nitrogen"});
  std::vector<geo::ZoneRecord> out;
  std::set<std::pair<std::string, std::string>> keys;
  while (t.next()) {
    geo::ZoneRecord z;
    z.division = t.text("division");
    z.district = t.text("district");
    z.sub_district = t.text("sub_district");
    z.location = point_field(t);
    z.aez_number = t.integer("aez_number");
    if (z.aez_number < 1) t.fail("aez_number", "must be >= 1");
    z.aez_name = t.text("aez_name");
    z.met_station = t.text("met_station");
    z.soil.ph_low = t.number("ph_low");
    z.soil.ph_high = t.number("ph_high");
    check_range(t, "ph_low", z.soil.ph_low, 0.0, 14.0);
    check_range(t, "ph_high", z.soil.ph_high, z.soil.ph_low, 14.0);
    z.soil.phosphorus = nutrient_field(t, "phosphorus");
    z.soil.potassium = nutrient_field(t, "potassium");
    z.soil.nitrogen = optional_nutrient(t, "nitrogen");
    if (!keys.emplace(z.district, z.sub_district).second) {
      t.fail("sub_district", "duplicate zone '" + z.district + "/" + z.sub_district + "'");
    }
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<CropRequirement> read_crop_nutrition(std::istream& in, const std::string& source) {
  csv::Table t(in, source, {"crop", "phosphorus", "potassium"}, {"nitrogen", "ph_low", "ph_high"});
  std::vector<CropRequirement> out;
  std::set<std::string> crops;
  while (t.next()) {
    CropRequirement r;
    r.crop = t.text("crop");
    r.nitrogen = optional_nutrient(t, "nitrogen");
    r.phosphorus = nutrient_field(t, "phosphorus");
    r.potassium = nutrient_field(t, "potassium");
    r.ph_low = t.optional_number("ph_low");
    r.ph_high = t.optional_number("ph_high");
    if (r.ph_low.has_value() != r.ph_high.has_value()) t.fail_row("ph_low and ph_high must be given together");
    if (r.ph_low) {
      check_range(t, "ph_low", *r.ph_low, 0.0, 14.0);
      check_range(t, "ph_high", *r.ph_high, *r.ph_low, 14.0);
    }
    if (!crops.insert(r.crop).second) t.fail("crop", "duplicate crop '" + r.crop + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<YieldRecord> read_crop_production(std::istream& in, const std::string& source) {
  csv::Table t(in, source, {"temperature", "rainfall", "ph", "crop", "production"});
  std::vector<YieldRecord> out;
  while (t.next()) {
    YieldRecord r;
    r.temperature = t.number("temperature");
    check_range(t, "temperature", r.temperature, -60.0, 60.0);
    r.rainfall = t.number("rainfall");
    check_range(t, "rainfall", r.rainfall, 0.0, 1e5);
    r.ph = t.number("ph");
    check_range(t, "ph", r.ph, 0.0, 14.0);
    r.crop = t.text("crop");
    r.production = t.number("production");
    if (r.production < 0) t.fail("production", "must be >= 0");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DiseaseRecord> read_crop_disease(std::istream& in, const std::string& source) {
  csv::Table t(in, source, {"region", "latitude", "longitude", "temperature", "humidity", "crop", "disease"});
  std::vector<DiseaseRecord> out;
  while (t.next()) {
    DiseaseRecord r;
    r.region = t.text("region");
    r.location = point_field(t);
    r.temperature = t.number("temperature");
    check_range(t, "temperature", r.temperature, -60.0, 60.0);
    r.humidity = t.number("humidity");
    check_range(t, "humidity", r.humidity, 0.0, 100.0);
    r.crop = t.text("crop");
    r.disease = t.text("disease");
    out.push_back(std::move(r));
  }
  return out;
}

WeatherTable read_weather(std::istream& in, WeatherVariable variable, const std::string& source) {
  const auto column = value_column(variable);
  csv::Table t(in, source, {"station", "year", "month", column});
  WeatherTable table{variable, {}};
  std::set<std::tuple<std::string, int, int>> keys;
  while (t.next()) {
    WeatherRow r;
    r.station = t.text("station");
    r.year = t.integer("year");
    if (r.year < 1800 || r.year > 3000) t.fail("year", "value " + std::to_string(r.year) + " outside [1800, 3000]");
    r.month = t.integer("month");
    if (r.month < 1 || r.month > 12) t.fail("month", "value " + std::to_string(r.month) + " outside [1, 12]");
    r.value = t.number(column);
    switch (variable) {
      case WeatherVariable::temperature: check_range(t, column, r.value, -60.0, 60.0); break;
      case WeatherVariable::rainfall: check_range(t, column, r.value, 0.0, 1e4); break;
      case WeatherVariable::humidity: check_range(t, column, r.value, 0.0, 100.0); break;
    }
    if (!keys.emplace(r.station, r.year, r.month).second) {
      t.fail_row("duplicate (station, year, month) = (" + r.station + ", " + std::to_string(r.year) + ", " +
                 std::to_string(r.month) + ")");
    }
    table.rows.push_back(std::move(r));
  }
  check_weather_continuity(table, source);
  return table;
}

void write_soil_nutrition(std::ostream& out, const std::vector<geo::ZoneRecord>& zones) {
  csv::write_row(out, {"division", "district", "sub_district", "latitude", "longitude", "aez_number", "aez_name",
                       "met_station", "ph_low", "ph_high", "phosphorus", "potassium", "nitrogen"});
  for (const auto& z : zones) {
    csv::write_row(out, {z.division, z.district, z.sub_district, csv::format_number(z.location.lat()),
                         csv::format_number(z.location.lon()), std::to_string(z.aez_number), z.aez_name,
                         z.met_station, csv::format_number(z.soil.ph_low), csv::format_number(z.soil.ph_high),
                         to_string(z.soil.phosphorus), to_string(z.soil.potassium), nutrient_text(z.soil.nitrogen)});
  }
}

void write_crop_nutrition(std::ostream& out, const std::vector<CropRequirement>& requirements) {
  csv::write_row(out, {"crop", "nitrogen", "phosphorus", "potassium", "ph_low", "ph_high"});
  for (const auto& r : requirements) {
    csv::write_row(out, {r.crop, nutrient_text(r.nitrogen), to_string(r.phosphorus), to_string(r.potassium),
                         optional_number_text(r.ph_low), optional_number_text(r.ph_high)});
  }
}

void write_crop_production(std::ostream& out, const std::vector<YieldRecord>& records) {
  csv::write_row(out, {"temperature", "rainfall", "ph", "crop", "production"});
  for (const auto& r : records) {
    csv::write_row(out, {csv::format_number(r.temperature), csv::format_number(r.rainfall), csv::format_number(r.ph),
                         r.crop, csv::format_number(r.production)});
  }
}

void write_crop_disease(std::ostream& out, const std::vector<DiseaseRecord>& records) {
  csv::write_row(out, {"region", "latitude", "longitude", "temperature", "humidity", "crop", "disease"});
  for (const auto& r : records) {
    csv::write_row(out, {r.region, csv::format_number(r.location.lat()), csv::format_number(r.location.lon()),
                         csv::format_number(r.temperature), csv::format_number(r.humidity), r.crop, r.disease});
  }
}

void write_weather(std::ostream& out, const WeatherTable& table) {
  csv::write_row(out, {"station", "year", "month", value_column(table.variable)});
  for (const auto& r : table.rows) {
    csv::write_row(out, {r.station, std::to_string(r.year), std::to_string(r.month), csv::format_number(r.value)});
  }
}

void load_dataset(const std::filesystem::path& path, Schema schema, Datasets& into) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  const auto source = path.string();
  switch (schema) {
    case Schema::soil_nutrition: into.zones = read_soil_nutrition(in, source); break;
    case Schema::crop_nutrition: into.requirements = read_crop_nutrition(in, source); break;
    case Schema::crop_production: into.yields = read_crop_production(in, source); break;
    case Schema::crop_disease: into.diseases = read_crop_disease(in, source); break;
    case Schema::weather_temperature: into.temperature = read_weather(in, WeatherVariable::temperature, source); break;
    case Schema::weather_rainfall: into.rainfall = read_weather(in, WeatherVariable::rainfall, source); break;
    case Schema::weather_humidity: into.humidity = read_weather(in, WeatherVariable::humidity, source); break;
  }
}

void save_dataset(const std::filesystem::path& path, Schema schema, const Datasets& from) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  switch (schema) {
    case Schema::soil_nutrition: write_soil_nutrition(out, from.zones); break;
    case Schema::crop_nutrition: write_crop_nutrition(out, from.requirements); break;
    case Schema::crop_production: write_crop_production(out, from.yields); break;
    case Schema::crop_disease: write_crop_disease(out, from.diseases); break;
    case Schema::weather_temperature: write_weather(out, from.temperature); break;
    case Schema::weather_rainfall: write_weather(out, from.rainfall); break;
    case Schema::weather_humidity: write_weather(out, from.humidity); break;
  }
  if (!out) throw Error(Errc::io_error, "failed writing " + path.string());
}

Manifest Manifest::standard(std::filesystem::path directory) {
  Manifest m;
  m.directory = std::move(directory);
  for (auto s : kAllSchemas) m.datasets[s] = std::string(to_string(s)) + ".csv";
  return m;
}

Manifest Manifest::read(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io_error, "cannot open bundle manifest " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, "bundle manifest " + file.string() + " is not valid JSON: " + e.what());
  }
  Manifest m;
  m.directory = file.parent_path();
  try {
    const auto& ds = j.at("datasets");
    for (auto s : kAllSchemas) m.datasets[s] = ds.at(std::string(to_string(s))).get<std::string>();
    for (const auto& [key, value] : ds.items()) parse_schema(key);
    if (j.contains("models")) {
      m.disease_model = j["models"].value("disease", m.disease_model);
      m.yield_model = j["models"].value("yield", m.yield_model);
    }
    if (j.contains("training")) m.training = j["training"];
    if (j.contains("pipeline")) m.pipeline = j["pipeline"];
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, "bundle manifest " + file.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(Errc::config_error, "bundle manifest " + file.string() + ": " + e.what());
  }
  return m;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json ds = nlohmann::json::object();
  for (const auto& [schema, file] : datasets) ds[std::string(to_string(schema))] = file;
  return {{"datasets", std::move(ds)},
          {"models", {{"disease", disease_model}, {"yield", yield_model}}},
          {"training", training},
          {"pipeline", pipeline}};
}

void Manifest::write(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + file.string());
  out << to_json().dump(2) << '\n';
}

std::filesystem::path Manifest::path_of(Schema schema) const {
  const auto it = datasets.find(schema);
  if (it == datasets.end()) throw Error(Errc::config_error, "manifest has no " + std::string(to_string(schema)) + " entry");
  return directory / it->second;
}

Datasets load_datasets(const Manifest& manifest) {
  Datasets d;
  for (auto s : kAllSchemas) load_dataset(manifest.path_of(s), s, d);
  return d;
}

void save_datasets(const Manifest& manifest, const Datasets& datasets) {
  std::error_code ec;
  std::filesystem::create_directories(manifest.directory, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + manifest.directory.string() + ": " + ec.message());
  for (auto s : kAllSchemas) save_dataset(manifest.path_of(s), s, datasets);
}

}  // namespace cropcast::data
