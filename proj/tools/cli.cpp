#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cropcast/error.hpp"
#include "cropcast/service.hpp"
#include "cropcast/timeseries.hpp"

namespace cropcast::cli {

namespace {

using nlohmann::json;

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string render(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& cells) {
    std::string text;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) text += "  ";
      text += cells[c];
      if (c + 1 < cells.size()) text.append(width[c] - cells[c].size(), ' ');
    }
    out << text << "\n";
  };
  line(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& r : rows) line(r);
  return out.str();
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) s += sep;
    s += items[i];
  }
  return s;
}

std::vector<std::string> labels_of(const ml::LabeledTable& t, const std::vector<int>& indices) {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(t.label_vocabulary[static_cast<std::size_t>(i)]);
  return out;
}

void require_both_sides(const ml::Split& split) {
  const auto& vocab = split.train.label_vocabulary;
  std::vector<int> train(vocab.size()), test(vocab.size());
  for (int l : split.train.labels) ++train[static_cast<std::size_t>(l)];
  for (int l : split.test.labels) ++test[static_cast<std::size_t>(l)];
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (train[i] == 0 || test[i] == 0) {
      throw Error(Errc::invalid_data, "disease data is too small to split: label '" + vocab[i] +
                                          "' does not appear in both the training and the test rows");
    }
  }
}

// Writes `j` to `path` byte-for-byte as dump(); "-" prints it to `out`.
void emit_json(const json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) return;
  if (path == "-") {
    out << j.dump() << "\n";
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::io_error, "cannot write " + path);
  f << j.dump();
  if (!f) throw Error(Errc::io_error, "cannot write " + path);
}

template <class Reader>
auto read_csv(const std::string& path, Reader reader) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  return reader(in, path);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::io_error, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(Errc::io_error, "cannot write " + path.string());
}

std::size_t rows_of(const data::Datasets& d, data::Schema s) {
  switch (s) {
    case data::Schema::soil_nutrition: return d.zones.size();
    case data::Schema::crop_nutrition: return d.requirements.size();
    case data::Schema::crop_production: return d.yields.size();
    case data::Schema::crop_disease: return d.diseases.size();
    case data::Schema::weather_temperature: return d.temperature.rows.size();
    case data::Schema::weather_rainfall: return d.rainfall.rows.size();
    case data::Schema::weather_humidity: return d.humidity.rows.size();
  }
  return 0;
}

json model_summary(const ml::TrainedModel& m, const std::filesystem::path& path, std::size_t rows) {
  json j = {{"kind", ml::to_string(m.kind())},
            {"path", path.string()},
            {"rows", rows},
            {"features", m.arity()},
            {"hyperparams", m.hyperparams().to_json(m.kind())}};
  if (ml::is_classifier(m.kind())) j["classes"] = m.label_vocabulary().size();
  return j;
}

struct Options {
  std::string json_path;

  // gen-data
  std::string out_dir;
  std::uint64_t seed = 42;
  int years = 50;
  int stations = 8;
  int rows = 2000;
  bool fixture = false;

  // bundle commands
  std::string bundle;
  std::optional<std::uint64_t> seed_override;
  std::string disease_data;
  std::string yield_data;
  std::string station;
  int year = 0;
  bool select = false;
  double lat = 0.0;
  double lon = 0.0;
  std::vector<std::string> exclude;

  // serve
  std::string config;
  std::string host;
  int port = 0;
  std::string static_dir;
};

int gen_data(const Options& o, std::ostream& out) {
  data::Datasets d;
  json training;
  if (o.fixture) {
    d = data::fixture_datasets();
    training = data::fixture_training();
  } else {
    data::GeneratorConfig g;
    g.seed = o.seed;
    g.years = o.years;
    g.stations = o.stations;
    g.yield_rows = o.rows;
    g.disease_rows = o.rows;
    d = data::generate_synthetic(g);
    training = synthetic_training(o.seed);
  }
  auto manifest = data::Manifest::standard(o.out_dir);
  manifest.training = training;
  data::save_datasets(manifest, d);
  manifest.write(manifest.directory / "manifest.json");

  json counts = json::object();
  std::vector<std::vector<std::string>> rows;
  for (auto s : data::kAllSchemas) {
    counts[manifest.datasets.at(s)] = rows_of(d, s);
    rows.push_back({manifest.datasets.at(s), std::to_string(rows_of(d, s))});
  }
  const json report = {{"manifest", (manifest.directory / "manifest.json").string()},
                       {"fixture", o.fixture},
                       {"seed", o.fixture ? json(nullptr) : json(o.seed)},
                       {"rows", counts}};
  if (o.json_path != "-") {
    out << render({"File", "Rows"}, rows);
    out << "manifest: " << (manifest.directory / "manifest.json").string() << "\n";
  }
  emit_json(report, o.json_path, out);
  return 0;
}

int train(const Options& o, std::ostream& out) {
  const auto manifest = data::Manifest::read(o.bundle);
  auto training = pipeline::TrainingConfig::from_json(manifest.training);
  if (o.seed_override) training.seed = *o.seed_override;
  const auto d = data::load_datasets(manifest);
  const auto disease = pipeline::train_disease_model(d, training);
  const auto yield = pipeline::train_yield_model(d, training);
  write_text(manifest.disease_model_path(), disease.to_json().dump());
  write_text(manifest.yield_model_path(), yield.to_json().dump());

  const json report = {{"seed", training.seed},
                       {"disease_model", model_summary(disease, manifest.disease_model_path(), d.diseases.size())},
                       {"yield_model", model_summary(yield, manifest.yield_model_path(), d.yields.size())}};
  if (o.json_path != "-") {
    out << render({"Model", "Kind", "Rows", "Features", "File"},
                  {{"disease", std::string(ml::to_string(disease.kind())), std::to_string(d.diseases.size()),
                    std::to_string(disease.arity()), manifest.disease_model_path().string()},
                   {"yield", std::string(ml::to_string(yield.kind())), std::to_string(d.yields.size()),
                    std::to_string(yield.arity()), manifest.yield_model_path().string()}});
  }
  emit_json(report, o.json_path, out);
  return 0;
}

int evaluate_command(const Options& o, std::ostream& out) {
  std::vector<data::DiseaseRecord> diseases;
  std::vector<data::YieldRecord> yields;
  pipeline::TrainingConfig training;
  if (!o.bundle.empty()) {
    const auto manifest = data::Manifest::read(o.bundle);
    training = pipeline::TrainingConfig::from_json(manifest.training);
    auto d = data::load_datasets(manifest);
    diseases = std::move(d.diseases);
    yields = std::move(d.yields);
  } else {
    diseases = read_csv(o.disease_data, [](std::istream& in, const std::string& src) { return data::read_crop_disease(in, src); });
    yields = read_csv(o.yield_data, [](std::istream& in, const std::string& src) { return data::read_crop_production(in, src); });
  }
  if (o.seed_override) training.seed = *o.seed_override;
  const auto report = evaluate(diseases, yields, training);
  if (o.json_path != "-") {
    out << "Disease prediction models\n" << classification_table(report) << "\n";
    out << "Production prediction models\n" << regression_table(report);
  }
  emit_json(report.to_json(), o.json_path, out);
  return 0;
}

int forecast_command(const Options& o, std::ostream& out) {
  const auto manifest = data::Manifest::read(o.bundle);
  const auto config = pipeline::PipelineConfig::from_json(manifest.pipeline);
  const auto d = data::load_datasets(manifest);
  const auto weather = pipeline::forecast_weather(o.station, o.year, d.temperature, d.rainfall, d.humidity,
                                                  {config.max_horizon_years});
  json report = weather.to_json();
  std::vector<std::vector<std::string>> selection_rows;
  if (o.select) {
    json selection = json::object();
    const auto grid = ts::default_grid();
    for (auto v : {data::WeatherVariable::temperature, data::WeatherVariable::rainfall, data::WeatherVariable::humidity}) {
      const auto result = ts::select_order_detailed(d.weather(v).series(o.station), grid);
      json scores = json::array();
      std::optional<double> best_aic;
      for (const auto& s : result.scores) {
        scores.push_back({{"order", s.order.to_string()},
                          {"aic", s.aic ? json(*s.aic) : json(nullptr)},
                          {"error", s.error}});
        if (s.order == result.best) best_aic = s.aic;
      }
      const auto name = std::string(data::to_string(v));
      selection[name] = {{"best", result.best.to_string()},
                         {"aic", best_aic ? json(*best_aic) : json(nullptr)},
                         {"configured", pipeline::order_for(v).to_string()},
                         {"scores", std::move(scores)}};
      selection_rows.push_back({name, result.best.to_string(), best_aic ? fixed(*best_aic, 2) : "-",
                                pipeline::order_for(v).to_string()});
    }
    report = {{"weather", std::move(report)}, {"selection", std::move(selection)}};
  }
  if (o.json_path != "-") {
    out << weather_table(weather);
    if (o.select) out << "\n" << render({"Variable", "Best order", "AIC", "Configured order"}, selection_rows);
  }
  emit_json(report, o.json_path, out);
  return 0;
}

int recommend_command(const Options& o, std::ostream& out) {
  const auto bundle = pipeline::load_bundle(o.bundle);
  const auto rec = pipeline::recommend(bundle, {geo::GeoPoint(o.lat, o.lon), o.year, o.exclude});
  if (o.json_path != "-") {
    out << "Zone: " << rec.zone.sub_district << ", " << rec.zone.district << " (station " << rec.zone.met_station << ")\n";
    out << "Primary crops: " << join(rec.primary_crops, ", ") << "\n\n";
    out << recommendation_table(rec);
  }
  emit_json(rec.to_json(), o.json_path, out);
  return 0;
}

int serve_command(const Options& o, CLI::App& cmd) {
  service::ServiceConfig config;
  if (!o.config.empty()) config = service::ServiceConfig::read(o.config);
  config.apply_env(service::ServiceConfig::process_env());
  if (cmd.count("--bundle")) config.bundle = o.bundle;
  if (cmd.count("--host")) config.host = o.host;
  if (cmd.count("--port")) config.port = o.port;
  if (cmd.count("--static")) config.static_dir = o.static_dir;
  if (config.bundle.empty()) throw CLI::ValidationError("--bundle", "a bundle manifest is required (flag, config or CROPCAST_BUNDLE)");
  return service::run(config);
}

}  // namespace

nlohmann::json EvaluationReport::to_json() const {
  json cls = json::array();
  for (const auto& [kind, r] : classification) {
    auto j = r.to_json();
    j["model"] = ml::to_string(kind);
    cls.push_back(std::move(j));
  }
  json reg = json::array();
  for (const auto& [kind, r] : regression) {
    auto j = r.to_json();
    j["model"] = ml::to_string(kind);
    reg.push_back(std::move(j));
  }
  return {{"seed", seed},
          {"test_fraction", test_fraction},
          {"disease_rows", {{"train", disease_train_rows}, {"test", disease_test_rows}}},
          {"yield_rows", {{"train", yield_train_rows}, {"test", yield_test_rows}}},
          {"classification", std::move(cls)},
          {"regression", std::move(reg)}};
}

EvaluationReport evaluate(const std::vector<data::DiseaseRecord>& diseases, const std::vector<data::YieldRecord>& yields,
                          const pipeline::TrainingConfig& training, double test_fraction) {
  EvaluationReport report;
  report.seed = training.seed;
  report.test_fraction = test_fraction;

  const auto disease = ml::train_test_split(pipeline::disease_table(diseases), test_fraction, training.seed);
  require_both_sides(disease);
  report.disease_train_rows = disease.train.size();
  report.disease_test_rows = disease.test.size();
  const auto truth = labels_of(disease.test, disease.test.labels);
  for (auto kind : ml::kClassifiers) {
    const auto model = ml::train_classifier(kind, disease.train, training.seed, training.hyperparams_for(kind));
    const auto predicted = labels_of(disease.test, model.predict_classes(disease.test.rows));
    report.classification.emplace_back(kind, metrics::classification_report(truth, predicted));
  }

  const auto yield = ml::train_test_split(pipeline::yield_table(yields), test_fraction, training.seed);
  report.yield_train_rows = yield.train.size();
  report.yield_test_rows = yield.test.size();
  for (auto kind : ml::kRegressors) {
    const auto model = ml::train_regressor(kind, yield.train, training.seed, training.hyperparams_for(kind));
    report.regression.emplace_back(kind, metrics::regression_report(yield.test.targets, model.predict_values(yield.test.rows)));
  }
  return report;
}

std::string classification_table(const EvaluationReport& report) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [kind, r] : report.classification) {
    rows.push_back({std::string(ml::to_string(kind)), fixed(r.accuracy, 2), fixed(r.precision, 2), fixed(r.recall, 2),
                    fixed(r.f1, 2)});
  }
  return render({"Model", "Accuracy", "Precision", "Recall", "F1 Score"}, rows);
}

std::string regression_table(const EvaluationReport& report) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [kind, r] : report.regression) {
    rows.push_back({std::string(ml::to_string(kind)), fixed(r.mse, 2), fixed(r.rmse, 2),
                    r.r_squared_defined ? fixed(r.r_squared, 3) : "undefined"});
  }
  return render({"Model", "MSE", "RMSE", "R-Squared"}, rows);
}

std::string recommendation_table(const pipeline::Recommendation& rec) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < rec.ranking.size(); ++i) {
    const auto& a = rec.ranking[i];
    rows.push_back({std::to_string(i + 1), a.crop, fixed(a.predicted_production, 2),
                    a.diseases.empty() ? "Not found" : join(a.diseases, ", ")});
  }
  return render({"Final Order", "Crop", "Production (ton/hectare)", "Disease"}, rows);
}

std::string weather_table(const pipeline::MonthlyWeather& weather) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : weather.months) {
    rows.push_back({std::to_string(m.month), fixed(m.temperature, 2), fixed(m.rainfall, 2), fixed(m.humidity, 2),
                    m.observed ? "observed" : "forecast"});
  }
  std::ostringstream out;
  out << "Station " << weather.station << ", " << weather.year << "\n";
  out << render({"Month", "Temperature (C)", "Rainfall (mm)", "Humidity (%)", "Source"}, rows);
  return out.str();
}

nlohmann::json synthetic_training(std::uint64_t seed) {
  return {{"seed", seed},
          {"disease_model", "SVC"},
          {"yield_model", "DTR"},
          {"hyperparams", {{"SVC", {{"cost", 100.0}, {"gamma", 1.0}}}}}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crop recommendation from location, weather forecasts and soil nutrients", "cropcast"};
  app.require_subcommand(1, 1);
  Options o;
  const auto json_flag = [&](CLI::App* cmd) {
    cmd->add_option("--json", o.json_path, "Write the JSON result to this file ('-' prints it instead of the table)");
  };

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic (or fixture) data bundle");
  gen->add_option("--out", o.out_dir, "Output directory")->required();
  gen->add_option("--seed", o.seed, "Generator seed")->capture_default_str();
  gen->add_option("--years", o.years, "Years of monthly weather per station")->capture_default_str();
  gen->add_option("--stations", o.stations, "Number of weather stations")->capture_default_str();
  gen->add_option("--rows", o.rows, "Rows in the yield and disease datasets")->capture_default_str();
  gen->add_flag("--fixture", o.fixture, "Write the Rangpur fixture bundle instead");
  json_flag(gen);

  auto* tr = app.add_subcommand("train", "Train the disease and yield models of a bundle");
  tr->add_option("--bundle", o.bundle, "Bundle manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--seed", o.seed_override, "Override the manifest's training seed");
  json_flag(tr);

  auto* ev = app.add_subcommand("evaluate", "Compare the classifiers and regressors on a held-out split");
  auto* ev_bundle = ev->add_option("--bundle", o.bundle, "Bundle manifest")->check(CLI::ExistingFile);
  auto* ev_disease = ev->add_option("--disease-data", o.disease_data, "crop_disease CSV")->check(CLI::ExistingFile);
  auto* ev_yield = ev->add_option("--yield-data", o.yield_data, "crop_production CSV")->check(CLI::ExistingFile);
  ev->add_option("--seed", o.seed_override, "Split and training seed");
  ev_bundle->excludes(ev_disease)->excludes(ev_yield);
  ev_disease->needs(ev_yield);
  ev_yield->needs(ev_disease);
  json_flag(ev);

  auto* fc = app.add_subcommand("forecast", "Monthly weather for a station and year");
  fc->add_option("--bundle", o.bundle, "Bundle manifest")->required()->check(CLI::ExistingFile);
  fc->add_option("--station", o.station, "Weather station")->required();
  fc->add_option("--year", o.year, "Target year")->required();
  fc->add_flag("--select", o.select, "Also run AIC order selection on the default grid");
  json_flag(fc);

  auto* rc = app.add_subcommand("recommend", "Ranked crop list for a location and year");
  rc->add_option("--bundle", o.bundle, "Bundle manifest")->required()->check(CLI::ExistingFile);
  rc->add_option("--lat", o.lat, "Latitude")->required()->check(CLI::Range(-90.0, 90.0));
  rc->add_option("--lon", o.lon, "Longitude")->required()->check(CLI::Range(-180.0, 180.0));
  rc->add_option("--year", o.year, "Target year")->required();
  rc->add_option("--exclude", o.exclude, "Crop to leave out (repeatable)");
  json_flag(rc);

  auto* sv = app.add_subcommand("serve", "Run the HTTP API");
  sv->add_option("--config", o.config, "Service config JSON")->check(CLI::ExistingFile);
  sv->add_option("--bundle", o.bundle, "Bundle manifest");
  sv->add_option("--host", o.host, "Listen address");
  sv->add_option("--port", o.port, "Listen port")->check(CLI::Range(0, 65535));
  sv->add_option("--static", o.static_dir, "Directory of UI assets served at /");

  try {
    app.parse(argc, argv);
    if (*ev && o.bundle.empty() && o.disease_data.empty()) {
      throw CLI::RequiredError("evaluate needs --bundle or --disease-data with --yield-data");
    }
    if (*gen) return gen_data(o, out);
    if (*tr) return train(o, out);
    if (*ev) return evaluate_command(o, out);
    if (*fc) return forecast_command(o, out);
    if (*rc) return recommend_command(o, out);
    return serve_command(o, *sv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: ";
    if (!e.stage().empty()) err << "[" << e.stage() << "] ";
    err << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace cropcast::cli
