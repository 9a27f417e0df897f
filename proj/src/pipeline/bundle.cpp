#include <algorithm>
#include <fstream>

#include "cropcast/error.hpp"
#include "cropcast/pipeline.hpp"

namespace cropcast::pipeline {

namespace {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known, const char* section) {
  if (!j.is_object()) throw Error(Errc::config_error, std::string(section) + " section must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw Error(Errc::config_error, "unknown key '" + key + "' in " + section + " section");
    }
  }
}

ml::TrainedModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open model " + path.string());
  try {
    return ml::TrainedModel::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_data, "model " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace

ml::Hyperparams TrainingConfig::hyperparams_for(ml::ModelKind kind) const {
  const auto it = hyperparams.find(kind);
  return it == hyperparams.end() ? ml::Hyperparams::defaults(kind) : it->second;
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"seed", "disease_model", "yield_model", "hyperparams"}, "training");
  TrainingConfig c;
  try {
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("disease_model")) c.disease_kind = ml::parse_model_kind(j.at("disease_model").get<std::string>());
    if (j.contains("yield_model")) c.yield_kind = ml::parse_model_kind(j.at("yield_model").get<std::string>());
    if (j.contains("hyperparams")) {
      const auto& h = j.at("hyperparams");
      if (!h.is_object()) throw Error(Errc::config_error, "training hyperparams must be a JSON object");
      for (const auto& [name, params] : h.items()) {
        const auto kind = ml::parse_model_kind(name);
        c.hyperparams[kind] = ml::Hyperparams::from_json(kind, params);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, std::string("training section: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::config_error) throw;
    throw Error(Errc::config_error, std::string("training section: ") + e.what());
  }
  if (!ml::is_classifier(c.disease_kind)) throw Error(Errc::config_error, "disease_model must be a classifier kind");
  if (ml::is_classifier(c.yield_kind)) throw Error(Errc::config_error, "yield_model must be a regressor kind");
  return c;
}

nlohmann::json TrainingConfig::to_json() const {
  nlohmann::json h = nlohmann::json::object();
  for (const auto& [kind, params] : hyperparams) h[std::string(ml::to_string(kind))] = params.to_json(kind);
  return {{"seed", seed},
          {"disease_model", ml::to_string(disease_kind)},
          {"yield_model", ml::to_string(yield_kind)},
          {"hyperparams", std::move(h)}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"ph_filter", "max_horizon_years"}, "pipeline");
  PipelineConfig c;
  try {
    if (j.contains("ph_filter")) c.ph_filter = j.at("ph_filter").get<bool>();
    if (j.contains("max_horizon_years")) c.max_horizon_years = j.at("max_horizon_years").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, std::string("pipeline section: ") + e.what());
  }
  if (c.max_horizon_years < 0 || c.max_horizon_years > 50) {
    throw Error(Errc::config_error, "max_horizon_years must be in [0, 50]");
  }
  return c;
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"ph_filter", ph_filter}, {"max_horizon_years", max_horizon_years}};
}

ml::TrainedModel train_disease_model(const data::Datasets& datasets, const TrainingConfig& config) {
  if (datasets.diseases.empty()) throw Error(Errc::invalid_data, "crop disease table is empty");
  return ml::train_classifier(config.disease_kind, disease_table(datasets.diseases), config.seed,
                              config.hyperparams_for(config.disease_kind));
}

ml::TrainedModel train_yield_model(const data::Datasets& datasets, const TrainingConfig& config) {
  if (datasets.yields.empty()) throw Error(Errc::invalid_data, "crop production table is empty");
  return ml::train_regressor(config.yield_kind, yield_table(datasets.yields), config.seed,
                             config.hyperparams_for(config.yield_kind));
}

Bundle build_bundle(data::Datasets datasets, const TrainingConfig& training, const PipelineConfig& config) {
  Bundle b;
  b.disease_model = train_disease_model(datasets, training);
  b.yield_model = train_yield_model(datasets, training);
  b.datasets = std::move(datasets);
  b.config = config;
  return b;
}

Bundle load_bundle(const std::filesystem::path& manifest_file) {
  const auto manifest = data::Manifest::read(manifest_file);
  const auto training = TrainingConfig::from_json(manifest.training);
  Bundle b;
  b.config = PipelineConfig::from_json(manifest.pipeline);
  b.datasets = data::load_datasets(manifest);
  const auto disease_path = manifest.disease_model_path();
  const auto yield_path = manifest.yield_model_path();
  b.disease_model = std::filesystem::exists(disease_path) ? read_model(disease_path) : train_disease_model(b.datasets, training);
  b.yield_model = std::filesystem::exists(yield_path) ? read_model(yield_path) : train_yield_model(b.datasets, training);
  if (!ml::is_classifier(b.disease_model.kind())) throw Error(Errc::config_error, "disease model is not a classifier");
  if (ml::is_classifier(b.yield_model.kind())) throw Error(Errc::config_error, "yield model is not a regressor");
  return b;
}

}  // namespace cropcast::pipeline
