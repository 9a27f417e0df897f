#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cropcast/data.hpp"
#include "cropcast/rng.hpp"

namespace cropcast::data::detail {

struct StationClimate {
  std::string name;
  std::string division;
  double lat;
  double lon;
  int aez_number;
  std::string aez_name;
  double mean_temperature;
  double temperature_amplitude;
  double mean_rainfall;
  double rainfall_amplitude;
  double mean_humidity;
  double humidity_amplitude;
};

const std::vector<StationClimate>& station_climates();

/// Monthly temperature, rainfall and humidity for one station over
/// [start_year, start_year + years), appended to the three tables.
void synthesize_weather(const StationClimate& station, int start_year, int years, double noise, Rng& rng,
                        Datasets& into);

}  // namespace cropcast::data::detail
