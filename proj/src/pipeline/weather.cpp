#include <algorithm>
#include <cmath>

#include "cropcast/error.hpp"
#include "cropcast/pipeline.hpp"

namespace cropcast::pipeline {

namespace {

struct VariableMonths {
  std::vector<double> values;  // 12 entries for the target year
  std::vector<bool> observed;
};

int month_index(int year, int month) { return year * 12 + (month - 1); }

VariableMonths months_for(const data::WeatherTable& table, std::string_view station, int year,
                          const ForecastOptions& options) {
  const auto series = table.series(station);
  const auto [first_year, first_month] = series.date_at(0);
  const auto [last_year, last_month] = series.date_at(series.size() - 1);
  const auto name = std::string(data::to_string(table.variable));
  if (year < first_year || year > last_year + options.max_horizon_years) {
    throw Error(Errc::year_out_of_range, "year " + std::to_string(year) + " is outside " + std::to_string(first_year) +
                                             ".." + std::to_string(last_year + options.max_horizon_years) +
                                             " for station '" + std::string(station) + "' " + name);
  }
  if (year == first_year && first_month > 1) {
    throw Error(Errc::insufficient_history, "station '" + std::string(station) + "' " + name +
                                                " history starts after January " + std::to_string(year));
  }

  VariableMonths out{std::vector<double>(12, 0.0), std::vector<bool>(12, false)};
  const int start = month_index(first_year, first_month);
  const int target = month_index(year, 1);
  const int recorded = static_cast<int>(series.size());
  for (int m = 0; m < 12; ++m) {
    const int pos = target + m - start;
    if (pos < recorded) {
      out.values[m] = series.values[static_cast<std::size_t>(pos)];
      out.observed[m] = true;
    }
  }
  if (std::all_of(out.observed.begin(), out.observed.end(), [](bool b) { return b; })) return out;

  const auto& order = order_for(table.variable);
  if (series.size() < order.min_fit_length()) {
    throw Error(Errc::insufficient_history, "station '" + std::string(station) + "' has " +
                                                std::to_string(series.size()) + " months of " + name + ", the " +
                                                order.to_string() + " model needs " +
                                                std::to_string(order.min_fit_length()));
  }
  const auto model = ts::fit(series, order);
  const int horizon = month_index(year, 12) - month_index(last_year, last_month);
  const auto fc = ts::forecast(model, horizon);
  for (int m = 0; m < 12; ++m) {
    if (out.observed[m]) continue;
    const int step = month_index(year, m + 1) - month_index(last_year, last_month);
    double v = fc.point[static_cast<std::size_t>(step - 1)];
    if (table.variable == data::WeatherVariable::rainfall) v = std::max(v, 0.0);
    if (table.variable == data::WeatherVariable::humidity) v = std::clamp(v, 0.0, 100.0);
    out.values[m] = v;
  }
  return out;
}

}  // namespace

const ts::SarimaxOrder& order_for(data::WeatherVariable v) noexcept {
  switch (v) {
    case data::WeatherVariable::temperature: return kTemperatureOrder;
    case data::WeatherVariable::rainfall: return kRainfallOrder;
    case data::WeatherVariable::humidity: return kHumidityOrder;
  }
  return kTemperatureOrder;
}

void MonthlyWeather::validate() const {
  if (months.size() != 12) throw Error(Errc::invalid_data, "monthly weather needs 12 months");
  for (std::size_t i = 0; i < months.size(); ++i) {
    const auto& m = months[i];
    if (m.month != static_cast<int>(i) + 1) throw Error(Errc::invalid_data, "monthly weather months out of order");
    if (!std::isfinite(m.temperature) || !std::isfinite(m.rainfall) || !std::isfinite(m.humidity)) {
      throw Error(Errc::invalid_data, "monthly weather has a non-finite value in month " + std::to_string(m.month));
    }
    if (m.rainfall < 0.0) throw Error(Errc::invalid_data, "negative rainfall in month " + std::to_string(m.month));
    if (m.humidity < 0.0 || m.humidity > 100.0) {
      throw Error(Errc::invalid_data, "humidity outside [0, 100] in month " + std::to_string(m.month));
    }
  }
}

double MonthlyWeather::mean_temperature() const {
  double sum = 0.0;
  for (const auto& m : months) sum += m.temperature;
  return sum / static_cast<double>(months.size());
}

double MonthlyWeather::total_rainfall() const {
  double sum = 0.0;
  for (const auto& m : months) sum += m.rainfall;
  return sum;
}

nlohmann::json MonthlyWeather::to_json() const {
  auto list = nlohmann::json::array();
  for (const auto& m : months) {
    list.push_back({{"month", m.month},
                    {"temperature", m.temperature},
                    {"rainfall", m.rainfall},
                    {"humidity", m.humidity},
                    {"observed", m.observed}});
  }
  return {{"station", station}, {"year", year}, {"months", std::move(list)}};
}

MonthlyWeather forecast_weather(std::string_view station, int year, const data::WeatherTable& temperature,
                                const data::WeatherTable& rainfall, const data::WeatherTable& humidity,
                                const ForecastOptions& options) {
  if (options.max_horizon_years < 0) throw Error(Errc::invalid_argument, "max_horizon_years must be >= 0");
  const auto t = months_for(temperature, station, year, options);
  const auto r = months_for(rainfall, station, year, options);
  const auto h = months_for(humidity, station, year, options);
  MonthlyWeather out{std::string(station), year, {}};
  for (int m = 0; m < 12; ++m) {
    out.months.push_back({m + 1, t.values[m], r.values[m], h.values[m], t.observed[m] && r.observed[m] && h.observed[m]});
  }
  out.validate();
  return out;
}

}  // namespace cropcast::pipeline
