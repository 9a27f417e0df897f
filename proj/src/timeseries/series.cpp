#include <cmath>
#include <sstream>

#include "cropcast/error.hpp"
#include "cropcast/timeseries.hpp"

namespace cropcast::ts {

void TimeSeries::validate() const {
  if (values.empty()) throw Error(Errc::invalid_data, "time series is empty");
  if (start_month < 1 || start_month > 12) {
    throw Error(Errc::invalid_data, "start_month must be in 1..12");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(Errc::invalid_data, "non-finite observation at index " + std::to_string(i));
    }
  }
}

std::pair<int, int> TimeSeries::date_at(std::size_t index) const noexcept {
  const long months = static_cast<long>(start_month - 1) + static_cast<long>(index);
  return {start_year + static_cast<int>(months / 12), static_cast<int>(months % 12) + 1};
}

std::size_t SarimaxOrder::min_fit_length() const noexcept {
  return static_cast<std::size_t>(3 * differencing_loss() + p + q + P * s + Q * s + 10);
}

void SarimaxOrder::validate() const {
  if (p < 0 || d < 0 || q < 0 || P < 0 || D < 0 || Q < 0) {
    throw Error(Errc::invalid_argument, "SARIMAX orders must be non-negative");
  }
  if (s < 1) throw Error(Errc::invalid_argument, "seasonal period must be >= 1");
}

std::string SarimaxOrder::to_string() const {
  std::ostringstream out;
  out << '(' << p << ',' << d << ',' << q << ")(" << P << ',' << D << ',' << Q << ',' << s << ')';
  return out.str();
}

std::vector<double> difference(std::span<const double> values, int d, int D, int s) {
  if (d < 0 || D < 0 || s < 1) throw Error(Errc::invalid_argument, "invalid differencing order");
  const std::size_t loss = static_cast<std::size_t>(d + D * s);
  if (values.size() <= loss) {
    throw Error(Errc::insufficient_history, "series of length " + std::to_string(values.size()) +
                                                " too short for differencing loss " +
                                                std::to_string(loss));
  }
  std::vector<double> w(values.begin(), values.end());
  for (int k = 0; k < d; ++k) {
    for (std::size_t t = w.size() - 1; t >= 1; --t) w[t] -= w[t - 1];
    w.erase(w.begin());
  }
  const auto lag = static_cast<std::size_t>(s);
  for (int k = 0; k < D; ++k) {
    for (std::size_t t = w.size() - 1; t >= lag; --t) w[t] -= w[t - lag];
    w.erase(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(lag));
  }
  return w;
}

TimeSeries difference(const TimeSeries& series, int d, int D, int s) {
  TimeSeries out;
  out.values = difference(series.values, d, D, s);
  std::tie(out.start_year, out.start_month) = series.date_at(static_cast<std::size_t>(d + D * s));
  return out;
}

std::vector<double> integration_weights(int d, int D, int s) {
  std::vector<double> poly{1.0};
  auto multiply = [&poly](std::size_t lag) {
    std::vector<double> next(poly.size() + lag, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + lag] -= poly[i];
    }
    poly = std::move(next);
  };
  for (int k = 0; k < d; ++k) multiply(1);
  for (int k = 0; k < D; ++k) multiply(static_cast<std::size_t>(s));
  std::vector<double> c(poly.size() - 1);
  for (std::size_t i = 1; i < poly.size(); ++i) c[i - 1] = -poly[i];
  return c;
}

std::vector<double> integrate(std::span<const double> differenced, std::span<const double> head,
                              int d, int D, int s) {
  const auto c = integration_weights(d, D, s);
  if (head.size() != c.size()) {
    throw Error(Errc::invalid_argument, "integration needs exactly d + D*s initial values");
  }
  std::vector<double> y(head.begin(), head.end());
  y.reserve(head.size() + differenced.size());
  for (double w : differenced) {
    double value = w;
    const std::size_t t = y.size();
    for (std::size_t i = 0; i < c.size(); ++i) value += c[i] * y[t - 1 - i];
    y.push_back(value);
  }
  return y;
}

std::vector<double> expand_ar(std::span<const double> ar, std::span<const double> seasonal_ar,
                              int s) {
  const std::size_t lags = ar.size() + seasonal_ar.size() * static_cast<std::size_t>(s);
  std::vector<double> phi(lags, 0.0);
  for (std::size_t i = 0; i < ar.size(); ++i) phi[i] += ar[i];
  for (std::size_t j = 0; j < seasonal_ar.size(); ++j) {
    const std::size_t base = (j + 1) * static_cast<std::size_t>(s);
    phi[base - 1] += seasonal_ar[j];
    for (std::size_t i = 0; i < ar.size(); ++i) phi[base + i] -= ar[i] * seasonal_ar[j];
  }
  return phi;
}

std::vector<double> expand_ma(std::span<const double> ma, std::span<const double> seasonal_ma,
                              int s) {
  const std::size_t lags = ma.size() + seasonal_ma.size() * static_cast<std::size_t>(s);
  std::vector<double> theta(lags, 0.0);
  for (std::size_t i = 0; i < ma.size(); ++i) theta[i] += ma[i];
  for (std::size_t j = 0; j < seasonal_ma.size(); ++j) {
    const std::size_t base = (j + 1) * static_cast<std::size_t>(s);
    theta[base - 1] += seasonal_ma[j];
    for (std::size_t i = 0; i < ma.size(); ++i) theta[base + i] += ma[i] * seasonal_ma[j];
  }
  return theta;
}

}  // namespace cropcast::ts
