#include <algorithm>
#include <cmath>

#include "cropcast/error.hpp"
#include "cropcast/timeseries.hpp"

namespace cropcast::ts {

namespace {

// Partial autocorrelations are kept strictly inside (-1, 1) so the mapped
// polynomial stays stationary even when tanh saturates.
constexpr double kMaxPartial = 1.0 - 1e-10;

std::vector<double> partials_to_coeffs(std::span<const double> partial) {
  const std::size_t p = partial.size();
  std::vector<double> coeffs(partial.begin(), partial.end());
  std::vector<double> work(p);
  for (std::size_t k = 1; k < p; ++k) {
    for (std::size_t j = 0; j < k; ++j) work[j] = coeffs[j] - coeffs[k] * coeffs[k - j - 1];
    for (std::size_t j = 0; j < k; ++j) coeffs[j] = work[j];
  }
  return coeffs;
}

// Step-down recursion. Returns false as soon as a partial autocorrelation
// reaches the unit circle.
bool coeffs_to_partials(std::span<const double> coeffs, std::vector<double>& partial) {
  std::vector<double> a(coeffs.begin(), coeffs.end());
  partial.assign(a.size(), 0.0);
  for (std::size_t k = a.size(); k-- > 0;) {
    const double pk = a[k];
    if (!std::isfinite(pk) || std::abs(pk) >= 1.0) return false;
    partial[k] = pk;
    const double denom = 1.0 - pk * pk;
    std::vector<double> prev(k);
    for (std::size_t j = 0; j < k; ++j) prev[j] = (a[j] + pk * a[k - j - 1]) / denom;
    for (std::size_t j = 0; j < k; ++j) a[j] = prev[j];
  }
  return true;
}

}  // namespace

bool is_stationary(std::span<const double> coeffs) {
  std::vector<double> partial;
  return coeffs_to_partials(coeffs, partial);
}

std::vector<double> constrain_ar(std::span<const double> raw) {
  std::vector<double> partial(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    partial[i] = std::clamp(std::tanh(raw[i]), -kMaxPartial, kMaxPartial);
  }
  return partials_to_coeffs(partial);
}

std::vector<double> unconstrain_ar(std::span<const double> coeffs) {
  std::vector<double> partial;
  if (!coeffs_to_partials(coeffs, partial)) {
    throw Error(Errc::invalid_argument, "AR polynomial is not stationary");
  }
  for (double& v : partial) v = std::atanh(v);
  return partial;
}

}  // namespace cropcast::ts
