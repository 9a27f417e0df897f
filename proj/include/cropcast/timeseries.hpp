#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cropcast/execution.hpp"

namespace cropcast::ts {

/// Monthly observations starting at (start_year, start_month). No gaps.
struct TimeSeries {
  int start_year = 1970;
  int start_month = 1;
  std::vector<double> values;

  void validate() const;
  std::size_t size() const noexcept { return values.size(); }

  /// Calendar position of observation `index` (0-based), month in 1..12.
  std::pair<int, int> date_at(std::size_t index) const noexcept;
};

/// SARIMAX(p, d, q)(P, D, Q, s).
struct SarimaxOrder {
  int p = 0;
  int d = 0;
  int q = 0;
  int P = 0;
  int D = 0;
  int Q = 0;
  int s = 12;

  /// Estimated parameters excluding exogenous coefficients: p+q+P+Q+1.
  int num_params() const noexcept { return p + q + P + Q + 1; }
  /// Observations consumed by differencing: d + D*s.
  int differencing_loss() const noexcept { return d + D * s; }
  /// Smallest series length fit() accepts.
  std::size_t min_fit_length() const noexcept;

  void validate() const;
  std::string to_string() const;

  friend auto operator<=>(const SarimaxOrder&, const SarimaxOrder&) = default;
};

/// Exogenous regressors: one row per time step, one column per regressor.
using ExogMatrix = Eigen::MatrixXd;

struct FittedSarimax {
  SarimaxOrder order;
  std::vector<double> ar_coeffs;
  std::vector<double> ma_coeffs;
  std::vector<double> seasonal_ar;
  std::vector<double> seasonal_ma;
  std::vector<double> exog_coeffs;
  double innovation_variance = 1.0;
  double log_likelihood = 0.0;
  double aic = 0.0;
  int iterations = 0;

  /// Last d + D*s raw observations, oldest first.
  std::vector<double> training_tail;
  /// One-step-ahead ARMA state mean and covariance (unit innovation scale)
  /// after filtering the whole training sample.
  std::vector<double> state_mean;
  Eigen::MatrixXd state_cov;
  /// Calendar date of the first forecast step.
  int next_year = 0;
  int next_month = 1;

  /// Full constrained parameter vector in log_likelihood() layout.
  std::vector<double> params() const;
  int num_estimated() const noexcept {
    return order.num_params() + static_cast<int>(exog_coeffs.size());
  }
};

struct ForecastResult {
  int horizon = 0;
  std::vector<double> point;
  std::vector<double> lower;
  std::vector<double> upper;
};

struct FitOptions {
  int max_iterations = 500;
  double tolerance = 1e-8;
};

/// Applies (1 - B)^d (1 - B^s)^D. Output length is n - d - D*s.
std::vector<double> difference(std::span<const double> values, int d, int D, int s);
TimeSeries difference(const TimeSeries& series, int d, int D, int s);

/// Inverse of difference(): rebuilds the original series from its first
/// d + D*s values (`head`) and the differenced values.
std::vector<double> integrate(std::span<const double> differenced, std::span<const double> head,
                              int d, int D, int s);

/// Coefficients c_1..c_m of y_t = w_t + sum c_i y_{t-i}, where
/// (1 - B)^d (1 - B^s)^D = 1 - sum c_i B^i.
std::vector<double> integration_weights(int d, int D, int s);

/// Full AR polynomial coefficients phi_1..phi_{p+sP} of
/// (1 - sum ar_i B^i)(1 - sum sar_j B^{js}).
std::vector<double> expand_ar(std::span<const double> ar, std::span<const double> seasonal_ar,
                              int s);
/// Full MA polynomial coefficients theta_1..theta_{q+sQ} of
/// (1 + sum ma_i B^i)(1 + sum sma_j B^{js}).
std::vector<double> expand_ma(std::span<const double> ma, std::span<const double> seasonal_ma,
                              int s);

/// True when every root of 1 - sum coeffs_i z^i lies outside the unit circle.
bool is_stationary(std::span<const double> coeffs);

/// Maps unconstrained reals to coefficients of a stationary AR polynomial
/// through partial autocorrelations (tanh then Durbin-Levinson).
std::vector<double> constrain_ar(std::span<const double> raw);
/// Inverse of constrain_ar(). Throws if `coeffs` is not stationary.
std::vector<double> unconstrain_ar(std::span<const double> coeffs);

/// Exact Gaussian log-likelihood of the differenced series under the ARMA
/// model given by `params` = [ar(p), ma(q), sar(P), sma(Q), exog(k), sigma2].
/// Non-stationary AR or non-invertible MA parameters are rejected.
double log_likelihood(const SarimaxOrder& order, std::span<const double> params,
                      const TimeSeries& series, const ExogMatrix* exog = nullptr);

/// Maximum-likelihood fit from a zero start in the unconstrained space.
FittedSarimax fit(const TimeSeries& series, const SarimaxOrder& order,
                  const ExogMatrix* exog = nullptr, const FitOptions& options = {});

struct OrderScore {
  SarimaxOrder order;
  std::optional<double> aic;
  std::string error;
};

struct SelectionResult {
  SarimaxOrder best;
  std::vector<OrderScore> scores;  // one per grid entry, grid order
};

/// Fits every grid order and returns the minimum-AIC one. Ties go to fewer
/// parameters, then lexicographic (p, d, q, P, D, Q).
SelectionResult select_order_detailed(const TimeSeries& series, std::span<const SarimaxOrder> grid,
                                      Execution exec = Execution::parallel);
SarimaxOrder select_order(const TimeSeries& series, std::span<const SarimaxOrder> grid,
                          Execution exec = Execution::parallel);

/// p, q, P, Q in {0,1,2}, d, D in {0,1}, s = 12, p+q+P+Q <= 4.
std::vector<SarimaxOrder> default_grid();

/// Point forecasts and 95% intervals for the next `horizon` months.
/// `future_exog` must have `horizon` rows when the model has regressors.
ForecastResult forecast(const FittedSarimax& model, int horizon,
                        const ExogMatrix* future_exog = nullptr);

}  // namespace cropcast::ts
