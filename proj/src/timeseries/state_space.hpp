#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cropcast::ts::detail {

/// ARMA model in Harvey's state-space form with unit innovation variance:
///   y_t = alpha_t[0],  alpha_{t+1} = T alpha_t + R e_{t+1},
/// T has phi in its first column and ones on the superdiagonal,
/// R = (1, theta_1, ..., theta_{r-1}).
struct ArmaStateSpace {
  std::vector<double> phi;    // length r, zero padded
  std::vector<double> theta;  // length r, theta[0] = 1
  std::size_t dim() const noexcept { return phi.size(); }

  ArmaStateSpace(std::span<const double> ar, std::span<const double> ma);

  Eigen::MatrixXd transition() const;
  Eigen::VectorXd disturbance() const;
};

/// Covariance of the stationary state distribution (solves P = T P T' + R R').
/// Returns false when the doubling iteration fails to settle.
bool stationary_covariance(const ArmaStateSpace& model, Eigen::MatrixXd& out);

struct FilterResult {
  double sum_log_f = 0.0;   // sum of log prediction-error variances
  double sum_v2_f = 0.0;    // sum of v_t^2 / F_t
  std::size_t n = 0;
  Eigen::VectorXd next_mean;  // a_{n+1|n}
  Eigen::MatrixXd next_cov;   // P_{n+1|n}
  bool ok = true;

  /// Log-likelihood at innovation variance sigma2.
  double log_likelihood(double sigma2) const;
  /// sigma2 maximizing the likelihood, floored.
  double concentrated_variance(double floor) const;
};

/// Exact Kalman filter of `y` under `model`, initialized at the stationary
/// distribution. Once the prediction covariance stops changing the filter
/// continues with the steady-state gain.
FilterResult arma_filter(const ArmaStateSpace& model, std::span<const double> y);

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Quasi-Newton (BFGS) minimizer with central-difference gradients and
/// Armijo backtracking. Non-finite objective values count as +inf.
OptimResult minimize_bfgs(const std::function<double(const Eigen::VectorXd&)>& objective,
                          Eigen::VectorXd start, int max_iterations, double tolerance);

}  // namespace cropcast::ts::detail
