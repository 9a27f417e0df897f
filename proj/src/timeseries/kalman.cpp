#include <algorithm>
#include <cmath>
#include <numbers>

#include "state_space.hpp"

namespace cropcast::ts::detail {

ArmaStateSpace::ArmaStateSpace(std::span<const double> ar, std::span<const double> ma) {
  const std::size_t r = std::max(ar.size(), ma.size() + 1);
  phi.assign(r, 0.0);
  theta.assign(r, 0.0);
  std::copy(ar.begin(), ar.end(), phi.begin());
  theta[0] = 1.0;
  std::copy(ma.begin(), ma.end(), theta.begin() + 1);
}

Eigen::MatrixXd ArmaStateSpace::transition() const {
  const auto r = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    t(i, 0) = phi[static_cast<std::size_t>(i)];
    if (i + 1 < r) t(i, i + 1) = 1.0;
  }
  return t;
}

Eigen::VectorXd ArmaStateSpace::disturbance() const {
  return Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
}

bool stationary_covariance(const ArmaStateSpace& model, Eigen::MatrixXd& out) {
  const Eigen::VectorXd rvec = model.disturbance();
  Eigen::MatrixXd a = model.transition();
  Eigen::MatrixXd p = rvec * rvec.transpose();
  // Doubling: after k steps p = sum_{j < 2^k} T^j R R' T'^j.
  for (int iter = 0; iter < 80; ++iter) {
    const Eigen::MatrixXd increment = a * p * a.transpose();
    p += increment;
    const double scale = p.cwiseAbs().maxCoeff();
    if (!std::isfinite(scale) || scale > 1e12) return false;
    if (increment.cwiseAbs().maxCoeff() <= 1e-17 * scale) {
      out = 0.5 * (p + p.transpose());
      return true;
    }
    a = a * a;
  }
  return false;
}

double FilterResult::log_likelihood(double sigma2) const {
  const double nd = static_cast<double>(n);
  return -0.5 * (nd * std::log(2.0 * std::numbers::pi) + nd * std::log(sigma2) + sum_log_f +
                 sum_v2_f / sigma2);
}

double FilterResult::concentrated_variance(double floor) const {
  return std::max(sum_v2_f / static_cast<double>(n), floor);
}

FilterResult arma_filter(const ArmaStateSpace& model, std::span<const double> y) {
  FilterResult res;
  const std::size_t r = model.dim();
  Eigen::MatrixXd p0;
  if (!stationary_covariance(model, p0)) {
    res.ok = false;
    return res;
  }

  const auto& phi = model.phi;
  const auto& theta = model.theta;
  std::vector<double> a(r, 0.0);
  std::vector<double> p(r * r);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      p[i * r + j] = p0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  std::vector<double> g(r), upd(r * r), next(r * r);
  bool steady = false;

  for (double obs : y) {
    const double f = p[0];
    if (!(f > 0.0) || !std::isfinite(f)) {
      res.ok = false;
      return res;
    }
    const double v = obs - a[0];
    res.sum_log_f += std::log(f);
    res.sum_v2_f += v * v / f;
    ++res.n;

    for (std::size_t i = 0; i < r; ++i) g[i] = p[i * r];
    const double scaled = v / f;
    for (std::size_t i = 0; i < r; ++i) a[i] += g[i] * scaled;
    // Predicted mean: a' = T a.
    const double head = a[0];
    for (std::size_t i = 0; i < r; ++i) a[i] = phi[i] * head + (i + 1 < r ? a[i + 1] : 0.0);

    if (steady) continue;

    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) upd[i * r + j] = p[i * r + j] - g[i] * g[j] / f;
    }
    // next = T upd T' + R R', using the companion structure of T.
    const double u00 = upd[0];
    double change = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        double value = phi[i] * phi[j] * u00 + theta[i] * theta[j];
        if (j + 1 < r) value += phi[i] * upd[j + 1];
        if (i + 1 < r) value += phi[j] * upd[(i + 1) * r];
        if (i + 1 < r && j + 1 < r) value += upd[(i + 1) * r + j + 1];
        next[i * r + j] = value;
        change = std::max(change, std::abs(value - p[i * r + j]));
      }
    }
    p.swap(next);
    if (change < 1e-13) steady = true;
  }

  const auto rr = static_cast<Eigen::Index>(r);
  res.next_mean = Eigen::Map<const Eigen::VectorXd>(a.data(), rr);
  res.next_cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::RowMajor>>(p.data(), rr, rr);
  return res;
}

}  // namespace cropcast::ts::detail
