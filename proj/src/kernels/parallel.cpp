#include "cropcast/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cropcast::kernels {

namespace parallel {

void haversine_batch(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> targets,
                     std::span<double> out, double radius_km) {
  const auto n = static_cast<std::ptrdiff_t>(targets.size());
  // Validate once outside the region so no exception escapes a worker.
  if (n > 0) out[0] = geo::haversine_distance(origin, targets[0], radius_km);
#pragma omp parallel for schedule(static) if (n > 2048)
  for (std::ptrdiff_t i = 1; i < n; ++i) {
    out[i] = geo::haversine_distance(origin, targets[i], radius_km);
  }
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double gamma) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (x.row(i) - x.row(j)).squaredNorm();
      k(i, j) = k(j, i) = std::exp(-gamma * d2);
    }
  }
  return k;
}

void rbf_cross(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, double gamma,
               Eigen::MatrixXd& out) {
  out.resize(x.rows(), z.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.rows(); ++j) {
      out(i, j) = std::exp(-gamma * (x.row(i) - z.row(j)).squaredNorm());
    }
  }
}

}  // namespace parallel

void haversine_batch(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> targets,
                     std::span<double> out, double radius_km, Execution exec) {
  if (exec == Execution::parallel) {
    parallel::haversine_batch(origin, targets, out, radius_km);
  } else {
    serial::haversine_batch(origin, targets, out, radius_km);
  }
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double gamma, Execution exec) {
  return exec == Execution::parallel ? parallel::rbf_gram(x, gamma) : serial::rbf_gram(x, gamma);
}

void rbf_cross(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, double gamma,
               Eigen::MatrixXd& out, Execution exec) {
  if (exec == Execution::parallel) {
    parallel::rbf_cross(x, z, gamma, out);
  } else {
    serial::rbf_cross(x, z, gamma, out);
  }
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace cropcast::kernels
