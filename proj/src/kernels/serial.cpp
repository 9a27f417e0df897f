#include "cropcast/kernels.hpp"

#include <cmath>

namespace cropcast::kernels::serial {

void haversine_batch(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> targets,
                     std::span<double> out, double radius_km) {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out[i] = geo::haversine_distance(origin, targets[i], radius_km);
  }
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double gamma) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
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
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.rows(); ++j) {
      out(i, j) = std::exp(-gamma * (x.row(i) - z.row(j)).squaredNorm());
    }
  }
}

}  // namespace cropcast::kernels::serial
