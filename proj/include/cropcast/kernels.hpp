#pragma once

#include <span>

#include <Eigen/Dense>

#include "cropcast/execution.hpp"
#include "cropcast/geo.hpp"

// Data-parallel inner loops. Each kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::parallel; the dispatching
// overloads pick one by Execution.
namespace cropcast::kernels {

namespace serial {
void haversine_batch(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> targets,
                     std::span<double> out, double radius_km);
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double gamma);
void rbf_cross(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, double gamma,
               Eigen::MatrixXd& out);
}  // namespace serial

namespace parallel {
void haversine_batch(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> targets,
                     std::span<double> out, double radius_km);
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double gamma);
void rbf_cross(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, double gamma,
               Eigen::MatrixXd& out);
}  // namespace parallel

void haversine_batch(const geo::GeoPoint& origin, std::span<const geo::GeoPoint> targets,
                     std::span<double> out, double radius_km, Execution exec);

/// K(i, j) = exp(-gamma * |x_i - x_j|^2) over the rows of `x`.
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& x, double gamma, Execution exec);

/// out(i, j) = exp(-gamma * |x_i - z_j|^2).
void rbf_cross(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, double gamma,
               Eigen::MatrixXd& out, Execution exec);

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads() noexcept;

}  // namespace cropcast::kernels
