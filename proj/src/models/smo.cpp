#include <cmath>
#include <limits>
#include <string>

#include "cropcast/error.hpp"
#include "learners.hpp"

namespace cropcast::ml::detail {

namespace {
constexpr double kTau = 1e-12;
}

BinarySvm train_binary_svm(const Eigen::MatrixXd& gram, std::span<const double> y, double cost,
                           double tolerance, long max_iterations) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (gram.rows() != n || gram.cols() != n) throw Error(Errc::invalid_argument, "Gram matrix shape mismatch");

  std::vector<double> alpha(y.size(), 0.0);
  std::vector<double> grad(y.size(), -1.0);
  auto upper = [&](Eigen::Index t) { return alpha[t] >= cost; };
  auto lower = [&](Eigen::Index t) { return alpha[t] <= 0.0; };

  long iter = 0;
  for (;; ++iter) {
    if (iter >= max_iterations) {
      throw Error(Errc::not_converged,
                  "SMO did not converge within " + std::to_string(max_iterations) + " iterations");
    }
    // Working set: i maximizes -y G over I_up, j minimizes the second-order
    // objective decrease over I_low.
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i = t;
        }
      } else if (!lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i = t;
      }
    }
    if (i < 0) break;

    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      double diff;
      if (y[t] > 0) {
        if (lower(t)) continue;
        diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
      } else {
        if (upper(t)) continue;
        diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
      }
      if (diff > 0) {
        double quad = gram(i, i) + gram(t, t) - 2.0 * gram(i, t);
        if (quad <= 0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < tolerance || j < 0) break;

    const double old_i = alpha[i], old_j = alpha[j];
    const double kij = gram(i, j);
    if (y[i] != y[j]) {
      double quad = gram(i, i) + gram(j, j) - 2.0 * kij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > cost) {
          alpha[i] = cost;
          alpha[j] = cost - diff;
        }
      } else if (alpha[j] > cost) {
        alpha[j] = cost;
        alpha[i] = cost + diff;
      }
    } else {
      double quad = gram(i, i) + gram(j, j) - 2.0 * kij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > cost) {
        if (alpha[i] > cost) {
          alpha[i] = cost;
          alpha[j] = sum - cost;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > cost) {
        if (alpha[j] > cost) {
          alpha[j] = cost;
          alpha[i] = sum - cost;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }

    const double di = (alpha[i] - old_i) * y[i];
    const double dj = (alpha[j] - old_j) * y[j];
    for (Eigen::Index t = 0; t < n; ++t) grad[t] += y[t] * (gram(t, i) * di + gram(t, j) * dj);
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0.0;
  long free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

  BinarySvm out;
  out.bias = -rho;
  out.iterations = iter;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha[t] > 0) {
      out.support.push_back(static_cast<int>(t));
      out.coef.push_back(alpha[t] * y[t]);
    }
  }
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().sum().transpose() / n;
  s.scale.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.mean(c)).square().sum() / n;
    s.scale(c) = var > 0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

Eigen::VectorXd Standardizer::apply(std::span<const double> row) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
  for (Eigen::Index c = 0; c < v.size(); ++c) v(c) = (row[static_cast<std::size_t>(c)] - mean(c)) / scale(c);
  return v;
}

}  // namespace cropcast::ml::detail
