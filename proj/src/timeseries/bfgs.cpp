#include <cmath>
#include <limits>

#include "state_space.hpp"

namespace cropcast::ts::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxStep = 2.0;

double safe_eval(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : kInf;
}

Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double fx) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = safe_eval(f, probe);
    probe(i) = x(i) - h;
    const double down = safe_eval(f, probe);
    probe(i) = x(i);
    if (std::isfinite(up) && std::isfinite(down)) {
      grad(i) = (up - down) / (2.0 * h);
    } else if (std::isfinite(up)) {
      grad(i) = (up - fx) / h;
    } else if (std::isfinite(down)) {
      grad(i) = (fx - down) / h;
    } else {
      grad(i) = 0.0;
    }
  }
  return grad;
}

}  // namespace

OptimResult minimize_bfgs(const std::function<double(const Eigen::VectorXd&)>& objective,
                          Eigen::VectorXd start, int max_iterations, double tolerance) {
  OptimResult res;
  res.x = std::move(start);
  res.value = safe_eval(objective, res.x);
  const Eigen::Index n = res.x.size();
  if (n == 0 || !std::isfinite(res.value)) {
    res.converged = n == 0;
    return res;
  }

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd grad = numeric_gradient(objective, res.x, res.value);

  for (int iter = 0; iter < max_iterations; ++iter) {
    res.iterations = iter + 1;
    if (grad.cwiseAbs().maxCoeff() < 1e-9) {
      res.converged = true;
      return res;
    }
    Eigen::VectorXd dir = -h_inv * grad;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      dir = -grad;
      slope = grad.dot(dir);
    }
    const double longest = dir.cwiseAbs().maxCoeff();
    if (longest > kMaxStep) {
      dir *= kMaxStep / longest;
      slope *= kMaxStep / longest;
    }

    double step = 1.0;
    double trial_value = kInf;
    Eigen::VectorXd trial;
    bool accepted = false;
    for (int k = 0; k < 50; ++k) {
      trial = res.x + step * dir;
      trial_value = safe_eval(objective, trial);
      if (trial_value <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!h_inv.isIdentity()) {
        h_inv.setIdentity();
        continue;
      }
      // No descent left at working precision.
      res.converged = true;
      return res;
    }

    const Eigen::VectorXd next_grad = numeric_gradient(objective, trial, trial_value);
    const Eigen::VectorXd s = trial - res.x;
    const Eigen::VectorXd y = next_grad - grad;
    const double change = res.value - trial_value;
    res.x = trial;
    res.value = trial_value;
    grad = next_grad;

    if (change <= tolerance * std::max(1.0, std::abs(res.value)) &&
        grad.cwiseAbs().maxCoeff() < 1e-3) {
      res.converged = true;
      return res;
    }

    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const Eigen::VectorXd hy = h_inv * y;
      const double rho = 1.0 / sy;
      h_inv += (rho * rho * y.dot(hy) + rho) * s * s.transpose() -
               rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  return res;
}

}  // namespace cropcast::ts::detail
