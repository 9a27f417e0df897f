#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cropcast/error.hpp"
#include "cropcast/timeseries.hpp"
#include "state_space.hpp"

namespace cropcast::ts {

namespace {

constexpr double kNormalQuantile975 = 1.959963984540054;

struct Layout {
  std::size_t p, q, sp, sq, k;
  std::size_t arma() const { return p + q + sp + sq; }
  std::size_t total() const { return arma() + k; }
};

Layout layout_of(const SarimaxOrder& order, std::size_t n_exog) {
  return {static_cast<std::size_t>(order.p), static_cast<std::size_t>(order.q),
          static_cast<std::size_t>(order.P), static_cast<std::size_t>(order.Q), n_exog};
}

std::vector<double> negated(std::vector<double> v) {
  for (double& x : v) x = -x;
  return v;
}

// Differenced exogenous columns, aligned with the differenced series.
Eigen::MatrixXd difference_exog(const ExogMatrix& exog, const SarimaxOrder& order) {
  const auto loss = static_cast<Eigen::Index>(order.differencing_loss());
  Eigen::MatrixXd out(exog.rows() - loss, exog.cols());
  for (Eigen::Index c = 0; c < exog.cols(); ++c) {
    std::vector<double> col(exog.col(c).data(), exog.col(c).data() + exog.rows());
    const auto w = difference(col, order.d, order.D, order.s);
    out.col(c) = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  }
  return out;
}

std::vector<double> residual_series(const std::vector<double>& w, const Eigen::MatrixXd* xd,
                                    std::span<const double> beta) {
  if (xd == nullptr || beta.empty()) return w;
  std::vector<double> out(w);
  for (std::size_t t = 0; t < w.size(); ++t) {
    double fitted = 0.0;
    for (std::size_t c = 0; c < beta.size(); ++c) {
      fitted += (*xd)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) * beta[c];
    }
    out[t] -= fitted;
  }
  return out;
}

void check_exog(const ExogMatrix* exog, std::size_t rows) {
  if (exog == nullptr) return;
  if (static_cast<std::size_t>(exog->rows()) != rows) {
    throw Error(Errc::invalid_argument, "exogenous matrix must have one row per observation");
  }
  if (!exog->allFinite()) throw Error(Errc::invalid_argument, "exogenous values must be finite");
}

struct Coefficients {
  std::vector<double> ar, ma, sar, sma, beta;
};

Coefficients split(std::span<const double> params, const Layout& lay) {
  Coefficients c;
  auto it = params.begin();
  auto take = [&it](std::size_t count) {
    std::vector<double> v(it, it + static_cast<std::ptrdiff_t>(count));
    it += static_cast<std::ptrdiff_t>(count);
    return v;
  };
  c.ar = take(lay.p);
  c.ma = take(lay.q);
  c.sar = take(lay.sp);
  c.sma = take(lay.sq);
  c.beta = take(lay.k);
  return c;
}

Coefficients from_unconstrained(const Eigen::VectorXd& raw, const Layout& lay) {
  std::vector<double> values(raw.data(), raw.data() + raw.size());
  Coefficients c = split(values, lay);
  c.ar = constrain_ar(c.ar);
  c.ma = negated(constrain_ar(c.ma));
  c.sar = constrain_ar(c.sar);
  c.sma = negated(constrain_ar(c.sma));
  return c;
}

detail::ArmaStateSpace state_space_of(const Coefficients& c, int s) {
  const auto phi = expand_ar(c.ar, c.sar, s);
  const auto theta = expand_ma(c.ma, c.sma, s);
  return detail::ArmaStateSpace(phi, theta);
}

double sample_variance(std::span<const double> values) {
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

}  // namespace

std::vector<double> FittedSarimax::params() const {
  std::vector<double> out;
  out.insert(out.end(), ar_coeffs.begin(), ar_coeffs.end());
  out.insert(out.end(), ma_coeffs.begin(), ma_coeffs.end());
  out.insert(out.end(), seasonal_ar.begin(), seasonal_ar.end());
  out.insert(out.end(), seasonal_ma.begin(), seasonal_ma.end());
  out.insert(out.end(), exog_coeffs.begin(), exog_coeffs.end());
  out.push_back(innovation_variance);
  return out;
}

double log_likelihood(const SarimaxOrder& order, std::span<const double> params,
                      const TimeSeries& series, const ExogMatrix* exog) {
  order.validate();
  series.validate();
  check_exog(exog, series.size());
  const Layout lay = layout_of(order, exog ? static_cast<std::size_t>(exog->cols()) : 0);
  if (params.size() != lay.total() + 1) {
    throw Error(Errc::invalid_argument, "expected " + std::to_string(lay.total() + 1) +
                                            " parameters, got " + std::to_string(params.size()));
  }
  for (double v : params) {
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "parameters must be finite");
  }
  const double sigma2 = params.back();
  if (!(sigma2 > 0.0)) throw Error(Errc::invalid_argument, "innovation variance must be > 0");

  const Coefficients c = split(params.first(lay.total()), lay);
  if (!is_stationary(c.ar) || !is_stationary(c.sar)) {
    throw Error(Errc::invalid_argument, "autoregressive parameters are not stationary");
  }
  if (!is_stationary(negated(c.ma)) || !is_stationary(negated(c.sma))) {
    throw Error(Errc::invalid_argument, "moving-average parameters are not invertible");
  }

  const auto w = difference(series.values, order.d, order.D, order.s);
  Eigen::MatrixXd xd;
  if (exog != nullptr) xd = difference_exog(*exog, order);
  const auto u = residual_series(w, exog ? &xd : nullptr, c.beta);

  const auto model = state_space_of(c, order.s);
  const auto filtered = detail::arma_filter(model, u);
  if (!filtered.ok) throw Error(Errc::invalid_argument, "state covariance did not converge");
  return filtered.log_likelihood(sigma2);
}

FittedSarimax fit(const TimeSeries& series, const SarimaxOrder& order, const ExogMatrix* exog,
                  const FitOptions& options) {
  order.validate();
  series.validate();
  check_exog(exog, series.size());
  if (series.size() < order.min_fit_length()) {
    throw Error(Errc::insufficient_history,
                "order " + order.to_string() + " needs at least " +
                    std::to_string(order.min_fit_length()) + " observations, got " +
                    std::to_string(series.size()));
  }
  const double raw_variance = sample_variance(series.values);
  if (!(raw_variance > 0.0)) {
    throw Error(Errc::fit_failed, "degenerate series: zero variance");
  }
  const double variance_floor = 1e-10 * raw_variance;

  const Layout lay = layout_of(order, exog ? static_cast<std::size_t>(exog->cols()) : 0);
  const auto w = difference(series.values, order.d, order.D, order.s);
  Eigen::MatrixXd xd;
  if (exog != nullptr) xd = difference_exog(*exog, order);
  const Eigen::MatrixXd* xd_ptr = exog ? &xd : nullptr;

  Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lay.total()));
  if (lay.k > 0) {
    // Regression coefficients start at their least-squares values.
    const Eigen::VectorXd wv =
        Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    const Eigen::VectorXd beta = xd.colPivHouseholderQr().solve(wv);
    start.tail(static_cast<Eigen::Index>(lay.k)) = beta;
  }

  const double nd = static_cast<double>(w.size());
  auto objective = [&](const Eigen::VectorXd& raw) {
    const Coefficients c = from_unconstrained(raw, lay);
    const auto u = residual_series(w, xd_ptr, c.beta);
    const auto filtered = detail::arma_filter(state_space_of(c, order.s), u);
    if (!filtered.ok) return std::numeric_limits<double>::infinity();
    return -filtered.log_likelihood(filtered.concentrated_variance(variance_floor)) / nd;
  };

  const auto result =
      detail::minimize_bfgs(objective, start, options.max_iterations, options.tolerance);
  if (!result.converged) {
    throw Error(Errc::not_converged, "optimizer did not converge for order " + order.to_string() +
                                         " after " + std::to_string(result.iterations) +
                                         " iterations");
  }
  if (!std::isfinite(result.value)) {
    throw Error(Errc::fit_failed, "likelihood is not finite for order " + order.to_string());
  }

  const Coefficients c = from_unconstrained(result.x, lay);
  const auto u = residual_series(w, xd_ptr, c.beta);
  const auto filtered = detail::arma_filter(state_space_of(c, order.s), u);

  FittedSarimax model;
  model.order = order;
  model.ar_coeffs = c.ar;
  model.ma_coeffs = c.ma;
  model.seasonal_ar = c.sar;
  model.seasonal_ma = c.sma;
  model.exog_coeffs = c.beta;
  model.innovation_variance = filtered.concentrated_variance(variance_floor);
  model.log_likelihood = filtered.log_likelihood(model.innovation_variance);
  model.aic = 2.0 * model.num_estimated() - 2.0 * model.log_likelihood;
  model.iterations = result.iterations;
  const auto loss = static_cast<std::size_t>(order.differencing_loss());
  model.training_tail.assign(series.values.end() - static_cast<std::ptrdiff_t>(loss),
                             series.values.end());
  model.state_mean.assign(filtered.next_mean.data(),
                          filtered.next_mean.data() + filtered.next_mean.size());
  model.state_cov = filtered.next_cov;
  std::tie(model.next_year, model.next_month) = series.date_at(series.size());
  return model;
}

SelectionResult select_order_detailed(const TimeSeries& series, std::span<const SarimaxOrder> grid,
                                      Execution exec) {
  if (grid.empty()) throw Error(Errc::invalid_argument, "order grid is empty");
  SelectionResult result;
  result.scores.resize(grid.size());
  const auto count = static_cast<std::ptrdiff_t>(grid.size());

#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    auto& score = result.scores[static_cast<std::size_t>(i)];
    score.order = grid[static_cast<std::size_t>(i)];
    try {
      score.aic = fit(series, score.order).aic;
    } catch (const std::exception& e) {
      score.error = e.what();
    }
  }

  const OrderScore* best = nullptr;
  for (const auto& score : result.scores) {
    if (!score.aic) continue;
    if (best == nullptr) {
      best = &score;
      continue;
    }
    const auto rank = [](const OrderScore& s) {
      return std::tuple(*s.aic, s.order.num_params(), s.order);
    };
    if (rank(score) < rank(*best)) best = &score;
  }
  if (best == nullptr) {
    std::ostringstream msg;
    msg << "no order in the grid could be fitted:";
    for (const auto& score : result.scores) msg << ' ' << score.order.to_string() << ": " << score.error << ';';
    throw Error(Errc::fit_failed, msg.str());
  }
  result.best = best->order;
  return result;
}

SarimaxOrder select_order(const TimeSeries& series, std::span<const SarimaxOrder> grid,
                          Execution exec) {
  return select_order_detailed(series, grid, exec).best;
}

std::vector<SarimaxOrder> default_grid() {
  std::vector<SarimaxOrder> grid;
  for (int d = 0; d <= 1; ++d) {
    for (int D = 0; D <= 1; ++D) {
      for (int p = 0; p <= 2; ++p) {
        for (int q = 0; q <= 2; ++q) {
          for (int P = 0; P <= 2; ++P) {
            for (int Q = 0; Q <= 2; ++Q) {
              if (p + q + P + Q > 4) continue;
              grid.push_back(SarimaxOrder{p, d, q, P, D, Q, 12});
            }
          }
        }
      }
    }
  }
  return grid;
}

ForecastResult forecast(const FittedSarimax& model, int horizon, const ExogMatrix* future_exog) {
  if (horizon < 1) throw Error(Errc::invalid_argument, "forecast horizon must be >= 1");
  const std::size_t k = model.exog_coeffs.size();
  if (k > 0) {
    if (future_exog == nullptr || future_exog->rows() != horizon ||
        static_cast<std::size_t>(future_exog->cols()) != k) {
      throw Error(Errc::invalid_argument, "future exogenous matrix must be horizon x regressors");
    }
  }

  const detail::ArmaStateSpace ss(expand_ar(model.ar_coeffs, model.seasonal_ar, model.order.s),
                                  expand_ma(model.ma_coeffs, model.seasonal_ma, model.order.s));
  const auto r = static_cast<Eigen::Index>(ss.dim());
  if (static_cast<Eigen::Index>(model.state_mean.size()) != r || model.state_cov.rows() != r) {
    throw Error(Errc::invalid_argument, "model state does not match its order");
  }
  const auto weights = integration_weights(model.order.d, model.order.D, model.order.s);
  const auto m = static_cast<Eigen::Index>(weights.size());
  const Eigen::Index dim = r + m;
  const double sigma2 = model.innovation_variance;

  // Augmented state: ARMA state followed by y_{t-1}, ..., y_{t-m}.
  Eigen::VectorXd mean(dim);
  mean.head(r) = Eigen::Map<const Eigen::VectorXd>(model.state_mean.data(), r);
  for (Eigen::Index i = 0; i < m; ++i) {
    mean(r + i) = model.training_tail[model.training_tail.size() - 1 - static_cast<std::size_t>(i)];
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  cov.topLeftCorner(r, r) = sigma2 * model.state_cov;

  Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(dim);
  z(0) = 1.0;
  for (Eigen::Index i = 0; i < m; ++i) z(r + i) = weights[static_cast<std::size_t>(i)];

  Eigen::MatrixXd trans = Eigen::MatrixXd::Zero(dim, dim);
  trans.topLeftCorner(r, r) = ss.transition();
  if (m > 0) {
    trans.row(r) = z;
    for (Eigen::Index i = 1; i < m; ++i) trans(r + i, r + i - 1) = 1.0;
  }
  Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(dim, dim);
  const Eigen::VectorXd rvec = ss.disturbance();
  noise.topLeftCorner(r, r) = sigma2 * rvec * rvec.transpose();

  ForecastResult out;
  out.horizon = horizon;
  for (int h = 0; h < horizon; ++h) {
    double regression = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      regression += (*future_exog)(h, static_cast<Eigen::Index>(c)) * model.exog_coeffs[c];
    }
    const double point = z.dot(mean) + regression;
    const double variance = std::max(0.0, (z * cov * z.transpose())(0, 0));
    const double half = kNormalQuantile975 * std::sqrt(variance);
    out.point.push_back(point);
    out.lower.push_back(point - half);
    out.upper.push_back(point + half);

    Eigen::VectorXd next = trans * mean;
    if (m > 0) next(r) += regression;
    mean = std::move(next);
    cov = trans * cov * trans.transpose() + noise;
  }
  return out;
}

}  // namespace cropcast::ts
