#include "cropcast/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "cropcast/error.hpp"

namespace cropcast::metrics {

ClassificationReport classification_report(std::span<const std::string> y_true,
                                           std::span<const std::string> y_pred) {
  if (y_true.size() != y_pred.size()) throw Error(Errc::invalid_argument, "label sequences differ in length");
  if (y_true.empty()) throw Error(Errc::invalid_argument, "label sequences are empty");

  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> counts;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    auto& t = counts[y_true[i]];
    auto& p = counts[y_pred[i]];
    if (y_true[i] == y_pred[i]) {
      ++t.tp;
      ++correct;
    } else {
      ++t.fn;
      ++p.fp;
    }
  }

  ClassificationReport r;
  const double n = static_cast<double>(y_true.size());
  r.accuracy = static_cast<double>(correct) / n;
  for (const auto& [label, c] : counts) {
    ClassMetrics m;
    m.label = label;
    m.support = c.tp + c.fn;
    const auto pred_total = c.tp + c.fp;
    bool zero = false;
    if (pred_total > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(pred_total);
    else zero = true;
    if (m.support > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(m.support);
    else zero = true;
    if (m.precision + m.recall > 0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    if (zero) r.zero_division.push_back(label);

    const double w = static_cast<double>(m.support) / n;
    r.precision += w * m.precision;
    r.recall += w * m.recall;
    r.f1 += w * m.f1;
    r.per_class.push_back(std::move(m));
  }
  return r;
}

RegressionReport regression_report(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw Error(Errc::invalid_argument, "value sequences differ in length");
  if (y_true.size() < 2) throw Error(Errc::invalid_argument, "regression report needs at least two values");
  const double n = static_cast<double>(y_true.size());

  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_pred[i];
    const double d = y_true[i] - mean;
    ss_res += e * e;
    ss_tot += d * d;
  }

  RegressionReport r;
  r.mse = ss_res / n;
  r.rmse = std::sqrt(r.mse);
  bool constant = true;
  for (double v : y_true) constant = constant && v == y_true[0];
  if (constant) {
    r.r_squared = std::numeric_limits<double>::quiet_NaN();
    r.r_squared_defined = false;
  } else {
    r.r_squared = 1.0 - ss_res / ss_tot;
  }
  return r;
}

nlohmann::json ClassificationReport::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : per_class) {
    classes.push_back({{"label", c.label},
                       {"precision", c.precision},
                       {"recall", c.recall},
                       {"f1", c.f1},
                       {"support", c.support}});
  }
  return {{"accuracy", accuracy},       {"precision", precision},         {"recall", recall},
          {"f1", f1},                   {"per_class", std::move(classes)}, {"zero_division", zero_division}};
}

nlohmann::json RegressionReport::to_json() const {
  nlohmann::json j{{"mse", mse}, {"rmse", rmse}, {"r_squared_defined", r_squared_defined}};
  j["r_squared"] = r_squared_defined ? nlohmann::json(r_squared) : nlohmann::json(nullptr);
  return j;
}

}  // namespace cropcast::metrics
