#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cropcast/error.hpp"
#include "cropcast/kernels.hpp"
#include "learners.hpp"

namespace cropcast::ml {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::DTR: return "DTR";
    case ModelKind::RFR: return "RFR";
    case ModelKind::LR: return "LR";
    case ModelKind::GBR: return "GBR";
    case ModelKind::SVC: return "SVC";
    case ModelKind::RFC: return "RFC";
    case ModelKind::GBC: return "GBC";
    case ModelKind::LoR: return "LoR";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::DTR, ModelKind::RFR, ModelKind::LR, ModelKind::GBR, ModelKind::SVC,
                 ModelKind::RFC, ModelKind::GBC, ModelKind::LoR}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::invalid_argument, "unknown model kind '" + std::string(name) + "'");
}

bool is_classifier(ModelKind kind) noexcept {
  return kind == ModelKind::SVC || kind == ModelKind::RFC || kind == ModelKind::GBC || kind == ModelKind::LoR;
}

Hyperparams Hyperparams::defaults(ModelKind kind) {
  Hyperparams h;
  switch (kind) {
    case ModelKind::RFR:
    case ModelKind::RFC:
      h.max_depth = 16;
      h.min_samples_leaf = 1;
      break;
    case ModelKind::GBR:
    case ModelKind::GBC:
      h.max_depth = 3;
      h.min_samples_leaf = 1;
      break;
    default:
      break;
  }
  return h;
}

void Hyperparams::validate(ModelKind kind) const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(Errc::invalid_argument, std::string("hyperparameter out of range: ") + what);
  };
  switch (kind) {
    case ModelKind::DTR:
      // Depth 0 is a single-leaf tree (the training mean).
      require(max_depth >= 0, "max_depth >= 0");
      require(min_samples_leaf >= 1, "min_samples_leaf >= 1");
      break;
    case ModelKind::RFR:
    case ModelKind::RFC:
      require(max_depth >= 1, "max_depth >= 1");
      require(min_samples_leaf >= 1, "min_samples_leaf >= 1");
      require(n_trees >= 1, "n_trees >= 1");
      require(max_features >= 0, "max_features >= 0");
      break;
    case ModelKind::GBR:
    case ModelKind::GBC:
      require(max_depth >= 1, "max_depth >= 1");
      require(min_samples_leaf >= 1, "min_samples_leaf >= 1");
      require(n_stages >= 1, "n_stages >= 1");
      require(shrinkage > 0.0 && shrinkage <= 1.0, "0 < shrinkage <= 1");
      break;
    case ModelKind::SVC:
      require(cost > 0.0, "cost > 0");
      require(gamma >= 0.0, "gamma >= 0");
      require(smo_tolerance > 0.0, "smo_tolerance > 0");
      require(max_smo_iterations >= 1, "max_smo_iterations >= 1");
      break;
    case ModelKind::LoR:
      require(learning_rate > 0.0, "learning_rate > 0");
      require(gd_iterations >= 1, "gd_iterations >= 1");
      require(l2 >= 0.0, "l2 >= 0");
      break;
    case ModelKind::LR:
      require(ridge >= 0.0, "ridge >= 0");
      break;
  }
}

namespace {

detail::TreeConfig tree_config(const Hyperparams& h, int max_features = 0) {
  return {h.max_depth, h.min_samples_leaf, max_features};
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

std::span<const double> row_of(const Eigen::MatrixXd& x, Eigen::Index i, std::vector<double>& buffer) {
  buffer.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) buffer[static_cast<std::size_t>(c)] = x(i, c);
  return buffer;
}

template <class GrowFn>
std::vector<Tree> grow_forest(int n_trees, std::size_t n, std::uint64_t seed, Execution exec, GrowFn grow) {
  std::vector<Tree> trees(static_cast<std::size_t>(n_trees));
  auto one = [&](int t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = rng.index(n);
    trees[static_cast<std::size_t>(t)] = grow(std::move(sample), rng);
  };
  if (exec == Execution::parallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < n_trees; ++t) {
      try {
        one(t);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (int t = 0; t < n_trees; ++t) one(t);
  }
  return trees;
}

std::vector<double> softmax(Eigen::Ref<const Eigen::VectorXd> scores) {
  const double top = scores.maxCoeff();
  std::vector<double> p(static_cast<std::size_t>(scores.size()));
  double total = 0.0;
  for (Eigen::Index k = 0; k < scores.size(); ++k) total += p[static_cast<std::size_t>(k)] = std::exp(scores(k) - top);
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace

TrainedModel train_regressor(ModelKind kind, const LabeledTable& data, std::uint64_t seed,
                             const std::optional<Hyperparams>& hyper, Execution exec) {
  if (is_classifier(kind)) throw Error(Errc::invalid_argument, std::string(to_string(kind)) + " is not a regressor");
  data.validate();
  if (data.is_classification()) throw Error(Errc::invalid_argument, "regressor needs a regression table");
  const Hyperparams h = hyper.value_or(Hyperparams::defaults(kind));
  h.validate(kind);
  const std::size_t n = data.size();
  if ((kind == ModelKind::RFR || kind == ModelKind::GBR) && n < 2) {
    throw Error(Errc::invalid_data, std::string(to_string(kind)) + " needs at least two rows");
  }

  TrainedModel model;
  model.kind_ = kind;
  model.hyper_ = h;
  model.feature_names_ = data.feature_names;
  model.seed_ = seed;
  const auto& x = data.rows;
  const std::span<const double> y = data.targets;
  const int m = static_cast<int>(data.arity());

  switch (kind) {
    case ModelKind::DTR: {
      Rng rng(seed);
      model.trees_.push_back(detail::grow_regression_tree(x, y, all_rows(n), tree_config(h), rng));
      break;
    }
    case ModelKind::RFR: {
      const int mf = h.max_features > 0 ? h.max_features : std::max(1, m / 3);
      model.trees_ = grow_forest(h.n_trees, n, seed, exec, [&](std::vector<std::size_t> sample, Rng& rng) {
        return detail::grow_regression_tree(x, y, std::move(sample), tree_config(h, mf), rng);
      });
      break;
    }
    case ModelKind::LR: {
      Eigen::MatrixXd design(x.rows(), x.cols() + 1);
      design << x, Eigen::VectorXd::Ones(x.rows());
      Eigen::MatrixXd gram = design.transpose() * design;
      const double jitter = h.ridge * gram.diagonal().mean();
      gram.diagonal().array() += jitter;
      const Eigen::VectorXd rhs = design.transpose() * Eigen::Map<const Eigen::VectorXd>(y.data(), x.rows());
      Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
      if (ldlt.info() != Eigen::Success) throw Error(Errc::fit_failed, "normal equations could not be factored");
      model.linear_ = ldlt.solve(rhs);
      if (!model.linear_.allFinite()) throw Error(Errc::fit_failed, "linear regression produced non-finite coefficients");
      break;
    }
    case ModelKind::GBR: {
      Rng rng(seed);
      std::vector<double> current(n, std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n));
      model.base_ = current[0];
      auto mse = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (y[i] - current[i]) * (y[i] - current[i]);
        return s / static_cast<double>(n);
      };
      model.staged_loss_.push_back(mse());
      std::vector<double> residual(n);
      std::vector<double> buffer;
      for (int stage = 0; stage < h.n_stages; ++stage) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - current[i];
        Tree tree = detail::grow_regression_tree(x, residual, all_rows(n), tree_config(h), rng);
        for (std::size_t i = 0; i < n; ++i) {
          current[i] += h.shrinkage * tree.predict(row_of(x, static_cast<Eigen::Index>(i), buffer));
        }
        model.trees_.push_back(std::move(tree));
        model.staged_loss_.push_back(mse());
      }
      break;
    }
    default:
      break;
  }
  return model;
}

TrainedModel train_classifier(ModelKind kind, const LabeledTable& data, std::uint64_t seed,
                              const std::optional<Hyperparams>& hyper, Execution exec) {
  if (!is_classifier(kind)) throw Error(Errc::invalid_argument, std::string(to_string(kind)) + " is not a classifier");
  data.validate();
  if (!data.is_classification()) throw Error(Errc::invalid_argument, "classifier needs a classification table");
  const Hyperparams h = hyper.value_or(Hyperparams::defaults(kind));
  h.validate(kind);
  const std::size_t n = data.size();
  const int classes = static_cast<int>(data.label_vocabulary.size());
  std::vector<int> support(static_cast<std::size_t>(classes), 0);
  for (int l : data.labels) ++support[static_cast<std::size_t>(l)];
  for (int k = 0; k < classes; ++k) {
    if (support[static_cast<std::size_t>(k)] == 0) {
      throw Error(Errc::invalid_data, "class '" + data.label_vocabulary[static_cast<std::size_t>(k)] + "' has no rows");
    }
  }
  if (classes < 2) throw Error(Errc::invalid_data, "classification needs at least two classes");

  TrainedModel model;
  model.kind_ = kind;
  model.hyper_ = h;
  model.feature_names_ = data.feature_names;
  model.vocabulary_ = data.label_vocabulary;
  model.seed_ = seed;
  const auto& x = data.rows;
  const std::span<const int> labels = data.labels;
  const int m = static_cast<int>(data.arity());

  switch (kind) {
    case ModelKind::RFC: {
      const int mf = h.max_features > 0 ? h.max_features
                                        : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(m)))));
      model.trees_ = grow_forest(h.n_trees, n, seed, exec, [&](std::vector<std::size_t> sample, Rng& rng) {
        return detail::grow_classification_tree(x, labels, classes, std::move(sample), tree_config(h, mf), rng);
      });
      break;
    }
    case ModelKind::GBC: {
      Rng rng(seed);
      const auto k_count = static_cast<std::size_t>(classes);
      model.class_base_.resize(k_count);
      for (std::size_t k = 0; k < k_count; ++k) {
        model.class_base_[k] = std::log(static_cast<double>(support[k]) / static_cast<double>(n));
      }
      Eigen::MatrixXd scores(static_cast<Eigen::Index>(n), classes);
      for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (int k = 0; k < classes; ++k) scores(i, k) = model.class_base_[static_cast<std::size_t>(k)];
      }
      std::vector<double> residual(n);
      std::vector<double> buffer;
      const double scale = static_cast<double>(classes - 1) / static_cast<double>(classes);
      for (int stage = 0; stage < h.n_stages; ++stage) {
        std::vector<std::vector<double>> prob(n);
        for (std::size_t i = 0; i < n; ++i) prob[i] = softmax(scores.row(static_cast<Eigen::Index>(i)).transpose());
        for (int k = 0; k < classes; ++k) {
          for (std::size_t i = 0; i < n; ++i) {
            residual[i] = (labels[i] == k ? 1.0 : 0.0) - prob[i][static_cast<std::size_t>(k)];
          }
          Tree tree = detail::grow_regression_tree(x, residual, all_rows(n), tree_config(h), rng);
          // Newton step per leaf for the multinomial deviance.
          std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
          std::vector<int> leaf_of(n);
          for (std::size_t i = 0; i < n; ++i) {
            leaf_of[i] = detail::find_leaf(tree, row_of(x, static_cast<Eigen::Index>(i), buffer));
            const double r = residual[i];
            num[static_cast<std::size_t>(leaf_of[i])] += r;
            den[static_cast<std::size_t>(leaf_of[i])] += std::abs(r) * (1.0 - std::abs(r));
          }
          for (std::size_t l = 0; l < tree.nodes.size(); ++l) {
            if (tree.nodes[l].feature >= 0) continue;
            tree.nodes[l].value = den[l] > 1e-150 ? scale * num[l] / den[l] : 0.0;
          }
          for (std::size_t i = 0; i < n; ++i) {
            scores(static_cast<Eigen::Index>(i), k) += h.shrinkage * tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
          }
          model.trees_.push_back(std::move(tree));
        }
      }
      break;
    }
    case ModelKind::SVC: {
      auto state = std::make_shared<SvcState>();
      const auto standard = detail::Standardizer::fit(x);
      state->mean = standard.mean;
      state->scale = standard.scale;
      state->train_x = standard.apply(x);
      if (h.gamma > 0) {
        state->gamma = h.gamma;
      } else {
        const double mu = state->train_x.mean();
        const double var = (state->train_x.array() - mu).square().mean();
        state->gamma = 1.0 / (static_cast<double>(m) * (var > 0 ? var : 1.0));
      }
      const Eigen::MatrixXd gram = kernels::rbf_gram(state->train_x, state->gamma, exec);
      state->machines.resize(static_cast<std::size_t>(classes));
      auto one = [&](int k) {
        std::vector<double> yk(n);
        for (std::size_t i = 0; i < n; ++i) yk[i] = labels[i] == k ? 1.0 : -1.0;
        state->machines[static_cast<std::size_t>(k)] =
            detail::train_binary_svm(gram, yk, h.cost, h.smo_tolerance, h.max_smo_iterations);
      };
      if (exec == Execution::parallel) {
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < classes; ++k) {
          try {
            one(k);
          } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
          }
        }
        if (failure) std::rethrow_exception(failure);
      } else {
        for (int k = 0; k < classes; ++k) one(k);
      }
      model.svc_ = std::move(state);
      break;
    }
    case ModelKind::LoR: {
      const auto standard = detail::Standardizer::fit(x);
      model.mean_ = standard.mean;
      model.scale_ = standard.scale;
      const Eigen::MatrixXd z = standard.apply(x);
      Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), classes);
      for (std::size_t i = 0; i < n; ++i) onehot(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(classes, m);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(classes);
      const double inv_n = 1.0 / static_cast<double>(n);
      for (int it = 0; it < h.gd_iterations; ++it) {
        Eigen::MatrixXd logits = z * w.transpose();
        logits.rowwise() += b.transpose();
        const Eigen::VectorXd top = logits.rowwise().maxCoeff();
        Eigen::MatrixXd p = (logits.colwise() - top).array().exp().matrix();
        const Eigen::VectorXd total = p.rowwise().sum();
        p = p.array().colwise() / total.array();
        const Eigen::MatrixXd diff = p - onehot;
        const Eigen::MatrixXd grad_w = inv_n * diff.transpose() * z + h.l2 * w;
        const Eigen::VectorXd grad_b = inv_n * diff.colwise().sum().transpose();
        w -= h.learning_rate * grad_w;
        b -= h.learning_rate * grad_b;
      }
      model.weights_ = std::move(w);
      model.intercepts_ = std::move(b);
      break;
    }
    default:
      break;
  }
  return model;
}

void TrainedModel::check_row(std::span<const double> row) const {
  if (row.size() != feature_names_.size()) {
    throw Error(Errc::invalid_argument, "row has " + std::to_string(row.size()) + " features, model expects " +
                                            std::to_string(feature_names_.size()));
  }
  for (double v : row) {
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "row contains a non-finite feature");
  }
}

double TrainedModel::predict_value(std::span<const double> row) const {
  if (is_classifier(kind_)) throw Error(Errc::invalid_argument, "predict_value called on a classifier");
  check_row(row);
  switch (kind_) {
    case ModelKind::DTR:
      return trees_.front().predict(row);
    case ModelKind::RFR: {
      double s = 0.0;
      for (const auto& t : trees_) s += t.predict(row);
      return s / static_cast<double>(trees_.size());
    }
    case ModelKind::LR: {
      double s = linear_(linear_.size() - 1);
      for (std::size_t c = 0; c < row.size(); ++c) s += linear_(static_cast<Eigen::Index>(c)) * row[c];
      return s;
    }
    case ModelKind::GBR: {
      double s = base_;
      for (const auto& t : trees_) s += hyper_.shrinkage * t.predict(row);
      return s;
    }
    default:
      throw Error(Errc::invalid_argument, "not a regressor");
  }
}

std::vector<double> TrainedModel::class_scores(std::span<const double> row) const {
  const auto k_count = vocabulary_.size();
  switch (kind_) {
    case ModelKind::SVC:
      return decision_values(row);
    case ModelKind::RFC: {
      std::vector<double> counts(k_count, 0.0);
      for (int v : tree_votes(row)) counts[static_cast<std::size_t>(v)] += 1.0;
      return counts;
    }
    case ModelKind::GBC: {
      std::vector<double> scores = class_base_;
      for (std::size_t t = 0; t < trees_.size(); ++t) scores[t % k_count] += hyper_.shrinkage * trees_[t].predict(row);
      return scores;
    }
    case ModelKind::LoR: {
      Eigen::VectorXd z(static_cast<Eigen::Index>(row.size()));
      for (Eigen::Index c = 0; c < z.size(); ++c) z(c) = (row[static_cast<std::size_t>(c)] - mean_(c)) / scale_(c);
      const Eigen::VectorXd logits = weights_ * z + intercepts_;
      return {logits.data(), logits.data() + logits.size()};
    }
    default:
      throw Error(Errc::invalid_argument, "not a classifier");
  }
}

int TrainedModel::predict_class(std::span<const double> row) const {
  if (!is_classifier(kind_)) throw Error(Errc::invalid_argument, "predict_class called on a regressor");
  check_row(row);
  const auto scores = class_scores(row);
  // First maximum wins, so ties go to the lowest vocabulary index.
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

const std::string& TrainedModel::predict_label(std::span<const double> row) const {
  return vocabulary_[static_cast<std::size_t>(predict_class(row))];
}

std::vector<double> TrainedModel::predict_values(const Eigen::MatrixXd& rows) const {
  std::vector<double> out;
  std::vector<double> buffer;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.push_back(predict_value(row_of(rows, i, buffer)));
  return out;
}

std::vector<int> TrainedModel::predict_classes(const Eigen::MatrixXd& rows) const {
  std::vector<int> out;
  std::vector<double> buffer;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.push_back(predict_class(row_of(rows, i, buffer)));
  return out;
}

std::vector<int> TrainedModel::tree_votes(std::span<const double> row) const {
  if (kind_ != ModelKind::RFC) throw Error(Errc::invalid_argument, "tree votes exist only for RFC");
  check_row(row);
  std::vector<int> votes;
  votes.reserve(trees_.size());
  for (const auto& t : trees_) votes.push_back(static_cast<int>(t.predict(row)));
  return votes;
}

std::vector<double> TrainedModel::decision_values(std::span<const double> row) const {
  if (kind_ != ModelKind::SVC) throw Error(Errc::invalid_argument, "decision values exist only for SVC");
  check_row(row);
  const auto& s = *svc_;
  Eigen::MatrixXd probe(1, static_cast<Eigen::Index>(row.size()));
  for (Eigen::Index c = 0; c < probe.cols(); ++c) probe(0, c) = (row[static_cast<std::size_t>(c)] - s.mean(c)) / s.scale(c);
  Eigen::MatrixXd k;
  kernels::rbf_cross(s.train_x, probe, s.gamma, k, Execution::serial);
  std::vector<double> out;
  for (const auto& machine : s.machines) {
    double f = machine.bias;
    for (std::size_t t = 0; t < machine.support.size(); ++t) f += machine.coef[t] * k(machine.support[t], 0);
    out.push_back(f);
  }
  return out;
}

std::vector<double> TrainedModel::linear_coefficients() const {
  if (kind_ != ModelKind::LR) throw Error(Errc::invalid_argument, "coefficients exist only for LR");
  return {linear_.data(), linear_.data() + linear_.size()};
}

}  // namespace cropcast::ml
