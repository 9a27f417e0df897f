#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cropcast/execution.hpp"
#include "cropcast/ml/table.hpp"

namespace cropcast::ml {

enum class ModelKind { DTR, RFR, LR, GBR, SVC, RFC, GBC, LoR };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);
bool is_classifier(ModelKind kind) noexcept;

inline constexpr ModelKind kRegressors[] = {ModelKind::DTR, ModelKind::RFR, ModelKind::LR,
                                            ModelKind::GBR};
inline constexpr ModelKind kClassifiers[] = {ModelKind::SVC, ModelKind::RFC, ModelKind::GBC,
                                             ModelKind::LoR};

/// Union of every kind's hyperparameters; each kind reads its own subset.
struct Hyperparams {
  // Trees (DTR, forests, boosting base learners).
  int max_depth = 12;
  int min_samples_leaf = 2;
  // Forests. max_features 0 means m/3 for regression, sqrt(m) for classification.
  int n_trees = 100;
  int max_features = 0;
  // Boosting.
  int n_stages = 200;
  double shrinkage = 0.1;
  // SVC. gamma 0 means 1 / (m * variance of the standardized features).
  double cost = 1.0;
  double gamma = 0.0;
  double smo_tolerance = 1e-3;
  long max_smo_iterations = 100000;
  // LoR.
  double learning_rate = 0.1;
  int gd_iterations = 5000;
  double l2 = 1e-4;
  // LR ridge jitter relative to the mean diagonal of X'X.
  double ridge = 1e-10;

  static Hyperparams defaults(ModelKind kind);
  void validate(ModelKind kind) const;

  nlohmann::json to_json(ModelKind kind) const;
  static Hyperparams from_json(ModelKind kind, const nlohmann::json& j);
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf mean, or leaf class index for classification trees
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> row) const;
  int depth() const;
};

/// One binary machine of a one-vs-rest SVC: f(x) = sum_i coef_i K(sv_i, x) + bias,
/// coef_i = alpha_i * y_i.
struct BinarySvm {
  std::vector<int> support;  // row indices into SvcState::train_x
  std::vector<double> coef;
  double bias = 0.0;
  long iterations = 0;
};

struct SvcState {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  double gamma = 0.0;
  Eigen::MatrixXd train_x;  // standardized training rows
  std::vector<BinarySvm> machines;  // one per vocabulary label
};

class TrainedModel {
 public:
  ModelKind kind() const noexcept { return kind_; }
  const Hyperparams& hyperparams() const noexcept { return hyper_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<std::string>& label_vocabulary() const noexcept { return vocabulary_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t arity() const noexcept { return feature_names_.size(); }

  /// Regressors only.
  double predict_value(std::span<const double> row) const;
  /// Classifiers only: index into label_vocabulary().
  int predict_class(std::span<const double> row) const;
  const std::string& predict_label(std::span<const double> row) const;

  std::vector<double> predict_values(const Eigen::MatrixXd& rows) const;
  std::vector<int> predict_classes(const Eigen::MatrixXd& rows) const;

  /// Per-tree class votes of an RFC, in tree order.
  std::vector<int> tree_votes(std::span<const double> row) const;
  /// One-vs-rest decision values of an SVC, in vocabulary order.
  std::vector<double> decision_values(std::span<const double> row) const;
  /// GBR training MSE after the initial constant and after each stage.
  const std::vector<double>& staged_training_loss() const noexcept { return staged_loss_; }
  /// LR coefficients followed by the intercept.
  std::vector<double> linear_coefficients() const;

  const std::vector<Tree>& trees() const noexcept { return trees_; }
  const SvcState& svc() const { return *svc_; }

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);

 private:
  friend TrainedModel train_regressor(ModelKind, const LabeledTable&, std::uint64_t,
                                      const std::optional<Hyperparams>&, Execution);
  friend TrainedModel train_classifier(ModelKind, const LabeledTable&, std::uint64_t,
                                       const std::optional<Hyperparams>&, Execution);

  void check_row(std::span<const double> row) const;
  std::vector<double> class_scores(std::span<const double> row) const;

  ModelKind kind_ = ModelKind::DTR;
  Hyperparams hyper_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> vocabulary_;
  std::uint64_t seed_ = 0;

  // Trees: DTR/RFR/RFC use one entry per tree; GBR one per stage;
  // GBC n_stages * K trees, stage-major.
  std::vector<Tree> trees_;
  double base_ = 0.0;                 // GBR initial constant
  std::vector<double> class_base_;    // GBC initial log-odds per class
  std::vector<double> staged_loss_;   // GBR
  Eigen::VectorXd linear_;            // LR: coefficients then intercept
  Eigen::VectorXd mean_, scale_;      // LoR standardization
  Eigen::MatrixXd weights_;           // LoR: K x m
  Eigen::VectorXd intercepts_;        // LoR: K
  std::shared_ptr<const SvcState> svc_;
};

/// Deterministic in (kind, data, seed, hyperparams). `hyper` defaults to
/// Hyperparams::defaults(kind). `exec` selects serial or OpenMP training for
/// forests and SVC; both give identical models.
TrainedModel train_regressor(ModelKind kind, const LabeledTable& data, std::uint64_t seed,
                             const std::optional<Hyperparams>& hyper = std::nullopt,
                             Execution exec = Execution::parallel);
TrainedModel train_classifier(ModelKind kind, const LabeledTable& data, std::uint64_t seed,
                              const std::optional<Hyperparams>& hyper = std::nullopt,
                              Execution exec = Execution::parallel);

}  // namespace cropcast::ml
