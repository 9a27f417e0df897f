#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cropcast/ml/model.hpp"
#include "cropcast/rng.hpp"

namespace cropcast::ml::detail {

struct TreeConfig {
  int max_depth = 12;
  int min_samples_leaf = 1;
  int max_features = 0;  // 0 or >= m: every feature at every node
};

/// CART regression tree grown by variance reduction on rows `sample` of `x`.
/// `sample` may repeat rows (bootstrap). `rng` is only drawn from when
/// feature subsampling is active.
Tree grow_regression_tree(const Eigen::MatrixXd& x, std::span<const double> y,
                          std::vector<std::size_t> sample, const TreeConfig& config, Rng& rng);

/// CART classification tree grown by Gini decrease; leaves hold the majority
/// class (ties to the lowest index).
Tree grow_classification_tree(const Eigen::MatrixXd& x, std::span<const int> labels, int classes,
                              std::vector<std::size_t> sample, const TreeConfig& config, Rng& rng);

/// Index of the leaf node that `row` falls into.
int find_leaf(const Tree& tree, std::span<const double> row);

/// Soft-margin binary SVM on a precomputed Gram matrix by SMO with
/// second-order working set selection. `y` holds +1/-1.
BinarySvm train_binary_svm(const Eigen::MatrixXd& gram, std::span<const double> y, double cost,
                           double tolerance, long max_iterations);

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd apply(std::span<const double> row) const;
};

}  // namespace cropcast::ml::detail
