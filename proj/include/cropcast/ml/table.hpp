#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cropcast::ml {

/// Feature matrix plus either numeric targets (regression) or class indices
/// into `label_vocabulary` (classification).
struct LabeledTable {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd rows;
  std::vector<double> targets;
  std::vector<int> labels;
  std::vector<std::string> label_vocabulary;

  bool is_classification() const noexcept { return !label_vocabulary.empty(); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(rows.rows()); }
  std::size_t arity() const noexcept { return static_cast<std::size_t>(rows.cols()); }

  /// Throws Error(invalid_data) on shape mismatches, non-finite features or
  /// labels outside the vocabulary.
  void validate() const;

  static LabeledTable regression(std::vector<std::string> feature_names, Eigen::MatrixXd rows,
                                 std::vector<double> targets);
  /// Vocabulary is the sorted set of distinct `labels`.
  static LabeledTable classification(std::vector<std::string> feature_names, Eigen::MatrixXd rows,
                                     const std::vector<std::string>& labels);

  /// Rows at `indices`, same vocabulary.
  LabeledTable subset(const std::vector<std::size_t>& indices) const;
};

struct Split {
  LabeledTable train;
  LabeledTable test;
};

/// Seeded split holding out `test_fraction` of the rows. Classification
/// tables are stratified per label.
Split train_test_split(const LabeledTable& table, double test_fraction, std::uint64_t seed);

}  // namespace cropcast::ml
