#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cropcast/error.hpp"
#include "cropcast/ml/table.hpp"
#include "cropcast/rng.hpp"

namespace cropcast::ml {

void LabeledTable::validate() const {
  if (rows.rows() < 1) throw Error(Errc::invalid_data, "table has no rows");
  if (static_cast<std::size_t>(rows.cols()) != feature_names.size()) {
    throw Error(Errc::invalid_data, "feature name count does not match column count");
  }
  if (!rows.allFinite()) throw Error(Errc::invalid_data, "table contains non-finite features");
  if (is_classification()) {
    if (labels.size() != size()) throw Error(Errc::invalid_data, "label count does not match row count");
    const int k = static_cast<int>(label_vocabulary.size());
    for (int l : labels) {
      if (l < 0 || l >= k) throw Error(Errc::invalid_data, "label outside vocabulary");
    }
  } else {
    if (targets.size() != size()) throw Error(Errc::invalid_data, "target count does not match row count");
    for (double t : targets) {
      if (!std::isfinite(t)) throw Error(Errc::invalid_data, "table contains non-finite targets");
    }
  }
}

LabeledTable LabeledTable::regression(std::vector<std::string> feature_names, Eigen::MatrixXd rows,
                                      std::vector<double> targets) {
  LabeledTable t;
  t.feature_names = std::move(feature_names);
  t.rows = std::move(rows);
  t.targets = std::move(targets);
  t.validate();
  return t;
}

LabeledTable LabeledTable::classification(std::vector<std::string> feature_names, Eigen::MatrixXd rows,
                                          const std::vector<std::string>& labels) {
  LabeledTable t;
  t.feature_names = std::move(feature_names);
  t.rows = std::move(rows);
  const std::set<std::string> distinct(labels.begin(), labels.end());
  t.label_vocabulary.assign(distinct.begin(), distinct.end());
  t.labels.reserve(labels.size());
  for (const auto& l : labels) {
    t.labels.push_back(static_cast<int>(
        std::lower_bound(t.label_vocabulary.begin(), t.label_vocabulary.end(), l) - t.label_vocabulary.begin()));
  }
  if (t.label_vocabulary.empty()) throw Error(Errc::invalid_data, "table has no rows");
  t.validate();
  return t;
}

LabeledTable LabeledTable::subset(const std::vector<std::size_t>& indices) const {
  LabeledTable out;
  out.feature_names = feature_names;
  out.label_vocabulary = label_vocabulary;
  out.rows.resize(static_cast<Eigen::Index>(indices.size()), rows.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.rows.row(static_cast<Eigen::Index>(k)) = rows.row(static_cast<Eigen::Index>(indices[k]));
    if (is_classification()) out.labels.push_back(labels[indices[k]]);
    else out.targets.push_back(targets[indices[k]]);
  }
  return out;
}

Split train_test_split(const LabeledTable& table, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "test fraction must be in (0, 1)");
  }
  Rng rng(seed);
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < table.size(); ++i) groups[table.is_classification() ? table.labels[i] : 0].push_back(i);

  std::vector<std::size_t> train, test;
  for (auto& [label, members] : groups) {
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.index(i)]);
    auto held = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
    if (members.size() >= 2) held = std::clamp<std::size_t>(held, 1, members.size() - 1);
    else held = 0;
    test.insert(test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(held));
    train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(held), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  if (train.empty() || test.empty()) throw Error(Errc::invalid_data, "table too small to split");
  return {table.subset(train), table.subset(test)};
}

}  // namespace cropcast::ml
