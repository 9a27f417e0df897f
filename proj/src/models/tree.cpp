#include <algorithm>
#include <numeric>

#include "cropcast/error.hpp"
#include "learners.hpp"

namespace cropcast::ml {

double Tree::predict(std::span<const double> row) const {
  return nodes[static_cast<std::size_t>(detail::find_leaf(*this, row))].value;
}

int Tree::depth() const {
  // Nodes are stored depth-first with children after their parent.
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

namespace detail {

int find_leaf(const Tree& tree, std::span<const double> row) {
  int i = 0;
  while (tree.nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& node = tree.nodes[static_cast<std::size_t>(i)];
    i = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return i;
}

namespace {

// Split quality is the between-group term: sum^2/n for squared error,
// sum_k count_k^2/n for Gini. Larger is better for both.
struct VarianceCriterion {
  std::span<const double> y;

  struct Stats {
    double n = 0.0;
    double sum = 0.0;
  };

  Stats make(std::span<const std::size_t> rows) const {
    Stats s;
    for (auto i : rows) {
      s.n += 1.0;
      s.sum += y[i];
    }
    return s;
  }
  bool pure(std::span<const std::size_t> rows, const Stats&) const {
    return std::all_of(rows.begin(), rows.end(), [&](std::size_t i) { return y[i] == y[rows[0]]; });
  }
  double leaf_value(const Stats& s) const { return s.sum / s.n; }

  struct Scan {
    double nl = 0.0, sl = 0.0, n, s;
    explicit Scan(const Stats& parent) : n(parent.n), s(parent.sum) {}
  };
  void move_left(Scan& scan, std::size_t i) const {
    scan.nl += 1.0;
    scan.sl += y[i];
  }
  double score(const Scan& scan) const {
    const double sr = scan.s - scan.sl;
    return scan.sl * scan.sl / scan.nl + sr * sr / (scan.n - scan.nl);
  }
  double parent_score(const Stats& s) const { return s.sum * s.sum / s.n; }
};

struct GiniCriterion {
  std::span<const int> labels;
  int classes;

  struct Stats {
    double n = 0.0;
    std::vector<double> counts;
  };

  Stats make(std::span<const std::size_t> rows) const {
    Stats s;
    s.counts.assign(static_cast<std::size_t>(classes), 0.0);
    for (auto i : rows) {
      s.n += 1.0;
      s.counts[static_cast<std::size_t>(labels[i])] += 1.0;
    }
    return s;
  }
  bool pure(std::span<const std::size_t>, const Stats& s) const {
    return std::count_if(s.counts.begin(), s.counts.end(), [](double c) { return c > 0; }) <= 1;
  }
  double leaf_value(const Stats& s) const {
    return static_cast<double>(std::max_element(s.counts.begin(), s.counts.end()) - s.counts.begin());
  }

  struct Scan {
    std::vector<double> left, right;
    double nl = 0.0, n;
    double sq_left = 0.0, sq_right = 0.0;
    explicit Scan(const Stats& parent) : left(parent.counts.size(), 0.0), right(parent.counts), n(parent.n) {
      for (double c : right) sq_right += c * c;
    }
  };
  void move_left(Scan& scan, std::size_t i) const {
    const auto c = static_cast<std::size_t>(labels[i]);
    scan.sq_left += 2.0 * scan.left[c] + 1.0;
    scan.sq_right -= 2.0 * scan.right[c] - 1.0;
    scan.left[c] += 1.0;
    scan.right[c] -= 1.0;
    scan.nl += 1.0;
  }
  double score(const Scan& scan) const { return scan.sq_left / scan.nl + scan.sq_right / (scan.n - scan.nl); }
  double parent_score(const Stats& s) const {
    double sq = 0.0;
    for (double c : s.counts) sq += c * c;
    return sq / s.n;
  }
};

template <class Criterion>
class Grower {
 public:
  Grower(const Eigen::MatrixXd& x, const Criterion& crit, const TreeConfig& config, Rng& rng)
      : x_(x), crit_(crit), config_(config), rng_(rng), features_(static_cast<std::size_t>(x.cols())) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree grow(std::vector<std::size_t> sample) {
    if (sample.empty()) throw Error(Errc::invalid_data, "cannot grow a tree on zero rows");
    build(sample, 0);
    return std::move(tree_);
  }

 private:
  int build(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto stats = crit_.make(rows);
    tree_.nodes[static_cast<std::size_t>(id)].value = crit_.leaf_value(stats);

    const auto n = rows.size();
    const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
    if (depth >= config_.max_depth || n < 2 * min_leaf || crit_.pure(rows, stats)) return id;

    const double parent = crit_.parent_score(stats);
    double best = parent;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, std::size_t>> order(n);
    for (int f : candidate_features()) {
      for (std::size_t k = 0; k < n; ++k) order[k] = {x_(static_cast<Eigen::Index>(rows[k]), f), rows[k]};
      std::sort(order.begin(), order.end());
      typename Criterion::Scan scan(stats);
      for (std::size_t k = 0; k + 1 < n; ++k) {
        crit_.move_left(scan, order[k].second);
        if (k + 1 < min_leaf || n - k - 1 < min_leaf) continue;
        if (order[k].first == order[k + 1].first) continue;
        const double score = crit_.score(scan);
        if (score > best) {
          best = score;
          best_feature = f;
          best_threshold = order[k].first;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : rows) {
      (x_(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? left : right).push_back(i);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::vector<int> candidate_features() {
    const auto m = features_.size();
    const auto k = static_cast<std::size_t>(config_.max_features);
    if (k == 0 || k >= m) return features_;
    std::vector<int> pool = features_;
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng_.index(m - i)]);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  const Eigen::MatrixXd& x_;
  const Criterion& crit_;
  TreeConfig config_;
  Rng& rng_;
  std::vector<int> features_;
  Tree tree_;
};

}  // namespace

Tree grow_regression_tree(const Eigen::MatrixXd& x, std::span<const double> y,
                          std::vector<std::size_t> sample, const TreeConfig& config, Rng& rng) {
  const VarianceCriterion crit{y};
  return Grower<VarianceCriterion>(x, crit, config, rng).grow(std::move(sample));
}

Tree grow_classification_tree(const Eigen::MatrixXd& x, std::span<const int> labels, int classes,
                              std::vector<std::size_t> sample, const TreeConfig& config, Rng& rng) {
  const GiniCriterion crit{labels, classes};
  return Grower<GiniCriterion>(x, crit, config, rng).grow(std::move(sample));
}

}  // namespace detail
}  // namespace cropcast::ml
