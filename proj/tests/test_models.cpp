#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cropcast/error.hpp"
#include "cropcast/metrics.hpp"
#include "cropcast/ml/model.hpp"
#include "cropcast/rng.hpp"
#include "support/oracles.hpp"

using namespace cropcast;
using namespace cropcast::ml;

namespace {

std::vector<double> row_values(const Eigen::MatrixXd& x, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) r[static_cast<std::size_t>(c)] = x(i, c);
  return r;
}

std::vector<std::string> names(Eigen::Index m) {
  std::vector<std::string> out;
  for (Eigen::Index c = 0; c < m; ++c) out.push_back("x" + std::to_string(c));
  return out;
}

// Isotropic Gaussian blobs in 2-D, `per_class` rows each.
LabeledTable blobs(const std::vector<std::pair<double, double>>& centres, std::size_t per_class, double sd,
                   std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(centres.size() * per_class), 2);
  std::vector<std::string> labels;
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < centres.size(); ++k) {
    for (std::size_t i = 0; i < per_class; ++i, ++r) {
      x(r, 0) = rng.normal(centres[k].first, sd);
      x(r, 1) = rng.normal(centres[k].second, sd);
      labels.push_back("class" + std::to_string(k));
    }
  }
  return LabeledTable::classification(names(2), x, labels);
}

LabeledTable yield_table(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
  std::vector<double> y;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = rng.uniform(15, 32);
    x(i, 1) = rng.uniform(800, 3200);
    x(i, 2) = rng.uniform(4.5, 7.5);
    y.push_back(oracle::yield_surface(x(i, 0), x(i, 1), x(i, 2)));
  }
  return LabeledTable::regression({"temperature", "rainfall", "ph"}, x, y);
}

LabeledTable random_classification(std::size_t n, int m, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), m);
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += (x(i, c) = rng.uniform(-2, 2));
    const int k = std::clamp(static_cast<int>((s + 2.0) / 4.0 * classes + rng.normal(0.0, 0.3)), 0, classes - 1);
    labels.push_back(std::string(1, static_cast<char>('A' + k)));
  }
  return LabeledTable::classification(names(m), x, labels);
}

}  // namespace

TEST_CASE("DTR reproduces a step function exactly") {
  Eigen::MatrixXd x(40, 1);
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = -2.0 + 0.1 * i + 0.05;
    y.push_back(x(i, 0) > 0 ? 10.0 : 0.0);
  }
  Hyperparams h = Hyperparams::defaults(ModelKind::DTR);
  h.max_depth = 1;
  const auto model = train_regressor(ModelKind::DTR, LabeledTable::regression({"f"}, x, y), 1, h);
  for (int i = 0; i < 40; ++i) CHECK(model.predict_value(row_values(x, i)) == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("DTR with depth 0 predicts the training mean") {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  Hyperparams h;
  h.max_depth = 0;
  const auto model = train_regressor(ModelKind::DTR, LabeledTable::regression({"f"}, x, {1, 2, 3, 6}), 1, h);
  CHECK(model.predict_value(std::vector<double>{2.5}) == 3.0);
}

TEST_CASE("fully grown DTR interpolates its training rows") {
  const auto table = yield_table(300, 3);
  Hyperparams h;
  h.max_depth = 64;
  h.min_samples_leaf = 1;
  const auto model = train_regressor(ModelKind::DTR, table, 1, h);
  for (Eigen::Index i = 0; i < table.rows.rows(); ++i) {
    CHECK(model.predict_value(row_values(table.rows, i)) == table.targets[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("DTR approximates a smooth surface on held-out points") {
  // Depth 12 caps the tree at 4096 leaves, which limits how closely a
  // piecewise-constant fit can follow a smooth 3-D surface.
  const auto train = yield_table(3000, 5);
  const auto probe = yield_table(1000, 6);
  const auto model = train_regressor(ModelKind::DTR, train, 1);
  const auto r = metrics::regression_report(probe.targets, model.predict_values(probe.rows));
  MESSAGE("DTR held-out R^2 = " << r.r_squared);
  CHECK(r.r_squared >= 0.97);
}

TEST_CASE("LR recovers an exact line") {
  Eigen::MatrixXd x(20, 1);
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    x(i, 0) = i * 0.5 - 3.0;
    y.push_back(3.0 * x(i, 0) + 2.0);
  }
  const auto model = train_regressor(ModelKind::LR, LabeledTable::regression({"x"}, x, y), 0);
  const auto coef = model.linear_coefficients();
  CHECK(std::abs(coef[0] - 3.0) < 1e-8);
  CHECK(std::abs(coef[1] - 2.0) < 1e-8);
  CHECK(std::abs(model.predict_value(std::vector<double>{4.0}) - 14.0) < 1e-8);
}

TEST_CASE("LR survives duplicated columns") {
  Eigen::MatrixXd x(30, 2);
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    x(i, 0) = x(i, 1) = i;
    y.push_back(2.0 * i + 1.0);
  }
  const auto model = train_regressor(ModelKind::LR, LabeledTable::regression(names(2), x, y), 0);
  const auto coef = model.linear_coefficients();
  for (double c : coef) CHECK(std::isfinite(c));
  CHECK(model.predict_value(std::vector<double>{10.0, 10.0}) == doctest::Approx(21.0).epsilon(1e-6));
}

TEST_CASE("GBR fits a smooth function and its staged loss never rises") {
  Rng rng(4);
  Eigen::MatrixXd x(400, 2);
  std::vector<double> y;
  double mean = 0.0;
  for (Eigen::Index i = 0; i < 400; ++i) {
    x(i, 0) = rng.uniform(-3, 3);
    x(i, 1) = rng.uniform(-3, 3);
    y.push_back(std::sin(x(i, 0)) + 0.5 * x(i, 1) * x(i, 1));
    mean += y.back() / 400.0;
  }
  double variance = 0.0;
  for (double v : y) variance += (v - mean) * (v - mean) / 400.0;
  const auto model = train_regressor(ModelKind::GBR, LabeledTable::regression(names(2), x, y), 9);
  const auto& loss = model.staged_training_loss();
  REQUIRE(loss.size() == 201);
  CHECK(loss.front() == doctest::Approx(variance));
  for (std::size_t s = 1; s < loss.size(); ++s) CHECK(loss[s] <= loss[s - 1]);
  CHECK(loss.back() < 0.1 * variance);
  const auto r = metrics::regression_report(y, model.predict_values(x));
  CHECK(std::abs(r.mse - loss.back()) < 1e-9);
}

TEST_CASE("RFR is deterministic and identical serially and in parallel") {
  const auto table = yield_table(400, 8);
  const auto a = train_regressor(ModelKind::RFR, table, 42, std::nullopt, Execution::serial);
  const auto b = train_regressor(ModelKind::RFR, table, 42, std::nullopt, Execution::parallel);
  const auto probe = yield_table(50, 9);
  CHECK(a.predict_values(probe.rows) == b.predict_values(probe.rows));
  CHECK(a.to_json() == b.to_json());
  const auto c = train_regressor(ModelKind::RFR, table, 43);
  CHECK(a.predict_values(probe.rows) != c.predict_values(probe.rows));
  const auto r = metrics::regression_report(probe.targets, a.predict_values(probe.rows));
  CHECK(r.r_squared > 0.9);
}

TEST_CASE("ensembles reject single-row tables") {
  Eigen::MatrixXd x(1, 1);
  x << 1;
  const auto table = LabeledTable::regression({"x"}, x, {2.0});
  CHECK_THROWS_AS(train_regressor(ModelKind::RFR, table, 0), Error);
  CHECK_THROWS_AS(train_regressor(ModelKind::GBR, table, 0), Error);
  CHECK(train_regressor(ModelKind::DTR, table, 0).predict_value(std::vector<double>{5.0}) == 2.0);
}

TEST_CASE("SVC separates two blobs and satisfies KKT") {
  const auto table = blobs({{-3, -3}, {3, 3}}, 50, 1.0, 77);
  const auto model = train_classifier(ModelKind::SVC, table, 1);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < table.rows.rows(); ++i) {
    correct += model.predict_class(row_values(table.rows, i)) == table.labels[static_cast<std::size_t>(i)];
  }
  CHECK(correct == table.size());

  const auto& s = model.svc();
  for (std::size_t k = 0; k < s.machines.size(); ++k) {
    std::vector<double> y;
    for (int l : table.labels) y.push_back(l == static_cast<int>(k) ? 1.0 : -1.0);
    const auto& m = s.machines[k];
    const double worst = oracle::svm_kkt_violation(s.train_x, y, m.support, m.coef, m.bias, s.gamma, 1.0);
    MESSAGE("machine " << k << " KKT violation " << worst);
    CHECK(worst < 1e-3);
    double balance = 0.0;
    for (double c : m.coef) balance += c;
    CHECK(std::abs(balance) < 1e-9);
  }
}

TEST_CASE("SVC on three blobs predicts only vocabulary labels and breaks ties low") {
  const auto table = blobs({{-4, 0}, {4, 0}, {0, 5}}, 40, 1.2, 5);
  const auto model = train_classifier(ModelKind::SVC, table, 1);
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> probe{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const auto scores = model.decision_values(probe);
    const int k = model.predict_class(probe);
    REQUIRE(k >= 0);
    REQUIRE(k < 3);
    for (int j = 0; j < 3; ++j) {
      CHECK(scores[static_cast<std::size_t>(k)] >= scores[static_cast<std::size_t>(j)]);
      if (j < k) CHECK(scores[static_cast<std::size_t>(j)] < scores[static_cast<std::size_t>(k)]);
    }
  }
}

TEST_CASE("SVC is identical serially and in parallel") {
  const auto table = random_classification(300, 4, 4, 12);
  const auto a = train_classifier(ModelKind::SVC, table, 1, std::nullopt, Execution::serial);
  const auto b = train_classifier(ModelKind::SVC, table, 1, std::nullopt, Execution::parallel);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("SVC reports non-convergence at the iteration cap") {
  const auto table = random_classification(200, 3, 3, 2);
  Hyperparams h;
  h.max_smo_iterations = 3;
  CHECK_THROWS_AS(train_classifier(ModelKind::SVC, table, 1, h), Error);
}

TEST_CASE("LoR agrees with the Bayes boundary on blobs") {
  // Equal isotropic covariances and priors: the Bayes rule is the
  // perpendicular bisector x0 + x1 = 0.
  const auto table = blobs({{-2, -2}, {2, 2}}, 50, 1.0, 31);
  const auto model = train_classifier(ModelKind::LoR, table, 1);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < table.rows.rows(); ++i) {
    correct += model.predict_class(row_values(table.rows, i)) == table.labels[static_cast<std::size_t>(i)];
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(table.size()) >= 0.99);

  Rng rng(3);
  int agree = 0;
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> p{rng.uniform(-6, 6), rng.uniform(-6, 6)};
    agree += model.predict_class(p) == (p[0] + p[1] > 0 ? 1 : 0);
  }
  CHECK(agree >= 1940);
}

TEST_CASE("RFC majority vote matches an independent tally of tree votes") {
  const auto table = random_classification(300, 5, 3, 21);
  const auto model = train_classifier(ModelKind::RFC, table, 5);
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> probe(5);
    for (auto& v : probe) v = rng.uniform(-2.5, 2.5);
    const auto votes = model.tree_votes(probe);
    REQUIRE(votes.size() == 100);
    std::map<int, int> tally;
    for (int v : votes) ++tally[v];
    int best = -1, best_count = -1;
    for (const auto& [label, count] : tally) {
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    }
    CHECK(model.predict_class(probe) == best);
  }
}

TEST_CASE("RFC is identical serially and in parallel") {
  const auto table = random_classification(250, 4, 3, 13);
  const auto a = train_classifier(ModelKind::RFC, table, 9, std::nullopt, Execution::serial);
  const auto b = train_classifier(ModelKind::RFC, table, 9, std::nullopt, Execution::parallel);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("GBC learns a separable problem") {
  const auto table = blobs({{-3, 0}, {3, 0}, {0, 4}}, 40, 1.0, 19);
  Hyperparams h = Hyperparams::defaults(ModelKind::GBC);
  h.n_stages = 50;
  const auto model = train_classifier(ModelKind::GBC, table, 1, h);
  std::vector<std::string> truth, pred;
  for (Eigen::Index i = 0; i < table.rows.rows(); ++i) {
    truth.push_back(table.label_vocabulary[static_cast<std::size_t>(table.labels[static_cast<std::size_t>(i)])]);
    pred.push_back(model.predict_label(row_values(table.rows, i)));
  }
  CHECK(metrics::classification_report(truth, pred).accuracy >= 0.97);
}

TEST_CASE("tree predictions are invariant under increasing feature transforms") {
  auto table = random_classification(200, 3, 3, 40);
  auto reg = yield_table(200, 41);
  auto transformed = table;
  auto reg_transformed = reg;
  for (Eigen::Index i = 0; i < table.rows.rows(); ++i) {
    transformed.rows(i, 1) = std::exp(table.rows(i, 1)) + 5.0;
    reg_transformed.rows(i, 2) = std::pow(reg.rows(i, 2), 3.0);
  }
  const auto rfc = train_classifier(ModelKind::RFC, table, 2);
  const auto rfc_t = train_classifier(ModelKind::RFC, transformed, 2);
  const auto dtr = train_regressor(ModelKind::DTR, reg, 2);
  const auto dtr_t = train_regressor(ModelKind::DTR, reg_transformed, 2);
  Rng rng(1);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    std::vector<double> q = p;
    q[1] = std::exp(p[1]) + 5.0;
    CHECK(rfc.predict_class(p) == rfc_t.predict_class(q));

    std::vector<double> r{rng.uniform(15, 32), rng.uniform(800, 3200), rng.uniform(4.5, 7.5)};
    std::vector<double> s = r;
    s[2] = std::pow(r[2], 3.0);
    CHECK(dtr.predict_value(r) == dtr_t.predict_value(s));
  }
}

TEST_CASE("decreasing transforms preserve predictions on training rows") {
  auto table = random_classification(150, 3, 3, 50);
  auto flipped = table;
  for (Eigen::Index i = 0; i < table.rows.rows(); ++i) flipped.rows(i, 0) = -table.rows(i, 0);
  Hyperparams h;
  h.max_depth = 64;
  h.min_samples_leaf = 1;
  const auto a = train_classifier(ModelKind::RFC, table, 4, h);
  const auto b = train_classifier(ModelKind::RFC, flipped, 4, h);
  for (Eigen::Index i = 0; i < table.rows.rows(); ++i) {
    CHECK(a.predict_class(row_values(table.rows, i)) == b.predict_class(row_values(flipped.rows, i)));
  }
}

TEST_CASE("classifier outputs stay inside the vocabulary on random tables") {
  Rng rng(90);
  for (int trial = 0; trial < 6; ++trial) {
    const auto table = random_classification(60 + rng.index(60), 2 + static_cast<int>(rng.index(3)),
                                             2 + static_cast<int>(rng.index(3)), 100 + trial);
    for (auto kind : kClassifiers) {
      Hyperparams h = Hyperparams::defaults(kind);
      h.n_trees = 10;
      h.n_stages = 10;
      h.gd_iterations = 200;
      const auto model = train_classifier(kind, table, 3, h);
      for (int i = 0; i < 50; ++i) {
        std::vector<double> p(table.arity());
        for (auto& v : p) v = rng.uniform(-4, 4);
        const int k = model.predict_class(p);
        CHECK(k >= 0);
        CHECK(k < static_cast<int>(table.label_vocabulary.size()));
      }
    }
  }
}

TEST_CASE("training is deterministic for every kind") {
  const auto clf = random_classification(120, 3, 3, 60);
  const auto reg = yield_table(150, 61);
  for (auto kind : kClassifiers) {
    Hyperparams h = Hyperparams::defaults(kind);
    h.n_stages = 20;
    h.gd_iterations = 300;
    CHECK(train_classifier(kind, clf, 7, h).to_json().dump() == train_classifier(kind, clf, 7, h).to_json().dump());
  }
  for (auto kind : kRegressors) {
    Hyperparams h = Hyperparams::defaults(kind);
    h.n_stages = 20;
    CHECK(train_regressor(kind, reg, 7, h).to_json().dump() == train_regressor(kind, reg, 7, h).to_json().dump());
  }
}

TEST_CASE("JSON round trip preserves predictions") {
  const auto clf = random_classification(120, 3, 3, 70);
  const auto reg = yield_table(150, 71);
  Rng rng(2);
  for (auto kind : kClassifiers) {
    Hyperparams h = Hyperparams::defaults(kind);
    h.n_stages = 20;
    h.gd_iterations = 300;
    const auto model = train_classifier(kind, clf, 7, h);
    const auto back = TrainedModel::from_json(nlohmann::json::parse(model.to_json().dump()));
    CHECK(back.to_json() == model.to_json());
    for (int i = 0; i < 30; ++i) {
      std::vector<double> p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
      CHECK(back.predict_class(p) == model.predict_class(p));
    }
  }
  for (auto kind : kRegressors) {
    Hyperparams h = Hyperparams::defaults(kind);
    h.n_stages = 20;
    const auto model = train_regressor(kind, reg, 7, h);
    const auto back = TrainedModel::from_json(nlohmann::json::parse(model.to_json().dump()));
    for (int i = 0; i < 30; ++i) {
      std::vector<double> p{rng.uniform(15, 32), rng.uniform(800, 3200), rng.uniform(4.5, 7.5)};
      CHECK(back.predict_value(p) == model.predict_value(p));
    }
  }
}

TEST_CASE("malformed model documents are rejected") {
  CHECK_THROWS_AS(TrainedModel::from_json(nlohmann::json::object()), Error);
  const auto reg = yield_table(50, 1);
  auto j = train_regressor(ModelKind::LR, reg, 1).to_json();
  j["params"]["coefficients"] = std::vector<double>{1.0};
  CHECK_THROWS_AS(TrainedModel::from_json(j), Error);
  j = train_regressor(ModelKind::DTR, reg, 1).to_json();
  j["hyperparams"]["bogus"] = 1;
  CHECK_THROWS_AS(TrainedModel::from_json(j), Error);
}

TEST_CASE("predict validates arity and finiteness") {
  const auto reg = yield_table(50, 1);
  const auto model = train_regressor(ModelKind::DTR, reg, 1);
  CHECK_THROWS_AS(model.predict_value(std::vector<double>{1.0, 2.0}), Error);
  CHECK_THROWS_AS(model.predict_value(std::vector<double>{1.0, NAN, 3.0}), Error);
  CHECK_THROWS_AS(model.predict_class(std::vector<double>{1.0, 2.0, 3.0}), Error);
}

TEST_CASE("classifier training validates its table") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const auto one_class = LabeledTable::classification({"x"}, x, {"a", "a", "a"});
  CHECK_THROWS_AS(train_classifier(ModelKind::SVC, one_class, 1), Error);
  auto empty_class = LabeledTable::classification({"x"}, x, {"a", "b", "b"});
  empty_class.label_vocabulary.push_back("c");
  CHECK_THROWS_AS(train_classifier(ModelKind::LoR, empty_class, 1), Error);
  CHECK_THROWS_AS(train_regressor(ModelKind::SVC, empty_class, 1), Error);
  Hyperparams bad;
  bad.cost = 0.0;
  CHECK_THROWS_AS(train_classifier(ModelKind::SVC, LabeledTable::classification({"x"}, x, {"a", "b", "b"}), 1, bad),
                  Error);
}

TEST_CASE("stratified split keeps every class on both sides") {
  const auto table = random_classification(200, 2, 4, 3);
  const auto split = train_test_split(table, 0.2, 42);
  CHECK(split.train.size() + split.test.size() == 200);
  std::map<int, int> train_counts, test_counts;
  for (int l : split.train.labels) ++train_counts[l];
  for (int l : split.test.labels) ++test_counts[l];
  CHECK(train_counts.size() == table.label_vocabulary.size());
  CHECK(test_counts.size() == table.label_vocabulary.size());
  const auto again = train_test_split(table, 0.2, 42);
  CHECK(again.test.rows == split.test.rows);
}
