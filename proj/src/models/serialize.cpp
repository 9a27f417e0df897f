#include <string>

#include "cropcast/error.hpp"
#include "cropcast/ml/model.hpp"

namespace cropcast::ml {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) r[static_cast<std::size_t>(c)] = m(i, c);
    rows.push_back(std::move(r));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from(const json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != m.rows()) throw Error(Errc::invalid_data, "matrix row count mismatch");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto r = data[static_cast<std::size_t>(i)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(r.size()) != m.cols()) throw Error(Errc::invalid_data, "matrix column count mismatch");
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = r[static_cast<std::size_t>(c)];
  }
  return m;
}

json tree_json(const Tree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
  return nodes;
}

Tree tree_from(const json& j) {
  Tree t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.value = n.at(4).get<double>();
    t.nodes.push_back(node);
  }
  const int size = static_cast<int>(t.nodes.size());
  for (const auto& node : t.nodes) {
    if (node.feature >= 0 && (node.left <= 0 || node.left >= size || node.right <= 0 || node.right >= size)) {
      throw Error(Errc::invalid_data, "tree node points outside the tree");
    }
  }
  if (t.nodes.empty()) throw Error(Errc::invalid_data, "empty tree");
  return t;
}

}  // namespace

json Hyperparams::to_json(ModelKind kind) const {
  switch (kind) {
    case ModelKind::DTR:
      return {{"max_depth", max_depth}, {"min_samples_leaf", min_samples_leaf}};
    case ModelKind::RFR:
    case ModelKind::RFC:
      return {{"max_depth", max_depth},
              {"min_samples_leaf", min_samples_leaf},
              {"n_trees", n_trees},
              {"max_features", max_features}};
    case ModelKind::GBR:
    case ModelKind::GBC:
      return {{"max_depth", max_depth},
              {"min_samples_leaf", min_samples_leaf},
              {"n_stages", n_stages},
              {"shrinkage", shrinkage}};
    case ModelKind::SVC:
      return {{"cost", cost},
              {"gamma", gamma},
              {"smo_tolerance", smo_tolerance},
              {"max_smo_iterations", max_smo_iterations}};
    case ModelKind::LoR:
      return {{"learning_rate", learning_rate}, {"gd_iterations", gd_iterations}, {"l2", l2}};
    case ModelKind::LR:
      return {{"ridge", ridge}};
  }
  return json::object();
}

Hyperparams Hyperparams::from_json(ModelKind kind, const json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_data, "hyperparameters must be a JSON object");
  Hyperparams h = defaults(kind);
  const json known = h.to_json(kind);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw Error(Errc::invalid_data, "unknown hyperparameter '" + key + "' for " + std::string(to_string(kind)));
    }
    if (!value.is_number()) throw Error(Errc::invalid_data, "hyperparameter '" + key + "' must be a number");
  }
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("max_depth", h.max_depth);
  read("min_samples_leaf", h.min_samples_leaf);
  read("n_trees", h.n_trees);
  read("max_features", h.max_features);
  read("n_stages", h.n_stages);
  read("shrinkage", h.shrinkage);
  read("cost", h.cost);
  read("gamma", h.gamma);
  read("smo_tolerance", h.smo_tolerance);
  read("max_smo_iterations", h.max_smo_iterations);
  read("learning_rate", h.learning_rate);
  read("gd_iterations", h.gd_iterations);
  read("l2", h.l2);
  read("ridge", h.ridge);
  h.validate(kind);
  return h;
}

json TrainedModel::to_json() const {
  json j;
  j["format"] = "cropcast-model/1";
  j["kind"] = std::string(ml::to_string(kind_));
  j["hyperparams"] = hyper_.to_json(kind_);
  j["feature_names"] = feature_names_;
  if (is_classifier(kind_)) j["label_vocabulary"] = vocabulary_;
  j["seed"] = seed_;

  json params;
  switch (kind_) {
    case ModelKind::DTR:
    case ModelKind::RFR:
    case ModelKind::RFC: {
      json trees = json::array();
      for (const auto& t : trees_) trees.push_back(tree_json(t));
      params["trees"] = std::move(trees);
      break;
    }
    case ModelKind::GBR: {
      json trees = json::array();
      for (const auto& t : trees_) trees.push_back(tree_json(t));
      params["base"] = base_;
      params["trees"] = std::move(trees);
      params["staged_training_loss"] = staged_loss_;
      break;
    }
    case ModelKind::GBC: {
      json trees = json::array();
      for (const auto& t : trees_) trees.push_back(tree_json(t));
      params["class_base"] = class_base_;
      params["trees"] = std::move(trees);
      break;
    }
    case ModelKind::LR:
      params["coefficients"] = vector_json(linear_);
      break;
    case ModelKind::LoR:
      params["mean"] = vector_json(mean_);
      params["scale"] = vector_json(scale_);
      params["weights"] = matrix_json(weights_);
      params["intercepts"] = vector_json(intercepts_);
      break;
    case ModelKind::SVC: {
      const auto& s = *svc_;
      params["mean"] = vector_json(s.mean);
      params["scale"] = vector_json(s.scale);
      params["gamma"] = s.gamma;
      params["train_x"] = matrix_json(s.train_x);
      json machines = json::array();
      for (const auto& m : s.machines) {
        machines.push_back({{"support", m.support}, {"coef", m.coef}, {"bias", m.bias}, {"iterations", m.iterations}});
      }
      params["machines"] = std::move(machines);
      break;
    }
  }
  j["params"] = std::move(params);
  return j;
}

TrainedModel TrainedModel::from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "cropcast-model/1") {
      throw Error(Errc::invalid_data, "unsupported model format");
    }
    TrainedModel m;
    m.kind_ = parse_model_kind(j.at("kind").get<std::string>());
    m.hyper_ = Hyperparams::from_json(m.kind_, j.at("hyperparams"));
    m.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
    if (is_classifier(m.kind_)) m.vocabulary_ = j.at("label_vocabulary").get<std::vector<std::string>>();
    m.seed_ = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("params");
    const auto arity = static_cast<Eigen::Index>(m.feature_names_.size());
    const auto classes = static_cast<Eigen::Index>(m.vocabulary_.size());

    auto load_trees = [&] {
      for (const auto& t : p.at("trees")) m.trees_.push_back(tree_from(t));
      for (const auto& t : m.trees_) {
        for (const auto& node : t.nodes) {
          if (node.feature >= arity) throw Error(Errc::invalid_data, "tree splits on an unknown feature");
          if (is_classifier(m.kind_) && m.kind_ != ModelKind::GBC && node.feature < 0 &&
              (node.value < 0 || node.value >= static_cast<double>(classes))) {
            throw Error(Errc::invalid_data, "tree leaf outside the label vocabulary");
          }
        }
      }
      if (m.trees_.empty()) throw Error(Errc::invalid_data, "model has no trees");
    };

    switch (m.kind_) {
      case ModelKind::DTR:
      case ModelKind::RFR:
      case ModelKind::RFC:
        load_trees();
        break;
      case ModelKind::GBR:
        m.base_ = p.at("base").get<double>();
        load_trees();
        m.staged_loss_ = p.at("staged_training_loss").get<std::vector<double>>();
        break;
      case ModelKind::GBC:
        m.class_base_ = p.at("class_base").get<std::vector<double>>();
        load_trees();
        if (static_cast<Eigen::Index>(m.class_base_.size()) != classes || m.trees_.size() % m.class_base_.size() != 0) {
          throw Error(Errc::invalid_data, "boosted classifier shape mismatch");
        }
        break;
      case ModelKind::LR:
        m.linear_ = vector_from(p.at("coefficients"));
        if (m.linear_.size() != arity + 1) throw Error(Errc::invalid_data, "coefficient count mismatch");
        break;
      case ModelKind::LoR:
        m.mean_ = vector_from(p.at("mean"));
        m.scale_ = vector_from(p.at("scale"));
        m.weights_ = matrix_from(p.at("weights"));
        m.intercepts_ = vector_from(p.at("intercepts"));
        if (m.mean_.size() != arity || m.scale_.size() != arity || m.weights_.rows() != classes ||
            m.weights_.cols() != arity || m.intercepts_.size() != classes) {
          throw Error(Errc::invalid_data, "logistic model shape mismatch");
        }
        break;
      case ModelKind::SVC: {
        auto s = std::make_shared<SvcState>();
        s->mean = vector_from(p.at("mean"));
        s->scale = vector_from(p.at("scale"));
        s->gamma = p.at("gamma").get<double>();
        s->train_x = matrix_from(p.at("train_x"));
        for (const auto& mj : p.at("machines")) {
          BinarySvm b;
          b.support = mj.at("support").get<std::vector<int>>();
          b.coef = mj.at("coef").get<std::vector<double>>();
          b.bias = mj.at("bias").get<double>();
          b.iterations = mj.at("iterations").get<long>();
          if (b.support.size() != b.coef.size()) throw Error(Errc::invalid_data, "support vector count mismatch");
          for (int i : b.support) {
            if (i < 0 || i >= s->train_x.rows()) throw Error(Errc::invalid_data, "support vector index out of range");
          }
          s->machines.push_back(std::move(b));
        }
        if (s->mean.size() != arity || s->scale.size() != arity || s->train_x.cols() != arity ||
            static_cast<Eigen::Index>(s->machines.size()) != classes) {
          throw Error(Errc::invalid_data, "SVC shape mismatch");
        }
        m.svc_ = std::move(s);
        break;
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_data, std::string("malformed model document: ") + e.what());
  }
}

}  // namespace cropcast::ml
