#include "eftc/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>

namespace eftc {

using nlohmann::json;

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::Tree: return "TREE";
    case Method::Forest: return "FOREST";
    case Method::BoostLevel: return "BOOST_LEVEL";
    case Method::BoostLeaf: return "BOOST_LEAF";
    case Method::Knn: return "KNN";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string up(name);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Method m : kAllMethods)
    if (method_name(m) == up) return m;
  throw Error(ErrorCode::InvalidParam, "unknown method '" + std::string(name) + "'");
}

namespace {

// Reads typed values out of a flat parameter object and remembers which
// keys were consumed.
class ParamReader {
 public:
  explicit ParamReader(const json& j) : j_(j) {
    EFTC_REQUIRE(j_.is_object() || j_.is_null(), ErrorCode::InvalidParam, "parameters must be a JSON object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (j_.is_null() || !j_.contains(key)) return;
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      EFTC_REQUIRE(v.is_boolean(), ErrorCode::InvalidParam, std::string(key) + " must be a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      EFTC_REQUIRE(v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>())),
                   ErrorCode::InvalidParam, std::string(key) + " must be an integer");
      if (v.is_number_unsigned())
        out = static_cast<T>(v.get<std::uint64_t>());
      else if (v.is_number_integer())
        out = static_cast<T>(v.get<std::int64_t>());
      else
        out = static_cast<T>(v.get<double>());
    } else {
      EFTC_REQUIRE(v.is_number(), ErrorCode::InvalidParam, std::string(key) + " must be a number");
      out = v.get<T>();
    }
  }

  void finish() const {
    if (j_.is_null()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      EFTC_REQUIRE(seen_.count(it.key()) > 0, ErrorCode::InvalidParam, "unknown parameter '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::set<std::string> seen_;
};

json boost_params_json(const BoostParams& p) {
  return {{"rounds", p.rounds},         {"learning_rate", p.learning_rate},
          {"max_depth", p.max_depth},   {"max_leaves", p.max_leaves},
          {"reg_lambda", p.reg_lambda}, {"reg_gamma", p.reg_gamma},
          {"min_child_weight", p.min_child_weight},
          {"subsample", p.subsample},   {"colsample", p.colsample},
          {"seed", p.seed}};
}

BoostParams read_boost(ParamReader& r, Method m, std::uint64_t seed) {
  BoostParams p;
  p.growth = m == Method::BoostLeaf ? Growth::LeafWise : Growth::LevelWise;
  if (p.growth == Growth::LeafWise) p.max_depth = -1;
  p.seed = seed;
  r.read("rounds", p.rounds);
  r.read("learning_rate", p.learning_rate);
  r.read("max_depth", p.max_depth);
  r.read("max_leaves", p.max_leaves);
  r.read("reg_lambda", p.reg_lambda);
  r.read("reg_gamma", p.reg_gamma);
  r.read("min_child_weight", p.min_child_weight);
  r.read("subsample", p.subsample);
  r.read("colsample", p.colsample);
  r.read("seed", p.seed);
  return p;
}

}  // namespace

Classifier train_classifier(Method method, const json& params, const Matrix& X, std::span<const int> y,
                            int n_classes, std::uint64_t seed) {
  ParamReader r(params);
  Classifier out;
  out.method = method;
  switch (method) {
    case Method::Tree: {
      TreeParams p;
      r.read("max_depth", p.max_depth);
      r.read("min_samples_split", p.min_samples_split);
      r.read("seed", seed);
      r.finish();
      out.impl = train_tree(X, y, n_classes, p, {}, seed);
      out.params = {{"max_depth", p.max_depth}, {"min_samples_split", p.min_samples_split}, {"seed", seed}};
      break;
    }
    case Method::Forest: {
      ForestParams p;
      p.seed = seed;
      r.read("n_trees", p.n_trees);
      r.read("max_depth", p.max_depth);
      r.read("min_samples_split", p.min_samples_split);
      r.read("mtry", p.mtry);
      r.read("per_split_features", p.per_split_features);
      r.read("bootstrap", p.bootstrap);
      r.read("seed", p.seed);
      r.finish();
      ForestModel f = train_forest(X, y, n_classes, p);
      out.params = {{"n_trees", p.n_trees},
                    {"max_depth", p.max_depth},
                    {"min_samples_split", p.min_samples_split},
                    {"mtry", f.mtry},
                    {"per_split_features", p.per_split_features},
                    {"bootstrap", p.bootstrap},
                    {"seed", p.seed}};
      out.impl = std::move(f);
      break;
    }
    case Method::BoostLevel:
    case Method::BoostLeaf: {
      BoostParams p = read_boost(r, method, seed);
      r.finish();
      out.impl = train_boost(X, y, n_classes, p);
      out.params = boost_params_json(p);
      break;
    }
    case Method::Knn: {
      int k = 5;
      r.read("k", k);
      r.finish();
      out.impl = train_knn(X, y, n_classes, k);
      out.params = {{"k", k}};
      break;
    }
  }
  return out;
}

int Classifier::n_features() const {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KnnModel>)
          return static_cast<int>(m.stored_features.cols());
        else
          return m.n_features;
      },
      impl);
}

int Classifier::n_classes() const {
  return std::visit([](const auto& m) { return m.n_classes; }, impl);
}

int Classifier::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return std::visit([&](const auto& m) { return m.predict(x); }, impl);
}

Vector Classifier::predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return std::visit(
      [&](const auto& m) -> Vector {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Tree>)
          return m.leaf_distribution(m.leaf_index(x));
        else
          return m.predict_proba(x);
      },
      impl);
}

std::vector<int> Classifier::predict_all(const Matrix& X) const {
  EFTC_REQUIRE(X.cols() == n_features(), ErrorCode::DimensionMismatch,
               "matrix has " + std::to_string(X.cols()) + " columns, model expects " +
                   std::to_string(n_features()));
  std::vector<int> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(X.row(i));
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  EFTC_REQUIRE(predicted.size() == truth.size(), ErrorCode::DimensionMismatch, "prediction count differs from label count");
  EFTC_REQUIRE(!truth.empty(), ErrorCode::EmptyInput, "accuracy of an empty set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double evaluate(const Classifier& model, const Matrix& X, std::span<const int> y) {
  EFTC_REQUIRE(X.rows() == static_cast<Eigen::Index>(y.size()), ErrorCode::DimensionMismatch,
               "label count differs from row count");
  const std::vector<int> pred = model.predict_all(X);
  return accuracy(pred, y);
}

// --- persistence -----------------------------------------------------------

json tree_to_json(const Tree& t) {
  json j;
  j["n_features"] = t.n_features;
  j["n_classes"] = t.n_classes;
  std::vector<int> feature, left, right, depth, cls;
  std::vector<double> threshold, weight;
  std::vector<std::vector<double>> counts;
  for (const TreeNode& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    depth.push_back(n.depth);
    cls.push_back(n.predicted_class);
    weight.push_back(n.leaf_weight);
    counts.push_back(n.class_counts);
  }
  j["feature"] = feature;
  j["threshold"] = threshold;
  j["left"] = left;
  j["right"] = right;
  j["depth"] = depth;
  j["predicted_class"] = cls;
  j["leaf_weight"] = weight;
  j["class_counts"] = counts;
  return j;
}

Tree tree_from_json(const json& j) {
  Tree t;
  t.n_features = j.at("n_features").get<int>();
  t.n_classes = j.at("n_classes").get<int>();
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto depth = j.at("depth").get<std::vector<int>>();
  const auto cls = j.at("predicted_class").get<std::vector<int>>();
  const auto weight = j.at("leaf_weight").get<std::vector<double>>();
  const auto counts = j.at("class_counts").get<std::vector<std::vector<double>>>();
  const std::size_t n = feature.size();
  EFTC_REQUIRE(n > 0 && threshold.size() == n && left.size() == n && right.size() == n && depth.size() == n &&
                   cls.size() == n && weight.size() == n && counts.size() == n,
               ErrorCode::ParseError, "tree node arrays differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode node{feature[i], threshold[i], left[i], right[i], depth[i], counts[i], cls[i], weight[i]};
    if (!node.is_leaf()) {
      EFTC_REQUIRE(node.feature < t.n_features && node.left > static_cast<int>(i) && node.right > static_cast<int>(i) &&
                       node.left < static_cast<int>(n) && node.right < static_cast<int>(n),
                   ErrorCode::ParseError, "invalid tree node " + std::to_string(i));
    }
    t.nodes.push_back(std::move(node));
  }
  return t;
}

namespace {

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json model_body(const Classifier& c) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Tree>) {
          return {{"tree", tree_to_json(m)}};
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          json trees = json::array();
          for (const Tree& t : m.trees) trees.push_back(tree_to_json(t));
          json j = {{"mtry", m.mtry}, {"seed", m.seed}, {"n_features", m.n_features},
                    {"n_classes", m.n_classes}, {"trees", trees}};
          j["oob_accuracy"] = m.oob_accuracy ? json(*m.oob_accuracy) : json(nullptr);
          return j;
        } else if constexpr (std::is_same_v<T, BoostModel>) {
          json rounds = json::array();
          for (const auto& round : m.trees) {
            json r = json::array();
            for (const Tree& t : round) r.push_back(tree_to_json(t));
            rounds.push_back(r);
          }
          json p = boost_params_json(m.params);
          p["growth"] = m.params.growth == Growth::LeafWise ? "LEAF_WISE" : "LEVEL_WISE";
          return {{"params", p},
                  {"base_scores", vector_json(m.base_scores)},
                  {"n_features", m.n_features},
                  {"n_classes", m.n_classes},
                  {"rounds", rounds}};
        } else {
          json rows = json::array();
          for (Eigen::Index i = 0; i < m.stored_features.rows(); ++i)
            rows.push_back(vector_json(m.stored_features.row(i).transpose()));
          return {{"k", m.k}, {"n_classes", m.n_classes}, {"labels", m.stored_labels}, {"features", rows}};
        }
      },
      c.impl);
}

}  // namespace

json to_json(const Classifier& c) {
  json doc;
  doc["format"] = "eftc-model";
  doc["version"] = 1;
  doc["kind"] = std::string(method_name(c.method));
  doc["params"] = c.params;
  doc["n_features"] = c.n_features();
  doc["n_classes"] = c.n_classes();
  if (c.layout.width() > 0) {
    std::vector<std::string> tags;
    for (Block b : c.layout.blocks()) tags.emplace_back(block_tag(b));
    doc["layout"] = {{"blocks", tags}, {"basis_size", c.layout.basis_size()}};
  } else {
    doc["layout"] = nullptr;
  }
  if (c.basis) {
    doc["basis"] = {{"order", c.basis->order()},
                    {"t_min", c.basis->t_min()},
                    {"t_max", c.basis->t_max()},
                    {"interior_knots", c.basis->interior_knots()}};
  } else {
    doc["basis"] = nullptr;
  }
  doc["scaling"] = c.scaling ? json{{"mean", vector_json(c.scaling->mean)}, {"scale", vector_json(c.scaling->scale)}}
                             : json(nullptr);
  doc["model"] = model_body(c);
  return doc;
}

Classifier classifier_from_json(const json& doc) {
  try {
    EFTC_REQUIRE(doc.value("format", "") == "eftc-model", ErrorCode::ParseError, "not an eftc model document");
    Classifier c;
    c.method = parse_method(doc.at("kind").get<std::string>());
    c.params = doc.at("params");
    if (!doc.at("layout").is_null()) {
      std::vector<Block> blocks;
      for (const auto& tag : doc["layout"].at("blocks")) blocks.push_back(parse_block(tag.get<std::string>()));
      c.layout = BlockLayout(blocks, doc["layout"].at("basis_size").get<int>());
    }
    if (!doc.at("basis").is_null()) {
      const json& b = doc["basis"];
      c.basis = std::make_shared<const BasisSystem>(b.at("order").get<int>(),
                                                    b.at("interior_knots").get<std::vector<double>>(),
                                                    b.at("t_min").get<double>(), b.at("t_max").get<double>());
    }
    if (!doc.at("scaling").is_null())
      c.scaling = ColumnScaling{vector_from(doc["scaling"].at("mean")), vector_from(doc["scaling"].at("scale"))};

    const json& m = doc.at("model");
    switch (c.method) {
      case Method::Tree: c.impl = tree_from_json(m.at("tree")); break;
      case Method::Forest: {
        ForestModel f;
        f.mtry = m.at("mtry").get<int>();
        f.seed = m.at("seed").get<std::uint64_t>();
        f.n_features = m.at("n_features").get<int>();
        f.n_classes = m.at("n_classes").get<int>();
        if (!m.at("oob_accuracy").is_null()) f.oob_accuracy = m["oob_accuracy"].get<double>();
        for (const auto& t : m.at("trees")) f.trees.push_back(tree_from_json(t));
        EFTC_REQUIRE(!f.trees.empty(), ErrorCode::ParseError, "forest without trees");
        c.impl = std::move(f);
        break;
      }
      case Method::BoostLevel:
      case Method::BoostLeaf: {
        BoostModel b;
        json p = m.at("params");
        p.erase("growth");
        ParamReader pr(p);
        b.params = read_boost(pr, c.method, 0);
        pr.finish();
        b.base_scores = vector_from(m.at("base_scores"));
        b.n_features = m.at("n_features").get<int>();
        b.n_classes = m.at("n_classes").get<int>();
        for (const auto& round : m.at("rounds")) {
          std::vector<Tree> trees;
          for (const auto& t : round) trees.push_back(tree_from_json(t));
          EFTC_REQUIRE(static_cast<int>(trees.size()) == b.n_classes, ErrorCode::ParseError,
                       "boosting round must hold one tree per class");
          b.trees.push_back(std::move(trees));
        }
        EFTC_REQUIRE(b.base_scores.size() == b.n_classes, ErrorCode::ParseError, "base score length mismatch");
        c.impl = std::move(b);
        break;
      }
      case Method::Knn: {
        KnnModel k;
        k.k = m.at("k").get<int>();
        k.n_classes = m.at("n_classes").get<int>();
        k.stored_labels = m.at("labels").get<std::vector<int>>();
        const auto& rows = m.at("features");
        const std::size_t n = rows.size();
        EFTC_REQUIRE(n == k.stored_labels.size() && n > 0, ErrorCode::ParseError, "KNN rows and labels differ");
        const std::size_t p = rows[0].size();
        k.stored_features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < n; ++i) {
          const auto v = rows[i].get<std::vector<double>>();
          EFTC_REQUIRE(v.size() == p, ErrorCode::ParseError, "ragged KNN feature rows");
          for (std::size_t q = 0; q < p; ++q)
            k.stored_features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) = v[q];
        }
        c.impl = std::move(k);
        break;
      }
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed model document: ") + e.what());
  }
}

}  // namespace eftc
