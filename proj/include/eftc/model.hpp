#pragma once

#include "eftc/boost.hpp"
#include "eftc/enrich.hpp"
#include "eftc/forest.hpp"
#include "eftc/knn.hpp"
#include "eftc/tree.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string_view>
#include <variant>

namespace eftc {

enum class Method { Tree, Forest, BoostLevel, BoostLeaf, Knn };

inline constexpr std::array<Method, 5> kAllMethods{Method::Tree, Method::Forest, Method::BoostLevel,
                                                   Method::BoostLeaf, Method::Knn};

/// "TREE", "FOREST", "BOOST_LEVEL", "BOOST_LEAF", "KNN".
std::string_view method_name(Method m) noexcept;
/// Case-insensitive; throws InvalidParam.
Method parse_method(std::string_view name);

/// A trained model of any family plus the feature metadata needed to use it
/// on new data (block layout, basis, optional column scaling).
struct Classifier {
  Method method = Method::Tree;
  nlohmann::json params = nlohmann::json::object();  // effective hyperparameters
  std::variant<Tree, ForestModel, BoostModel, KnnModel> impl;
  BlockLayout layout;
  std::shared_ptr<const BasisSystem> basis;
  std::optional<ColumnScaling> scaling;

  int n_features() const;
  int n_classes() const;

  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  std::vector<int> predict_all(const Matrix& X) const;
};

/// Trains `method` with hyperparameters from a flat JSON object. Unknown
/// keys are rejected (InvalidParam) so typos do not silently fall back to
/// defaults. A "seed" key overrides the `seed` argument.
Classifier train_classifier(Method method, const nlohmann::json& params, const Matrix& X,
                            std::span<const int> y, int n_classes, std::uint64_t seed = 0);

/// Fraction of exact matches.
double accuracy(std::span<const int> predicted, std::span<const int> truth);
double evaluate(const Classifier& model, const Matrix& X, std::span<const int> y);

nlohmann::json to_json(const Classifier& model);
Classifier classifier_from_json(const nlohmann::json& doc);

nlohmann::json tree_to_json(const Tree& t);
Tree tree_from_json(const nlohmann::json& j);

}  // namespace eftc
