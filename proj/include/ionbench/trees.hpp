#pragma once

#include "ionbench/core.hpp"

#include "json.hpp"

#include <cstdint>
#include <vector>

namespace ionbench {

struct TreeOptions {
  int max_depth = 8;
  int min_leaf = 5;
  double feature_rate = 1.0;  // fraction of features tried at each split
  std::uint64_t seed = 1;     // feature subsampling stream
};

struct TreeNode {
  int feature = -1;           // -1 marks a leaf
  double threshold = 0;       // go left when x[feature] <= threshold
  int left = -1, right = -1;
  double value = 0;           // mean of the training targets reaching the node
  int count = 0;
};

/// CART regression tree: greedy splits maximising the drop in squared error.
class RegressionTree {
 public:
  static RegressionTree fit(const Matrix& X, const Vector& y, const TreeOptions& options = {});

  double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict(const Matrix& X) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;
  int features() const { return features_; }

  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);

 private:
  std::vector<TreeNode> nodes_;
  int features_ = 0;
};

struct ForestOptions {
  int trees = 50;
  bool bootstrap = true;
  std::uint64_t seed = 1;
  int threads = 1;
  TreeOptions tree;
};

/// Mean of trees grown on bootstrap resamples with per-split feature subsampling.
class RandomForest {
 public:
  static RandomForest fit(const Matrix& X, const Vector& y, const ForestOptions& options = {});

  Vector predict(const Matrix& X) const;
  const std::vector<RegressionTree>& trees() const { return trees_; }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  std::vector<RegressionTree> trees_;
  std::vector<std::uint64_t> seeds_;
};

inline constexpr int kTreeSchemaVersion = 1;

}  // namespace ionbench
