#include "ionbench/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace ionbench {

namespace {

struct Builder {
  const Matrix& X;
  const Vector& y;
  const TreeOptions& opt;
  std::mt19937_64 rng;
  std::vector<TreeNode> nodes;
  std::vector<int> feature_pool;

  int grow(std::vector<Eigen::Index>& rows, int depth) {
    const auto n = static_cast<int>(rows.size());
    double sum = 0, sum_sq = 0;
    for (auto r : rows) {
      sum += y[r];
      sum_sq += y[r] * y[r];
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[static_cast<std::size_t>(id)].value = sum / n;
    nodes[static_cast<std::size_t>(id)].count = n;
    const double sse = sum_sq - sum * sum / n;
    if (depth >= opt.max_depth || n < 2 * opt.min_leaf || sse <= 1e-14 * std::max(1.0, sum_sq)) return id;

    // Features tried at this split.
    const int p = static_cast<int>(X.cols());
    const int tries = std::clamp(static_cast<int>(std::ceil(opt.feature_rate * p)), 1, p);
    if (tries < p) std::shuffle(feature_pool.begin(), feature_pool.end(), rng);
    std::vector<int> candidates(feature_pool.begin(), feature_pool.begin() + tries);
    std::sort(candidates.begin(), candidates.end());

    int best_feature = -1;
    double best_gain = 0, best_threshold = 0;
    std::vector<Eigen::Index> order = rows;
    for (int f : candidates) {
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return X(a, f) < X(b, f); });
      double left_sum = 0;
      for (int i = 0; i + 1 < n; ++i) {
        left_sum += y[order[static_cast<std::size_t>(i)]];
        const int nl = i + 1, nr = n - nl;
        if (nl < opt.min_leaf || nr < opt.min_leaf) continue;
        const double a = X(order[static_cast<std::size_t>(i)], f), b = X(order[static_cast<std::size_t>(i + 1)], f);
        if (!(a < b)) continue;
        const double right_sum = sum - left_sum;
        // SSE drop = sum_l^2/n_l + sum_r^2/n_r - sum^2/n
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - sum * sum / n;
        if (gain > best_gain * (1 + 1e-12) + 1e-15) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (a + b);
          if (!(best_threshold < b)) best_threshold = a;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<Eigen::Index> left, right;
    for (auto r : rows) (X(r, best_feature) <= best_threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int rgt = grow(right, depth + 1);
    TreeNode& node = nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = rgt;
    return id;
  }
};

}  // namespace

RegressionTree RegressionTree::fit(const Matrix& X, const Vector& y, const TreeOptions& opt) {
  if (X.rows() != y.size() || X.rows() == 0) throw Error(Errc::domain, "tree: X and y must be non-empty and aligned");
  if (opt.min_leaf < 1 || opt.max_depth < 0) throw Error(Errc::domain, "tree: min_leaf >= 1 and max_depth >= 0");
  if (X.rows() < opt.min_leaf) throw Error(Errc::domain, "tree: fewer samples than min_leaf");
  if (!(opt.feature_rate > 0 && opt.feature_rate <= 1)) throw Error(Errc::domain, "tree: feature_rate in (0, 1]");
  if (!X.allFinite() || !y.allFinite()) throw Error(Errc::domain, "tree: training data must be finite");
  Builder b{X, y, opt, std::mt19937_64(opt.seed), {}, {}};
  b.feature_pool.resize(static_cast<std::size_t>(X.cols()));
  std::iota(b.feature_pool.begin(), b.feature_pool.end(), 0);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  b.grow(rows, 0);
  RegressionTree t;
  t.nodes_ = std::move(b.nodes);
  t.features_ = static_cast<int>(X.cols());
  return t;
}

double RegressionTree::predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].value;
}

Vector RegressionTree::predict(const Matrix& X) const {
  if (X.cols() != features_) throw Error(Errc::domain, "tree: wrong number of input features");
  Vector out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out[r] = predict_one(X.row(r));
  return out;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    if (n.feature < 0) continue;
    d[static_cast<std::size_t>(n.left)] = d[static_cast<std::size_t>(n.right)] = d[i] + 1;
    deepest = std::max(deepest, d[i] + 1);
  }
  return deepest;
}

nlohmann::json RegressionTree::to_json() const {
  std::vector<int> feature, left, right, count;
  std::vector<double> threshold, value;
  for (const auto& n : nodes_) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    count.push_back(n.count);
  }
  return {{"features", features_}, {"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},       {"value", value},     {"count", count}};
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
  RegressionTree t;
  t.features_ = j.at("features");
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const auto count = j.at("count").get<std::vector<int>>();
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
      count.size() != n) {
    throw Error(Errc::schema_mismatch, "tree: node arrays differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool leaf = feature[i] < 0;
    if (!leaf && (feature[i] >= t.features_ || left[i] <= static_cast<int>(i) || right[i] <= static_cast<int>(i) ||
                  left[i] >= static_cast<int>(n) || right[i] >= static_cast<int>(n))) {
      throw Error(Errc::schema_mismatch, "tree: malformed node " + std::to_string(i));
    }
    t.nodes_.push_back({feature[i], threshold[i], left[i], right[i], value[i], count[i]});
  }
  return t;
}

RandomForest RandomForest::fit(const Matrix& X, const Vector& y, const ForestOptions& opt) {
  if (opt.trees < 1) throw Error(Errc::domain, "forest: need at least one tree");
  const Eigen::Index n = X.rows();
  RandomForest f;
  f.trees_.resize(static_cast<std::size_t>(opt.trees));
  for (int k = 0; k < opt.trees; ++k) f.seeds_.push_back(split_seed(opt.seed, static_cast<std::uint64_t>(k)));

  auto grow = [&](int k) {
    const std::uint64_t seed = f.seeds_[static_cast<std::size_t>(k)];
    TreeOptions to = opt.tree;
    to.seed = split_seed(seed, 1);
    if (!opt.bootstrap) {
      f.trees_[static_cast<std::size_t>(k)] = RegressionTree::fit(X, y, to);
      return;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);
    f.trees_[static_cast<std::size_t>(k)] = RegressionTree::fit(X(rows, Eigen::all), y(rows), to);
  };

  const int threads = std::clamp(opt.threads, 1, opt.trees);
  if (threads == 1) {
    for (int k = 0; k < opt.trees; ++k) grow(k);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int k = w; k < opt.trees; k += threads) grow(k);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return f;
}

Vector RandomForest::predict(const Matrix& X) const {
  Vector sum = Vector::Zero(X.rows());
  for (const auto& t : trees_) sum += t.predict(X);
  return sum / static_cast<double>(trees_.size());
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"schema_version", kTreeSchemaVersion}, {"seeds", seeds_}, {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kTreeSchemaVersion) {
    throw Error(Errc::schema_mismatch, "forest: unsupported schema version");
  }
  RandomForest f;
  f.seeds_ = j.at("seeds").get<std::vector<std::uint64_t>>();
  for (const auto& t : j.at("trees")) f.trees_.push_back(RegressionTree::from_json(t));
  if (f.trees_.empty()) throw Error(Errc::schema_mismatch, "forest: no trees");
  return f;
}

}  // namespace ionbench
