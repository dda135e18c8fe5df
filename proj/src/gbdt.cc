/*
 * Copyright 2026 The lrv Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lrv/gbdt.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "lrv/io.h"
#include "lrv/rng.h"

namespace lrv::gbdt {

void TrainParams::validate() const {
  if (rounds < 1) throw DomainError("rounds must be >= 1");
  if (max_leaves < 1) throw DomainError("max_leaves must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw DomainError("learning_rate must lie in (0, 1]");
  }
  if (!(feature_sampling_rate > 0.0 && feature_sampling_rate <= 1.0)) {
    throw DomainError("feature_sampling_rate must lie in (0, 1]");
  }
  if (min_samples_leaf < 1) throw DomainError("min_samples_leaf must be >= 1");
}

Dataset::Dataset(std::size_t dim, std::vector<std::string> feature_names)
    : dim_(dim), names_(std::move(feature_names)) {
  if (names_.empty()) {
    for (std::size_t f = 0; f < dim_; ++f) names_.push_back("f_" + std::to_string(f));
  }
  if (names_.size() != dim_) throw DomainError("feature_names must have one entry per column");
}

void Dataset::add_row(std::span<const double> features, double target) {
  if (features.size() != dim_) {
    throw DomainError("row has " + std::to_string(features.size()) + " features, expected " +
                      std::to_string(dim_));
  }
  features_.insert(features_.end(), features.begin(), features.end());
  targets_.push_back(target);
}

void Dataset::validate() const {
  if (dim_ == 0) throw DomainError("dataset has no feature columns");
  if (targets_.empty()) throw DomainError("dataset is empty");
  for (double v : features_) {
    if (!std::isfinite(v)) throw DomainError("dataset contains a missing or non-finite feature");
  }
  for (double v : targets_) {
    if (!std::isfinite(v)) throw DomainError("dataset contains a missing or non-finite target");
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    const TreeNode& n = nodes[node];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[node].value;
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [](const TreeNode& n) { return n.feature < 0; }));
}

namespace {

struct Split {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  std::size_t left_count = 0;
};

// A node under construction owns rows [begin, end) of every per-feature
// order array.
struct OpenLeaf {
  int node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  Split best;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const std::vector<std::vector<std::uint32_t>>& presorted,
              const std::vector<double>& residuals, const TrainParams& params)
      : data_(data), presorted_(presorted), residuals_(residuals), params_(params),
        goes_left_(data.rows(), 0) {}

  RegressionTree build(const std::vector<int>& features,
                       std::vector<std::pair<std::size_t, std::size_t>>* leaf_ranges,
                       std::vector<int>* leaf_nodes) {
    features_ = features;
    order_.clear();
    for (int f : features_) order_.push_back(presorted_[f]);

    RegressionTree tree;
    tree.nodes.emplace_back();
    std::vector<OpenLeaf> open;
    open.push_back(evaluate(0, 0, data_.rows()));
    int leaves = 1;
    while (leaves < params_.max_leaves) {
      // Largest gain first; the earliest created leaf wins ties.
      auto best = open.end();
      for (auto it = open.begin(); it != open.end(); ++it) {
        if (it->best.feature < 0 || !(it->best.gain > 0.0)) continue;
        if (best == open.end() || it->best.gain > best->best.gain) best = it;
      }
      if (best == open.end()) break;
      OpenLeaf leaf = *best;
      open.erase(best);

      const std::size_t mid = partition(leaf);
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& parent = tree.nodes[leaf.node];
      parent.feature = leaf.best.feature;
      parent.threshold = leaf.best.threshold;
      parent.left = left;
      parent.right = left + 1;
      parent.gain = leaf.best.gain;
      open.push_back(evaluate(left, leaf.begin, mid));
      open.push_back(evaluate(left + 1, mid, leaf.end));
      ++leaves;
    }

    std::sort(open.begin(), open.end(),
              [](const OpenLeaf& a, const OpenLeaf& b) { return a.node < b.node; });
    const auto& rows = order_.empty() ? presorted_[0] : order_[0];
    for (const OpenLeaf& leaf : open) {
      double sum = 0.0;
      for (std::size_t i = leaf.begin; i < leaf.end; ++i) sum += residuals_[rows[i]];
      const std::size_t count = leaf.end - leaf.begin;
      tree.nodes[leaf.node].value = count == 0 ? 0.0 : sum / static_cast<double>(count);
      leaf_ranges->emplace_back(leaf.begin, leaf.end);
      leaf_nodes->push_back(leaf.node);
    }
    return tree;
  }

  // Row indices in the order the leaf ranges refer to.
  const std::vector<std::uint32_t>& row_order() const { return order_.front(); }

 private:
  OpenLeaf evaluate(int node, std::size_t begin, std::size_t end) {
    OpenLeaf leaf{node, begin, end, {}};
    const std::size_t n = end - begin;
    const std::size_t min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    if (n < 2 * min_leaf) return leaf;

    double total = 0.0;
    for (std::size_t i = begin; i < end; ++i) total += residuals_[order_[0][i]];
    const double parent_score = total * total / static_cast<double>(n);

    for (std::size_t k = 0; k < features_.size(); ++k) {
      const int f = features_[k];
      const auto& rows = order_[k];
      double left_sum = 0.0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        left_sum += residuals_[rows[i]];
        const std::size_t left_count = i + 1 - begin;
        if (left_count < min_leaf) continue;
        if (n - left_count < min_leaf) break;
        const double lo = data_.feature(rows[i], f);
        const double hi = data_.feature(rows[i + 1], f);
        if (!(lo < hi)) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(left_count) +
                            right_sum * right_sum / static_cast<double>(n - left_count) -
                            parent_score;
        if (gain > leaf.best.gain) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          leaf.best = Split{gain, f, threshold, left_count};
        }
      }
    }
    return leaf;
  }

  // Stable partition of the leaf's rows in every order array. Returns the
  // first index of the right child.
  std::size_t partition(const OpenLeaf& leaf) {
    std::size_t feature_pos = 0;
    while (features_[feature_pos] != leaf.best.feature) ++feature_pos;
    const auto& split_rows = order_[feature_pos];
    for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
      goes_left_[split_rows[i]] = (i - leaf.begin) < leaf.best.left_count ? 1 : 0;
    }
    for (auto& rows : order_) {
      scratch_.clear();
      std::size_t out = leaf.begin;
      for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
        if (goes_left_[rows[i]]) {
          rows[out++] = rows[i];
        } else {
          scratch_.push_back(rows[i]);
        }
      }
      std::copy(scratch_.begin(), scratch_.end(), rows.begin() + static_cast<std::ptrdiff_t>(out));
    }
    return leaf.begin + leaf.best.left_count;
  }

  const Dataset& data_;
  const std::vector<std::vector<std::uint32_t>>& presorted_;
  const std::vector<double>& residuals_;
  const TrainParams& params_;
  std::vector<int> features_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<char> goes_left_;
  std::vector<std::uint32_t> scratch_;
};

double mean_squared_error(const std::vector<double>& y, const std::vector<double>& pred) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - pred[i];
    sum += e * e;
  }
  return sum / static_cast<double>(y.size());
}

}  // namespace

TreeEnsemble fit(const Dataset& data, const TrainParams& params) {
  params.validate();
  data.validate();
  const std::size_t n = data.rows();
  const std::size_t d = data.dim();
  const auto& y = data.targets();

  TreeEnsemble ensemble;
  ensemble.params = params;
  ensemble.feature_names = data.feature_names();
  ensemble.train_rows = n;
  ensemble.base_prediction = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> pred(n, ensemble.base_prediction);
  ensemble.baseline_loss = mean_squared_error(y, pred);

  std::vector<std::vector<std::uint32_t>> presorted(d);
  for (std::size_t f = 0; f < d; ++f) {
    auto& order = presorted[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return data.feature(a, f) < data.feature(b, f);
    });
  }

  const std::size_t sampled =
      std::min(d, static_cast<std::size_t>(std::ceil(static_cast<double>(d) * params.feature_sampling_rate)));
  Engine engine = make_engine(params.seed, Stream::kGbdt);
  std::vector<int> all_features(d);
  std::iota(all_features.begin(), all_features.end(), 0);

  std::vector<double> residuals(n);
  TreeBuilder builder(data, presorted, residuals, params);
  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residuals[i] = y[i] - pred[i];

    std::vector<int> features = all_features;
    if (sampled < d) {
      for (std::size_t i = 0; i < sampled; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, d - 1);
        std::swap(features[i], features[pick(engine)]);
      }
      features.resize(sampled);
      std::sort(features.begin(), features.end());
    }

    std::vector<std::pair<std::size_t, std::size_t>> leaf_ranges;
    std::vector<int> leaf_nodes;
    RegressionTree tree = builder.build(features, &leaf_ranges, &leaf_nodes);
    const auto& rows = builder.row_order();
    for (std::size_t k = 0; k < leaf_ranges.size(); ++k) {
      const double step = params.learning_rate * tree.nodes[leaf_nodes[k]].value;
      for (std::size_t i = leaf_ranges[k].first; i < leaf_ranges[k].second; ++i) {
        pred[rows[i]] += step;
      }
    }
    ensemble.trees.push_back(std::move(tree));
    ensemble.training_loss_curve.push_back(mean_squared_error(y, pred));
  }
  return ensemble;
}

double predict(const TreeEnsemble& ensemble, std::span<const double> x) {
  if (x.size() != ensemble.dim()) {
    throw DomainError("prediction input has " + std::to_string(x.size()) +
                      " features, model expects " + std::to_string(ensemble.dim()));
  }
  double out = ensemble.base_prediction;
  for (const auto& tree : ensemble.trees) out += ensemble.params.learning_rate * tree.predict(x);
  return out;
}

std::map<std::string, double> feature_importance(const TreeEnsemble& ensemble) {
  std::vector<double> gain(ensemble.dim(), 0.0);
  for (const auto& tree : ensemble.trees) {
    for (const auto& node : tree.nodes) {
      if (node.feature >= 0) gain[node.feature] += node.gain;
    }
  }
  const double total = std::accumulate(gain.begin(), gain.end(), 0.0);
  std::map<std::string, double> out;
  for (std::size_t f = 0; f < gain.size(); ++f) {
    out[ensemble.feature_names[f]] = total > 0.0 ? gain[f] / total : 0.0;
  }
  return out;
}

nlohmann::json to_json(const TrainParams& p) {
  return {{"rounds", p.rounds},
          {"max_leaves", p.max_leaves},
          {"learning_rate", p.learning_rate},
          {"feature_sampling_rate", p.feature_sampling_rate},
          {"min_samples_leaf", p.min_samples_leaf},
          {"seed", p.seed}};
}

TrainParams params_from_json(const nlohmann::json& j, const TrainParams& defaults) {
  TrainParams p = defaults;
  p.rounds = j.value("rounds", p.rounds);
  p.max_leaves = j.value("max_leaves", p.max_leaves);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.feature_sampling_rate = j.value("feature_sampling_rate", p.feature_sampling_rate);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.seed = j.value("seed", p.seed);
  p.validate();
  return p;
}

nlohmann::json to_json(const TreeEnsemble& e) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : e.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
      if (n.feature < 0) {
        nodes.push_back({{"value", n.value}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"gain", n.gain}});
      }
    }
    trees.push_back({{"nodes", nodes}});
  }
  return {{"base_prediction", e.base_prediction},
          {"params", to_json(e.params)},
          {"feature_names", e.feature_names},
          {"baseline_loss", e.baseline_loss},
          {"train_rows", e.train_rows},
          {"training_loss_curve", e.training_loss_curve},
          {"trees", trees}};
}

TreeEnsemble ensemble_from_json(const nlohmann::json& j) {
  TreeEnsemble e;
  e.base_prediction = j.at("base_prediction").get<double>();
  e.params = params_from_json(j.at("params"));
  e.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  e.baseline_loss = j.value("baseline_loss", 0.0);
  e.train_rows = j.value("train_rows", std::size_t{0});
  e.training_loss_curve = j.value("training_loss_curve", std::vector<double>{});
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    for (const auto& n : t.at("nodes")) {
      TreeNode node;
      if (n.contains("feature")) {
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.gain = n.value("gain", 0.0);
      } else {
        node.value = n.at("value").get<double>();
      }
      tree.nodes.push_back(node);
    }
    const int size = static_cast<int>(tree.nodes.size());
    for (const auto& node : tree.nodes) {
      if (node.feature >= 0 &&
          (node.left <= 0 || node.left >= size || node.right <= 0 || node.right >= size ||
           node.feature >= static_cast<int>(e.feature_names.size()))) {
        throw ConfigError("model: tree node references out of range");
      }
    }
    e.trees.push_back(std::move(tree));
  }
  return e;
}

void write_loss_curve_csv(std::ostream& out, const TreeEnsemble& ensemble) {
  out << "round,mse\n";
  for (std::size_t r = 0; r < ensemble.training_loss_curve.size(); ++r) {
    out << r + 1 << ',' << format_double(ensemble.training_loss_curve[r]) << '\n';
  }
}

}  // namespace lrv::gbdt
