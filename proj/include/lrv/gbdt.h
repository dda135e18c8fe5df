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

// Gradient boosted regression trees with squared-error loss.
//
// Each round fits one tree to the current residuals. Trees grow best-first:
// the open leaf whose best axis-aligned split reduces the squared error the
// most is split next, until max_leaves leaves exist or no split with
// min_samples_leaf rows on each side improves the fit. Split search is an
// exact scan over sorted values; thresholds sit halfway between adjacent
// distinct values and rows with x <= threshold go left.

#ifndef LRV_GBDT_H_
#define LRV_GBDT_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrv/core.h"

namespace lrv::gbdt {

struct TrainParams {
  int rounds = 100;
  int max_leaves = 31;
  double learning_rate = 0.1;
  double feature_sampling_rate = 1.0;
  int min_samples_leaf = 20;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainParams&) const = default;
};

// Row-major n x d feature matrix with one target per row.
class Dataset {
 public:
  Dataset(std::size_t dim, std::vector<std::string> feature_names = {});

  void add_row(std::span<const double> features, double target);

  std::size_t rows() const { return targets_.size(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  double feature(std::size_t i, std::size_t f) const { return features_[i * dim_ + f]; }
  const std::vector<double>& targets() const { return targets_; }
  const std::vector<std::string>& feature_names() const { return names_; }

  // Throws DomainError for an empty dataset, d = 0 or non-finite values.
  void validate() const;

 private:
  std::size_t dim_;
  std::vector<std::string> names_;
  std::vector<double> features_;
  std::vector<double> targets_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output
  double gain = 0.0;   // squared-error reduction of this split
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int leaf_count() const;
};

struct TreeEnsemble {
  double base_prediction = 0.0;
  std::vector<RegressionTree> trees;
  TrainParams params;
  std::vector<std::string> feature_names;
  // Mean squared error on the training set after each round.
  std::vector<double> training_loss_curve;
  // Mean squared error of predicting the training mean everywhere.
  double baseline_loss = 0.0;
  std::size_t train_rows = 0;

  std::size_t dim() const { return feature_names.size(); }
};

TreeEnsemble fit(const Dataset& data, const TrainParams& params);

// Throws DomainError on a dimension mismatch.
double predict(const TreeEnsemble& ensemble, std::span<const double> x);

// Total split gain per feature, normalized to sum to one. All zeros when
// the ensemble never split.
std::map<std::string, double> feature_importance(const TreeEnsemble& ensemble);

nlohmann::json to_json(const TrainParams& params);
TrainParams params_from_json(const nlohmann::json& j, const TrainParams& defaults = {});
nlohmann::json to_json(const TreeEnsemble& ensemble);
TreeEnsemble ensemble_from_json(const nlohmann::json& j);

// CSV: round,mse (rounds numbered from 1).
void write_loss_curve_csv(std::ostream& out, const TreeEnsemble& ensemble);

}  // namespace lrv::gbdt

#endif  // LRV_GBDT_H_
