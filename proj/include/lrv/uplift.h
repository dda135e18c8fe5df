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

// Three-model heterogeneous treatment effect estimator.
//
// m_treatment and m_control are fit on the treated and control training
// rows. Every training row then gets the pseudo-outcome
// d = m_treatment(x) - m_control(x), and m_difference is fit on (x, d). The
// deployed uplift score is m_difference's output. Evaluation rows never
// reach a fit call; their fingerprints are recorded when they are added and
// every fit input is checked against them.

#ifndef LRV_UPLIFT_H_
#define LRV_UPLIFT_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrv/core.h"
#include "lrv/gbdt.h"
#include "lrv/stats.h"

namespace lrv::uplift {

class LeakageError : public Error {
 public:
  using Error::Error;
};

enum class SplitTag { kTrain, kEvaluation };

struct ExperimentRow {
  ProducerId producer{0};
  std::vector<double> features;  // observed before the experiment started
  bool treated = false;
  double outcome = 0.0;
  SplitTag split = SplitTag::kTrain;
};

// Hash of producer, features, arm and outcome. The split tag is excluded so
// a re-tagged evaluation row is still recognized.
std::uint64_t fingerprint(const ExperimentRow& row);

class ExperimentDataset {
 public:
  explicit ExperimentDataset(std::vector<std::string> feature_names = {});

  // Throws DomainError on a feature-length mismatch or non-finite values.
  void add(ExperimentRow row);

  std::size_t dim() const { return names_.size(); }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<ExperimentRow>& rows() const { return rows_; }
  std::vector<ExperimentRow>& mutable_rows() { return rows_; }
  std::vector<ExperimentRow> rows_with(SplitTag split) const;
  bool is_evaluation_row(const ExperimentRow& row) const {
    return evaluation_.contains(fingerprint(row));
  }

 private:
  std::vector<std::string> names_;
  std::vector<ExperimentRow> rows_;
  std::set<std::uint64_t> evaluation_;
};

struct UpliftModel {
  gbdt::TreeEnsemble m_treatment;
  gbdt::TreeEnsemble m_control;
  gbdt::TreeEnsemble m_difference;
  std::size_t train_row_count = 0;
  std::size_t treated_train_rows = 0;
  std::size_t control_train_rows = 0;
  // Training targets of m_difference, in training-row order.
  std::vector<double> pseudo_outcomes;

  std::size_t dim() const { return m_difference.dim(); }
};

UpliftModel fit_three_tree(const ExperimentDataset& data, const gbdt::TrainParams& params_t,
                           const gbdt::TrainParams& params_c, const gbdt::TrainParams& params_d);

// {m_treatment, m_control, m_difference, train_row_count, ...}. The
// pseudo-outcomes are not stored.
nlohmann::json to_json(const UpliftModel& model);
UpliftModel uplift_model_from_json(const nlohmann::json& j);

// m_difference(x). Throws DomainError on a dimension mismatch.
double predict_uplift(const UpliftModel& model, std::span<const double> x);

struct GroupStats {
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  double ate_estimate = 0.0;
  double ci95_halfwidth = 0.0;
  double standard_error = 0.0;
  double control_mean = 0.0;
  // 100 * ate / control_mean; empty when the control mean is zero.
  std::optional<double> ate_pct_of_control;
};

struct GroupComparison {
  double cutoff_percentile = 80.0;
  double cutoff_score = 0.0;
  GroupStats high;
  GroupStats low;
  double difference = 0.0;  // ate_high - ate_low
  double difference_ci95 = 0.0;
  double p_value = 1.0;
  bool difference_significant = false;
  // Set when every score tied and the split fell back to row position.
  bool tie_fallback = false;
};

// Rows scoring above the cutoff percentile form the high group; ties at the
// cutoff go low. Throws DomainError for a cutoff outside (0, 100) or an
// empty (group, arm) cell.
GroupComparison evaluate_high_low(const UpliftModel& model, const std::vector<ExperimentRow>& rows,
                                  double cutoff_percentile = 80.0);

nlohmann::json to_json(const GroupComparison& comparison);

// A paired boost experiment: k random producers from each score group are
// boosted; the rest of each group is the comparison arm.
struct FollowUpDesign {
  std::set<ProducerId> high_group;
  std::set<ProducerId> low_group;
  std::set<ProducerId> high_boost;
  std::set<ProducerId> low_boost;
  double cutoff_percentile = 80.0;
  int k_per_group = 0;
  std::uint64_t seed = 0;
  std::string hypothesis = "production gain(high) > production gain(low)";

  std::set<ProducerId> boost_set() const;
};

FollowUpDesign validate_follow_up_design(const UpliftModel& model,
                                         const std::vector<Producer>& population, int k_per_group,
                                         double cutoff_percentile, std::uint64_t seed);

nlohmann::json to_json(const FollowUpDesign& design);

// CSV: producer_id,treated,outcome,f_0,...,f_{d-1}[,split]
void write_experiment_csv(std::ostream& out, const ExperimentDataset& data);
ExperimentDataset read_experiment_csv(std::istream& in);

}  // namespace lrv::uplift

#endif  // LRV_UPLIFT_H_
