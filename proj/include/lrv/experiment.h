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

// Producer-side experiments on the simulator and the deployment loop that
// turns an uplift model into ranking scores.

#ifndef LRV_EXPERIMENT_H_
#define LRV_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrv/core.h"
#include "lrv/gbdt.h"
#include "lrv/policy.h"
#include "lrv/score_table.h"
#include "lrv/sim.h"
#include "lrv/stats.h"
#include "lrv/uplift.h"

namespace lrv::experiment {

enum class Label {
  kTreatment,
  kControl,
  kEvaluationTreatment,
  kEvaluationControl,
  kHoldout,
  kUntouched,
};

std::string to_string(Label label);

struct Fractions {
  double treatment = 0.0;
  double control = 0.0;
  double evaluation_treatment = 0.0;
  double evaluation_control = 0.0;
  double holdout = 0.0;

  void validate() const;
};

struct Assignment {
  std::map<ProducerId, Label> labels;
  Fractions fractions;
  std::uint64_t seed = 0;

  Label label(ProducerId producer) const;
  std::set<ProducerId> with(Label label) const;
  std::set<ProducerId> boosted() const;  // treatment and evaluation_treatment
  std::map<Label, std::size_t> group_sizes() const;
};

// Group sizes are floor(n * fraction) per group plus largest-remainder
// rounding of the total; members are drawn by a seeded shuffle.
Assignment assign(const std::vector<Producer>& producers, const Fractions& fractions,
                  std::uint64_t seed);

struct ProducerOutcome {
  int posts = 0;  // posts created after the first period
  int likes = 0;
  int comments = 0;
};

// Treated mean over control mean minus one, with a delta-method interval.
// relative is empty when the control mean is zero.
struct Lift {
  double treated_mean = 0.0;
  double control_mean = 0.0;
  stats::Estimate absolute;
  std::optional<stats::Estimate> relative;
};

struct BoostReport {
  std::map<ProducerId, ProducerOutcome> outcomes;
  Lift likes;
  Lift comments;
  Lift posts;
  std::map<Label, std::size_t> group_sizes;
  double multiplier = 1.0;
  int periods = 0;
  std::uint64_t seed = 0;
  std::uint64_t feature_hash = 0;  // snapshot taken before the first step
};

nlohmann::json to_json(const BoostReport& report);

struct BoostExperiment {
  // Outcome is posts created per period, so models fit on windows of
  // different lengths share one scale.
  uplift::ExperimentDataset dataset;
  BoostReport report;
  ScenarioState final_state;
};

// Hash of every producer's id and features.
std::uint64_t feature_snapshot_hash(const std::vector<Producer>& producers);

// Runs periods steps with the assignment's boosted producers multiplied by
// boost_multiplier. Posts made in response to the last period are counted,
// so the world is simulated with horizon periods + 1. Producers labeled
// holdout or untouched are left out of the dataset.
BoostExperiment run_boost_experiment(const Scenario& scenario, const Assignment& assignment,
                                     double boost_multiplier, int periods, std::uint64_t seed);

// predict_uplift for every producer.
std::map<ProducerId, double> score_producers(const uplift::UpliftModel& model,
                                             const std::vector<Producer>& producers);

// Holdout producers get the mean of the non-holdout scores.
ScoreTable deploy(const std::map<ProducerId, double>& scores, const std::set<ProducerId>& holdout,
                  int model_version = 1, int trained_at = 0);

struct GoalMetric {
  double value = 0.0;
  std::int64_t events = 0;
  std::int64_t missing_scores = 0;
};

// Sum over engagement events (likes and comments) of the recipient
// producer's score.
GoalMetric goal_metric(const std::vector<EngagementEvent>& log, const ScoreTable& table);

struct RetrainSchedule {
  int cadence_periods = 7;
  // The live model is retired once its holdout lift is at or below the
  // threshold for deprecation_patience cycles in a row.
  double deprecation_threshold = 0.0;
  int deprecation_patience = 2;
  // Holdout cycles kept for retraining.
  int window_cycles = 8;
  // Share of holdout producers boosted in each cycle and their multiplier.
  double rotation_fraction = 0.5;
  double rotation_multiplier = 2.0;
  // Percentile splitting the holdout into high and low for the lift.
  double lift_cutoff = 50.0;

  void validate() const;
};

struct RetrainConfig {
  RetrainSchedule schedule;
  int horizon = 28;
  double score_weight = 1.0;
  gbdt::TrainParams params_t;
  gbdt::TrainParams params_c;
  gbdt::TrainParams params_d;
  std::uint64_t seed = 0;
};

struct LiftPoint {
  int cycle = 0;
  int end_period = 0;
  int model_version = 0;
  double lift = 0.0;  // ate_high - ate_low among holdout producers
  double ci95 = 0.0;
};

struct RetrainResult {
  std::vector<ScoreTable> tables;  // tables[0] is the initial table
  std::vector<LiftPoint> lift_series;
  std::optional<int> deprecated_at_cycle;
  ScenarioState final_state;
  std::int64_t holdout_audit_checks = 0;
  std::int64_t holdout_audit_violations = 0;
  std::vector<std::string> warnings;
};

// Runs the deployed policy to the horizon. Each cycle boosts a fresh random
// part of the holdout, measures the live model's lift on the holdout, and
// refits the model on the holdout's recent cycles. Throws DomainError when
// the holdout is empty.
RetrainResult retrain_loop(const Scenario& scenario, const Assignment& assignment,
                           const uplift::UpliftModel& initial_model, const RetrainConfig& config);

void write_lift_series_csv(std::ostream& out, const std::vector<LiftPoint>& series);

struct FollowUpResult {
  stats::Estimate gain_high;  // boosted minus unboosted posts per period
  stats::Estimate gain_low;
  stats::Estimate difference;
  double p_value = 1.0;
  bool confirmed = false;  // difference > 0 and p < 0.05
};

FollowUpResult run_follow_up(const Scenario& scenario, const uplift::FollowUpDesign& design,
                             double boost_multiplier, int periods, std::uint64_t seed);

nlohmann::json to_json(const FollowUpResult& result);

struct PolicyRun {
  double discounted_value = 0.0;
  std::map<ViewerId, double> per_viewer;
  GoalMetric goal;
  std::vector<EngagementEvent> engagement_log;
};

// Simulates the policy to the scenario horizon and scores it both ways.
PolicyRun evaluate_policy(const Scenario& scenario, const RankingPolicy& policy,
                          const ScoreTable& table, std::uint64_t seed);

}  // namespace lrv::experiment

#endif  // LRV_EXPERIMENT_H_
