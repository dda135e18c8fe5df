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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "lrv/experiment.h"
#include "lrv/pipeline.h"

namespace lrv::experiment {
namespace {

std::vector<Producer> producers(int n) {
  std::vector<Producer> out;
  for (int i = 0; i < n; ++i) out.push_back(Producer{.id = ProducerId{static_cast<std::uint32_t>(i)}});
  return out;
}

Scenario responsive_world(std::uint64_t seed, double responsiveness_scale = 1.0) {
  auto config = pipeline::default_config();
  config.population.responsiveness_scale = responsiveness_scale;
  return pipeline::build_scenario(config, synth_population(config.population, seed));
}

TEST_CASE("assignment group sizes") {
  const Assignment a = assign(producers(10000), {0.02, 0.02, 0.01, 0.01, 0.05}, 7);
  const auto sizes = a.group_sizes();
  CHECK(sizes.at(Label::kTreatment) == 200);
  CHECK(sizes.at(Label::kControl) == 200);
  CHECK(sizes.at(Label::kEvaluationTreatment) == 100);
  CHECK(sizes.at(Label::kEvaluationControl) == 100);
  CHECK(sizes.at(Label::kHoldout) == 500);
  CHECK(sizes.at(Label::kUntouched) == 8900);
  CHECK(a.labels.size() == 10000);
  CHECK(assign(producers(10000), {0.02, 0.02, 0.01, 0.01, 0.05}, 7).labels == a.labels);
  CHECK(assign(producers(10000), {0.02, 0.02, 0.01, 0.01, 0.05}, 8).labels != a.labels);
}

TEST_CASE("largest remainder rounding") {
  const auto sizes = assign(producers(7), {0.5, 0.5, 0, 0, 0}, 1).group_sizes();
  CHECK(sizes.at(Label::kTreatment) + sizes.at(Label::kControl) == 7);
  CHECK(sizes.at(Label::kTreatment) == 4);
  const auto thirds = assign(producers(10), {1.0 / 3, 1.0 / 3, 0, 0, 1.0 / 3}, 1).group_sizes();
  CHECK(thirds.at(Label::kTreatment) + thirds.at(Label::kControl) + thirds.at(Label::kHoldout) == 10);
  CHECK(thirds.at(Label::kUntouched) == 0);
}

TEST_CASE("assignment errors") {
  CHECK_THROWS_AS(assign(producers(10), {0.6, 0.6, 0, 0, 0}, 1), DomainError);
  CHECK_THROWS_AS(assign(producers(10), {-0.1, 0.5, 0, 0, 0}, 1), DomainError);
}

TEST_CASE("property: assignment is a uniform partition") {
  // Every producer lands in treatment about 30% of the time across seeds.
  const auto ps = producers(50);
  std::map<ProducerId, int> treated;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const Assignment a = assign(ps, {0.3, 0.3, 0.1, 0.1, 0.1}, seed);
    CHECK(a.labels.size() == ps.size());
    for (ProducerId p : a.with(Label::kTreatment)) ++treated[p];
  }
  for (const auto& [p, n] : treated) {
    CHECK(n > 80);
    CHECK(n < 160);
  }
}

TEST_CASE("boost experiment on a responsive world") {
  const Scenario world = responsive_world(1);
  const Assignment a = assign(world.producers, {0.25, 0.25, 0.1, 0.1, 0.3}, 1);
  const BoostExperiment e = run_boost_experiment(world, a, 2.0, 14, 1);
  CHECK(e.report.likes.absolute.value > 0.0);
  CHECK(e.report.comments.absolute.value > 0.0);
  CHECK(e.report.posts.absolute.value > 0.0);
  CHECK(e.report.likes.relative->value > 0.0);
  CHECK(e.report.feature_hash == feature_snapshot_hash(world.producers));

  // The dataset holds exactly the experiment arms, evaluation arms tagged.
  const auto sizes = a.group_sizes();
  CHECK(e.dataset.rows().size() == sizes.at(Label::kTreatment) + sizes.at(Label::kControl) +
                                       sizes.at(Label::kEvaluationTreatment) +
                                       sizes.at(Label::kEvaluationControl));
  for (const auto& r : e.dataset.rows()) {
    const Label l = a.label(r.producer);
    CHECK(r.treated == (l == Label::kTreatment || l == Label::kEvaluationTreatment));
    CHECK((r.split == uplift::SplitTag::kEvaluation) ==
          (l == Label::kEvaluationTreatment || l == Label::kEvaluationControl));
    CHECK(r.outcome * 14 == doctest::Approx(e.report.outcomes.at(r.producer).posts));
  }
  const auto j = to_json(e.report);
  CHECK(j.at("lifts").at("likes").contains("rel"));
  CHECK(j.at("group_sizes").at("holdout") == sizes.at(Label::kHoldout));
}

TEST_CASE("boost experiment without responsive producers") {
  const Scenario world = responsive_world(2, 0.0);
  const Assignment a = assign(world.producers, {0.25, 0.25, 0.1, 0.1, 0.3}, 2);
  const BoostExperiment e = run_boost_experiment(world, a, 2.0, 14, 2);
  CHECK(e.report.likes.absolute.value > 0.0);
  CHECK(std::fabs(e.report.posts.absolute.value) <= e.report.posts.absolute.ci95_halfwidth());
}

TEST_CASE("a vanishing boost reproduces the myopic run") {
  const Scenario world = responsive_world(3);
  const Assignment a = assign(world.producers, {0.25, 0.25, 0.1, 0.1, 0.3}, 3);
  const BoostExperiment e = run_boost_experiment(world, a, 1.0 + 1e-12, 10, 3);
  Scenario longer = world;
  longer.objective.horizon = 11;
  const World w(longer);
  ScenarioState state = initial_state(w, 3);
  run_policy(w, state, RankingPolicy::myopic(), 10);
  CHECK(state.engagement_log == e.final_state.engagement_log);
  CHECK(state.created == e.final_state.created);
}

TEST_CASE("boost experiment errors") {
  const Scenario world = responsive_world(4);
  const Assignment none = assign(world.producers, {0.0, 0.5, 0.0, 0.0, 0.0}, 4);
  CHECK_THROWS_AS(run_boost_experiment(world, none, 2.0, 5, 4), DomainError);
  const Assignment a = assign(world.producers, {0.5, 0.5, 0.0, 0.0, 0.0}, 4);
  CHECK_THROWS_AS(run_boost_experiment(world, a, 1.0, 5, 4), DomainError);
  CHECK_THROWS_AS(run_boost_experiment(world, a, 2.0, 0, 4), DomainError);
}

TEST_CASE("deploy gives the holdout the mean score") {
  const ProducerId p1{1}, p2{2}, p3{3};
  const ScoreTable t = deploy({{p1, 0.2}, {p2, 0.8}}, {p3});
  CHECK(t.scores.at(p3) == 0.5);
  CHECK(t.default_score == 0.5);
  CHECK(t.scores.at(p1) == 0.2);

  const ScoreTable overridden = deploy({{p1, 0.2}, {p2, 0.8}, {p3, 9.0}}, {p3});
  CHECK(overridden.scores.at(p3) == 0.5);

  const ScoreTable plain = deploy({{p1, 0.2}, {p2, 0.8}}, {});
  CHECK(plain.scores == std::map<ProducerId, double>{{p1, 0.2}, {p2, 0.8}});
  CHECK(plain.default_score == 0.5);
  CHECK_THROWS_AS(deploy({}, {}), DomainError);
  CHECK_THROWS_AS(deploy({{p3, 1.0}}, {p3}), DomainError);
}

TEST_CASE("uniform scores leave the myopic order unchanged") {
  const Scenario world = responsive_world(5);
  std::map<ProducerId, double> scores;
  for (const auto& p : world.producers) scores[p.id] = 0.37;
  const auto table = std::make_shared<const ScoreTable>(deploy(scores, {ProducerId{0}}));
  const World w(world);
  const ScenarioState a = simulate(w, RankingPolicy::myopic(), 5);
  const ScenarioState b = simulate(w, RankingPolicy::score_augmented(table, 2.0), 5);
  CHECK(a.engagement_log == b.engagement_log);
}

TEST_CASE("goal metric") {
  const ProducerId p1{1}, p2{2}, p9{9};
  std::vector<EngagementEvent> log;
  for (int i = 0; i < 10; ++i) log.push_back({ViewerId{0}, {p1, 1, 0}, 1});
  for (int i = 0; i < 5; ++i) log.push_back({ViewerId{0}, {p2, 1, 0}, 1, EngagementKind::kComment});
  ScoreTable t;
  t.scores = {{p1, 0.2}, {p2, 0.8}};
  const GoalMetric g = goal_metric(log, t);
  CHECK(g.value == doctest::Approx(6.0));
  CHECK(g.events == 15);
  CHECK(g.missing_scores == 0);
  CHECK(goal_metric({}, t).value == 0.0);

  ScoreTable uniform;
  uniform.scores = {{p1, 0.3}, {p2, 0.3}};
  uniform.default_score = 0.3;
  log.push_back({ViewerId{0}, {p9, 1, 0}, 1});
  const GoalMetric u = goal_metric(log, uniform);
  CHECK(u.value == doctest::Approx(0.3 * 16));
  CHECK(u.missing_scores == 1);
}

struct Retrained {
  Assignment assignment;
  uplift::UpliftModel model;
};

Retrained experiment_model(const Scenario& world, std::uint64_t seed) {
  const auto config = pipeline::default_config();
  Assignment a = assign(world.producers, config.fractions, seed);
  const BoostExperiment e = run_boost_experiment(world, a, 2.0, 14, seed);
  return {a, uplift::fit_three_tree(e.dataset, config.params_t, config.params_c, config.params_d)};
}

RetrainConfig retrain_config(int horizon, std::uint64_t seed) {
  const auto config = pipeline::default_config();
  RetrainConfig rc;
  rc.horizon = horizon;
  rc.score_weight = config.score_weight;
  rc.params_t = config.params_t;
  rc.params_c = config.params_c;
  rc.params_d = config.params_d;
  rc.seed = seed;
  return rc;
}

TEST_CASE("retraining on a stationary world keeps the holdout pure and the ranking stable") {
  const Scenario world = responsive_world(4);
  const Retrained r = experiment_model(world, 4);
  const RetrainResult out = retrain_loop(world, r.assignment, r.model, retrain_config(56, 4));
  CHECK_FALSE(out.deprecated_at_cycle.has_value());
  REQUIRE(out.tables.size() == 8);
  CHECK(out.lift_series.size() == 8);
  CHECK(out.holdout_audit_checks > 0);
  CHECK(out.holdout_audit_violations == 0);
  const auto holdout = r.assignment.with(Label::kHoldout);
  for (std::size_t v = 0; v < out.tables.size(); ++v) {
    CHECK(out.tables[v].model_version == static_cast<int>(v) + 1);
    for (ProducerId p : holdout) CHECK(out.tables[v].scores.at(p) == out.tables[v].default_score);
  }
  // The last three retrains, once the window holds several cycles.
  for (std::size_t v = out.tables.size() - 3; v < out.tables.size(); ++v) {
    std::vector<double> prev, next;
    for (const auto& [p, s] : out.tables[v].scores) {
      prev.push_back(out.tables[v - 1].scores.at(p));
      next.push_back(s);
    }
    CHECK(stats::spearman(prev, next) >= 0.9);
  }
  std::ostringstream csv;
  write_lift_series_csv(csv, out.lift_series);
  CHECK(csv.str().rfind("cycle,lift,ci95\n1,", 0) == 0);
}

TEST_CASE("a model is retired once producers stop responding") {
  const Scenario world = responsive_world(2);
  const Retrained r = experiment_model(world, 2);
  Scenario drifting = world;
  drifting.production.drift_period = 15;
  drifting.production.drift_factor = 0.0;
  const RetrainResult out = retrain_loop(drifting, r.assignment, r.model, retrain_config(70, 2));
  REQUIRE(out.deprecated_at_cycle.has_value());
  CHECK(*out.deprecated_at_cycle >= 3);
  // Lifts measured before the drift are positive.
  CHECK(out.lift_series[0].lift > 0.0);
  CHECK(out.lift_series[1].lift > 0.0);
  CHECK(out.lift_series.size() == static_cast<std::size_t>(*out.deprecated_at_cycle));
}

TEST_CASE("retraining preconditions") {
  const Scenario world = responsive_world(6);
  Retrained r = experiment_model(world, 6);
  Assignment no_holdout = r.assignment;
  for (auto& [p, label] : no_holdout.labels) {
    if (label == Label::kHoldout) label = Label::kUntouched;
  }
  CHECK_THROWS_AS(retrain_loop(world, no_holdout, r.model, retrain_config(14, 6)), DomainError);
  RetrainConfig rare = retrain_config(5, 6);
  const RetrainResult out = retrain_loop(world, r.assignment, r.model, rare);
  CHECK(out.warnings.size() == 1);
  CHECK(out.tables.size() == 1);
}

TEST_CASE("follow-up experiment confirms the high/low hypothesis") {
  const Scenario world = responsive_world(7);
  const Retrained r = experiment_model(world, 7);
  const auto design = uplift::validate_follow_up_design(r.model, world.producers, 100, 80.0, 7);
  const FollowUpResult f = run_follow_up(world, design, 2.0, 14, 7);
  CHECK(f.gain_high.value > f.gain_low.value);
  CHECK(f.confirmed);
  CHECK(f.p_value < 0.05);
  CHECK(to_json(f).at("confirmed") == true);
}

TEST_CASE("identical policies give identical reports") {
  const Scenario world = responsive_world(8);
  ScoreTable t;
  const auto a = evaluate_policy(world, RankingPolicy::myopic(), t, 8);
  const auto b = evaluate_policy(world, RankingPolicy::myopic(), t, 8);
  CHECK(a.discounted_value == b.discounted_value);
  CHECK(a.goal.value == b.goal.value);
  CHECK(a.engagement_log == b.engagement_log);
}

}  // namespace
}  // namespace lrv::experiment
