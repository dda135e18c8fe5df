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

#include "lrv/pipeline.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lrv/rng.h"

namespace lrv::pipeline {

void PipelineConfig::validate() const {
  population.validate();
  objective.validate();
  production.validate();
  if (content_ttl < 0) throw DomainError("content_ttl must be >= 0");
  fractions.validate();
  if (!(boost_multiplier > 1.0)) throw DomainError("boost_multiplier must be > 1");
  if (experiment_periods < 1) throw DomainError("experiment_periods must be >= 1");
  params_t.validate();
  params_c.validate();
  params_d.validate();
  if (!(cutoff_percentile > 0.0 && cutoff_percentile < 100.0)) {
    throw DomainError("cutoff_percentile must lie in (0, 100)");
  }
  if (!(score_weight >= 0.0)) throw DomainError("score_weight must be >= 0");
  schedule.validate();
  if (retrain_horizon < 1) throw DomainError("retrain_horizon must be >= 1");
  if (follow_up_k < 0) throw DomainError("follow_up_k must be >= 0");
  if (follow_up_periods < 1) throw DomainError("follow_up_periods must be >= 1");
}

PipelineConfig default_config() {
  PipelineConfig c;
  c.population.n_producers = 3000;
  c.population.n_viewers = 3000;
  c.population.feature_dim = 5;
  c.population.theta = {2.0, -1.0, 0.0, 0.0, 0.0};
  c.population.noise_sigma = 0.5;
  c.population.graph = FollowerGraph::kRandom;
  c.population.edge_probability = 0.002;
  c.population.base_rate = 0.08;
  c.population.slots_per_period = 1;
  c.objective = {0.95, 30, DiscountConvention::kFromZero};
  c.production.mode = ProductionMode::kSmooth;
  c.production.threshold_k.reset();
  c.production.smooth_gain = 8.0;
  c.production.max_posts = 2;
  c.fractions = {0.25, 0.25, 0.1, 0.1, 0.3};
  c.params_t.max_leaves = 4;
  c.params_t.min_samples_leaf = 100;
  c.params_c = c.params_d = c.params_t;
  c.score_weight = 0.15;
  return c;
}

namespace {

Json to_json(const experiment::Fractions& f) {
  return {{"treatment", f.treatment},
          {"control", f.control},
          {"evaluation_treatment", f.evaluation_treatment},
          {"evaluation_control", f.evaluation_control},
          {"holdout", f.holdout}};
}

experiment::Fractions fractions_from_json(const Json& j, experiment::Fractions f) {
  f.treatment = j.value("treatment", f.treatment);
  f.control = j.value("control", f.control);
  f.evaluation_treatment = j.value("evaluation_treatment", f.evaluation_treatment);
  f.evaluation_control = j.value("evaluation_control", f.evaluation_control);
  f.holdout = j.value("holdout", f.holdout);
  f.validate();
  return f;
}

Json to_json(const experiment::RetrainSchedule& s) {
  return {{"cadence_periods", s.cadence_periods},
          {"deprecation_threshold", s.deprecation_threshold},
          {"deprecation_patience", s.deprecation_patience},
          {"window_cycles", s.window_cycles},
          {"rotation_fraction", s.rotation_fraction},
          {"rotation_multiplier", s.rotation_multiplier},
          {"lift_cutoff", s.lift_cutoff}};
}

experiment::RetrainSchedule schedule_from_json(const Json& j, experiment::RetrainSchedule s) {
  s.cadence_periods = j.value("cadence_periods", s.cadence_periods);
  s.deprecation_threshold = j.value("deprecation_threshold", s.deprecation_threshold);
  s.deprecation_patience = j.value("deprecation_patience", s.deprecation_patience);
  s.window_cycles = j.value("window_cycles", s.window_cycles);
  s.rotation_fraction = j.value("rotation_fraction", s.rotation_fraction);
  s.rotation_multiplier = j.value("rotation_multiplier", s.rotation_multiplier);
  s.lift_cutoff = j.value("lift_cutoff", s.lift_cutoff);
  s.validate();
  return s;
}

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::uint64_t fnv(const std::string& s) { return Fnv1a().text(s).digest(); }

gbdt::TrainParams seeded(gbdt::TrainParams p, std::uint64_t seed, std::uint64_t model) {
  p.seed = derive_seed(seed, {p.seed, model});
  return p;
}

}  // namespace

Json to_json(const PipelineConfig& c) {
  return {{"population", lrv::to_json(c.population)},
          {"objective", lrv::to_json(c.objective)},
          {"thresholds", lrv::to_json(c.thresholds)},
          {"production", lrv::to_json(c.production)},
          {"content_ttl", c.content_ttl},
          {"assignment", to_json(c.fractions)},
          {"experiment", {{"boost_multiplier", c.boost_multiplier}, {"periods", c.experiment_periods}}},
          {"models",
           {{"treatment", gbdt::to_json(c.params_t)},
            {"control", gbdt::to_json(c.params_c)},
            {"difference", gbdt::to_json(c.params_d)}}},
          {"evaluation", {{"cutoff_percentile", c.cutoff_percentile}}},
          {"deploy", {{"score_weight", c.score_weight}}},
          {"retrain", {{"horizon", c.retrain_horizon}, {"schedule", to_json(c.schedule)}}},
          {"follow_up", {{"k_per_group", c.follow_up_k}, {"periods", c.follow_up_periods}}}};
}

PipelineConfig config_from_json(const Json& j) {
  PipelineConfig c = default_config();
  if (!j.is_object()) throw ConfigError("config: expected an object");
  if (j.contains("population")) {
    // Unspecified population fields keep the pipeline defaults.
    Json merged = lrv::to_json(c.population);
    const Json& given = j.at("population");
    if (given.is_object() && given.contains("feature_dim") && !given.contains("theta")) merged.erase("theta");
    merged.merge_patch(given);
    c.population = with_context("config.population", [&] { return population_spec_from_json(merged); });
  }
  if (j.contains("objective")) {
    c.objective = with_context("config.objective", [&] { return objective_from_json(j.at("objective")); });
  }
  if (j.contains("thresholds")) {
    c.thresholds = with_context("config.thresholds", [&] { return thresholds_from_json(j.at("thresholds")); });
  }
  if (j.contains("production")) {
    c.production = with_context("config.production", [&] { return production_rule_from_json(j.at("production")); });
  }
  with_context("config", [&] {
    c.content_ttl = j.value("content_ttl", c.content_ttl);
    return 0;
  });
  if (j.contains("assignment")) {
    c.fractions = with_context("config.assignment", [&] { return fractions_from_json(j.at("assignment"), c.fractions); });
  }
  if (j.contains("experiment")) {
    with_context("config.experiment", [&] {
      const Json& e = j.at("experiment");
      c.boost_multiplier = e.value("boost_multiplier", c.boost_multiplier);
      c.experiment_periods = e.value("periods", c.experiment_periods);
      return 0;
    });
  }
  if (j.contains("models")) {
    with_context("config.models", [&] {
      const Json& m = j.at("models");
      gbdt::TrainParams shared;
      if (m.contains("shared")) shared = gbdt::params_from_json(m.at("shared"));
      c.params_t = c.params_c = c.params_d = shared;
      if (m.contains("treatment")) c.params_t = gbdt::params_from_json(m.at("treatment"), shared);
      if (m.contains("control")) c.params_c = gbdt::params_from_json(m.at("control"), shared);
      if (m.contains("difference")) c.params_d = gbdt::params_from_json(m.at("difference"), shared);
      return 0;
    });
  }
  if (j.contains("evaluation")) {
    with_context("config.evaluation", [&] {
      c.cutoff_percentile = j.at("evaluation").value("cutoff_percentile", c.cutoff_percentile);
      return 0;
    });
  }
  if (j.contains("deploy")) {
    with_context("config.deploy", [&] {
      c.score_weight = j.at("deploy").value("score_weight", c.score_weight);
      return 0;
    });
  }
  if (j.contains("retrain")) {
    with_context("config.retrain", [&] {
      const Json& r = j.at("retrain");
      c.retrain_horizon = r.value("horizon", c.retrain_horizon);
      if (r.contains("schedule")) c.schedule = schedule_from_json(r.at("schedule"), c.schedule);
      return 0;
    });
  }
  if (j.contains("follow_up")) {
    with_context("config.follow_up", [&] {
      c.follow_up_k = j.at("follow_up").value("k_per_group", c.follow_up_k);
      c.follow_up_periods = j.at("follow_up").value("periods", c.follow_up_periods);
      return 0;
    });
  }
  with_context("config", [&] {
    c.validate();
    return 0;
  });
  return c;
}

Scenario build_scenario(const PipelineConfig& config, const Population& population) {
  Scenario s;
  s.viewers = population.viewers;
  s.producers = population.producers;
  s.objective = config.objective;
  s.thresholds = config.thresholds;
  s.production = config.production;
  s.content_ttl = config.content_ttl;
  return s;
}

ArtifactSink::ArtifactSink(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

void ArtifactSink::put(const std::string& name, std::string content) {
  if (dir_) write_text_file(*dir_ / name, content);
  files_[name] = std::move(content);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json manifest(const Json& resolved_config, std::uint64_t seed, const ArtifactSink& sink) {
  Json artifacts = Json::object();
  for (const auto& [name, content] : sink.files()) {
    if (name != "manifest.json") artifacts[name] = hex64(fnv(content));
  }
  return {{"config_hash", hex64(fnv(resolved_config.dump()))},
          {"seed", seed},
          {"version", kVersion},
          {"artifacts", artifacts}};
}

PipelineSummary run_pipeline(const PipelineConfig& config, std::uint64_t seed, ArtifactSink& sink) {
  stage("config", [&] {
    config.validate();
    return 0;
  });
  const Json resolved = to_json(config);
  sink.put("config.json", resolved.dump(2) + "\n");
  PipelineSummary summary;

  const Population population = stage("population", [&] {
    Population p = synth_population(config.population, seed);
    sink.put("population.json", population_to_json(p).dump() + "\n");
    return p;
  });
  const Scenario scenario = build_scenario(config, population);

  const experiment::Assignment assignment = stage("assign", [&] {
    auto a = experiment::assign(scenario.producers, config.fractions, seed);
    std::ostringstream csv;
    csv << "producer_id,label\n";
    for (const auto& [p, label] : a.labels) csv << raw(p) << ',' << experiment::to_string(label) << '\n';
    sink.put("assignment.csv", csv.str());
    return a;
  });

  const experiment::BoostExperiment boost = stage("experiment", [&] {
    auto e = experiment::run_boost_experiment(scenario, assignment, config.boost_multiplier,
                                              config.experiment_periods, seed);
    sink.put("experiment_report.json", experiment::to_json(e.report).dump(2) + "\n");
    std::ostringstream csv;
    uplift::write_experiment_csv(csv, e.dataset);
    sink.put("experiment_dataset.csv", csv.str());
    return e;
  });
  summary.experiment = boost.report;

  const uplift::UpliftModel model = stage("train", [&] {
    auto m = uplift::fit_three_tree(boost.dataset, seeded(config.params_t, seed, 1),
                                    seeded(config.params_c, seed, 2), seeded(config.params_d, seed, 3));
    sink.put("model.json", uplift::to_json(m).dump() + "\n");
    const std::pair<const char*, const gbdt::TreeEnsemble*> parts[] = {
        {"treatment", &m.m_treatment}, {"control", &m.m_control}, {"difference", &m.m_difference}};
    for (const auto& [name, ensemble] : parts) {
      std::ostringstream csv;
      gbdt::write_loss_curve_csv(csv, *ensemble);
      sink.put(std::string("loss_curve_") + name + ".csv", csv.str());
    }
    return m;
  });

  summary.evaluation = stage("evaluate", [&] {
    auto g = uplift::evaluate_high_low(model, boost.dataset.rows_with(uplift::SplitTag::kEvaluation),
                                       config.cutoff_percentile);
    Json j = uplift::to_json(g);
    j["train_row_count"] = model.train_row_count;
    sink.put("evaluation.json", j.dump(2) + "\n");
    return g;
  });

  stage("deploy", [&] {
    const auto holdout = assignment.with(experiment::Label::kHoldout);
    const ScoreTable table =
        experiment::deploy(experiment::score_producers(model, scenario.producers), holdout, 1,
                           config.experiment_periods);
    std::ostringstream csv;
    write_score_table_csv(csv, table);
    sink.put("score_table_initial.csv", csv.str());
    return 0;
  });

  if (config.follow_up_k > 0) {
    stage("follow_up", [&] {
      const auto design = uplift::validate_follow_up_design(model, scenario.producers, config.follow_up_k,
                                                            config.cutoff_percentile, seed);
      const auto result = experiment::run_follow_up(scenario, design, config.boost_multiplier,
                                                    config.follow_up_periods, seed);
      Json j = uplift::to_json(design);
      j["result"] = experiment::to_json(result);
      sink.put("follow_up.json", j.dump(2) + "\n");
      return 0;
    });
  }

  const experiment::RetrainResult retrain = stage("retrain", [&] {
    experiment::RetrainConfig rc;
    rc.schedule = config.schedule;
    rc.horizon = config.retrain_horizon;
    rc.score_weight = config.score_weight;
    rc.params_t = seeded(config.params_t, seed, 4);
    rc.params_c = seeded(config.params_c, seed, 5);
    rc.params_d = seeded(config.params_d, seed, 6);
    rc.seed = seed;
    auto r = experiment::retrain_loop(scenario, assignment, model, rc);
    std::ostringstream lift;
    experiment::write_lift_series_csv(lift, r.lift_series);
    sink.put("holdout_lift.csv", lift.str());
    std::ostringstream final_table;
    write_score_table_csv(final_table, r.tables.back());
    sink.put("score_table.csv", final_table.str());
    Json versions = Json::array();
    for (const auto& t : r.tables) {
      versions.push_back({{"model_version", t.model_version},
                          {"trained_at", t.trained_at},
                          {"default_score", t.default_score}});
    }
    Json j{{"tables", versions},
           {"deprecated_at_cycle", r.deprecated_at_cycle ? Json(*r.deprecated_at_cycle) : Json()},
           {"holdout_audit_checks", r.holdout_audit_checks},
           {"holdout_audit_violations", r.holdout_audit_violations},
           {"warnings", r.warnings}};
    sink.put("retrain.json", j.dump(2) + "\n");
    return r;
  });
  summary.deprecated_at_cycle = retrain.deprecated_at_cycle;
  summary.holdout_audit_checks = retrain.holdout_audit_checks;
  summary.holdout_audit_violations = retrain.holdout_audit_violations;

  stage("compare", [&] {
    const auto table = std::make_shared<const ScoreTable>(retrain.tables.back());
    const RankingPolicy deployed = retrain.deprecated_at_cycle
                                       ? RankingPolicy::myopic()
                                       : RankingPolicy::score_augmented(table, config.score_weight);
    const auto myopic = experiment::evaluate_policy(scenario, RankingPolicy::myopic(), *table, seed);
    const auto ranked = experiment::evaluate_policy(scenario, deployed, *table, seed);
    std::vector<double> deltas;
    for (const auto& v : scenario.viewers) {
      const double a = myopic.per_viewer.contains(v.id) ? myopic.per_viewer.at(v.id) : 0.0;
      const double b = ranked.per_viewer.contains(v.id) ? ranked.per_viewer.at(v.id) : 0.0;
      deltas.push_back(b - a);
    }
    const double n = static_cast<double>(deltas.size());
    summary.myopic_value = myopic.discounted_value;
    summary.deployed_value = ranked.discounted_value;
    summary.value_lift = {ranked.discounted_value - myopic.discounted_value,
                          n * std::sqrt(stats::sample_variance(deltas) / n)};
    summary.myopic_goal = myopic.goal.value;
    summary.deployed_goal = ranked.goal.value;
    Json j{{"myopic", {{"discounted_value", myopic.discounted_value},
                       {"goal_metric", myopic.goal.value},
                       {"engagement_events", myopic.goal.events}}},
           {"deployed", {{"policy", retrain.deprecated_at_cycle ? "myopic" : "score_augmented"},
                         {"discounted_value", ranked.discounted_value},
                         {"goal_metric", ranked.goal.value},
                         {"engagement_events", ranked.goal.events}}},
           {"value_lift", {{"estimate", summary.value_lift.value}, {"ci95", summary.value_lift.ci95_halfwidth()}}}};
    sink.put("comparison.json", j.dump(2) + "\n");
    return 0;
  });

  Json report{{"seed", seed},
              {"train_row_count", model.train_row_count},
              {"high_low", {{"ate_high", summary.evaluation.high.ate_estimate},
                            {"ate_low", summary.evaluation.low.ate_estimate},
                            {"difference_significant", summary.evaluation.difference_significant}}},
              {"deprecated", summary.deprecated_at_cycle.has_value()},
              {"myopic_value", summary.myopic_value},
              {"deployed_value", summary.deployed_value},
              {"value_lift", summary.value_lift.value},
              {"value_lift_ci95", summary.value_lift.ci95_halfwidth()}};
  sink.put("report.json", report.dump(2) + "\n");
  sink.put("manifest.json", manifest(resolved, seed, sink).dump(2) + "\n");
  return summary;
}

}  // namespace lrv::pipeline
