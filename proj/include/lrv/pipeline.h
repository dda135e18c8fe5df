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

// End-to-end run: population, boost experiment, three-model fit, high/low
// validation, deployment, retraining on the holdout, and a final comparison
// of the deployed ranking against the myopic one. Every stage writes its
// artifacts under a fixed file name.

#ifndef LRV_PIPELINE_H_
#define LRV_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "lrv/experiment.h"
#include "lrv/io.h"

namespace lrv::pipeline {

inline constexpr const char* kVersion = "lrv 0.1.0";

struct PipelineConfig {
  PopulationSpec population;
  DiscountedObjective objective;
  Thresholds thresholds;
  ProductionRule production;
  int content_ttl = 1;
  experiment::Fractions fractions;
  double boost_multiplier = 2.0;
  int experiment_periods = 14;
  gbdt::TrainParams params_t;
  gbdt::TrainParams params_c;
  gbdt::TrainParams params_d;
  double cutoff_percentile = 80.0;
  double score_weight = 0.15;
  experiment::RetrainSchedule schedule;
  int retrain_horizon = 28;
  int follow_up_k = 0;  // 0 skips the follow-up experiment
  int follow_up_periods = 14;

  void validate() const;
};

// The responsive synthetic world used by default.
PipelineConfig default_config();

Json to_json(const PipelineConfig& config);
// Fields absent from j keep the defaults. Throws ConfigError with the
// offending field path.
PipelineConfig config_from_json(const Json& j);

Scenario build_scenario(const PipelineConfig& config, const Population& population);

// A failure inside one stage. Artifacts of earlier stages stay on disk.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Artifacts by file name, plus the directory they are mirrored to.
class ArtifactSink {
 public:
  explicit ArtifactSink(std::optional<std::filesystem::path> dir = std::nullopt);
  void put(const std::string& name, std::string content);
  const std::map<std::string, std::string>& files() const { return files_; }

 private:
  std::optional<std::filesystem::path> dir_;
  std::map<std::string, std::string> files_;
};

// {config_hash, seed, version, artifacts: {name: fnv1a hex}}
Json manifest(const Json& resolved_config, std::uint64_t seed, const ArtifactSink& sink);
std::string hex64(std::uint64_t v);

struct PipelineSummary {
  uplift::GroupComparison evaluation;
  experiment::BoostReport experiment;
  std::optional<int> deprecated_at_cycle;
  std::int64_t holdout_audit_checks = 0;
  std::int64_t holdout_audit_violations = 0;
  double myopic_value = 0.0;
  double deployed_value = 0.0;
  stats::Estimate value_lift;  // deployed - myopic, per-viewer paired interval
  double myopic_goal = 0.0;
  double deployed_goal = 0.0;
};

PipelineSummary run_pipeline(const PipelineConfig& config, std::uint64_t seed, ArtifactSink& sink);

}  // namespace lrv::pipeline

#endif  // LRV_PIPELINE_H_
