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

// Command-line entry point. Every command writes its artifacts and a
// manifest.json under --out.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "lrv/experiment.h"
#include "lrv/io.h"
#include "lrv/pipeline.h"
#include "lrv/policy.h"

namespace {

using namespace lrv;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = "lrv_out";
};

Json load_config(const Globals& g) {
  if (g.config.empty()) return Json::object();
  return read_json_file(g.config);
}

// A config names a scenario in one of three ways: a two_period block, a full
// scenario document, or a population spec from which one is synthesized.
Scenario load_scenario(const Json& j, std::uint64_t seed) {
  if (j.contains("two_period")) {
    return with_context("config.two_period", [&] {
      const Json& t = j.at("two_period");
      return make_two_period_scenario(t.at("v1").get<double>(), t.at("v2").get<double>(),
                                      t.at("beta").get<double>())
          .scenario;
    });
  }
  if (j.contains("viewers") || j.contains("producers")) return scenario_from_json(j);
  if (j.contains("scenario")) return scenario_from_json(j.at("scenario"));
  const auto config = pipeline::config_from_json(j);
  return pipeline::build_scenario(config, synth_population(config.population, seed));
}

Json sequence_json(const FixedSequence& seq) {
  Json out = Json::array();
  for (const auto& [key, items] : seq) {
    Json ids = Json::array();
    for (const auto& item : items) ids.push_back(to_string(item));
    out.push_back({{"viewer", raw(key.first)}, {"period", key.second}, {"items", ids}});
  }
  return out;
}

void finish(pipeline::ArtifactSink& sink, const Json& config, std::uint64_t seed) {
  sink.put("manifest.json", pipeline::manifest(config, seed, sink).dump(2) + "\n");
}

int cmd_oracle(const Globals& g, double v1, double v2, double beta) {
  Json config = load_config(g);
  if (config.empty()) config = {{"two_period", {{"v1", v1}, {"v2", v2}, {"beta", beta}}}};
  const World world(load_scenario(config, g.seed));
  const FixedSequence myopic = record_sequence(world, RankingPolicy::myopic());
  const double myopic_total =
      discounted_utility(simulate(world, RankingPolicy::myopic(), 0).ledger, world.scenario().objective).total;
  const OracleResult oracle = exhaustive_optimal(world);
  const auto diverge = first_divergence(myopic, oracle.best_sequence);

  Json report{{"myopic_total", myopic_total},
              {"oracle_total", oracle.best_total},
              {"sequences_evaluated", oracle.sequences_evaluated},
              {"policies_coincide", !diverge.has_value()},
              {"myopic_sequence", sequence_json(myopic)},
              {"oracle_sequence", sequence_json(oracle.best_sequence)}};
  std::cout << "myopic total " << format_double(myopic_total) << "\n"
            << "oracle total " << format_double(oracle.best_total) << " (" << oracle.sequences_evaluated
            << " sequences)\n";
  if (!diverge) {
    std::cout << "policies coincide\n";
  } else if (*diverge < world.horizon()) {
    const TheoremCheck c = theorem_condition_holds(world, myopic, oracle.best_sequence, *diverge);
    report["first_divergence"] = *diverge;
    report["condition"] = {{"t", *diverge}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}};
    std::cout << "first divergence at t=" << *diverge << ": lhs=" << format_double(c.lhs)
              << (c.holds ? " < " : " >= ") << "rhs=" << format_double(c.rhs) << "\n";
  } else {
    report["first_divergence"] = *diverge;
  }
  pipeline::ArtifactSink sink(std::filesystem::path(g.out));
  sink.put("oracle.json", report.dump(2) + "\n");
  finish(sink, config, g.seed);
  return kExitOk;
}

RankingPolicy make_policy(const std::string& name, const std::optional<ScoreTable>& table, double weight,
                          double multiplier, const std::set<ProducerId>& boost) {
  if (name == "myopic") return RankingPolicy::myopic();
  if (name == "boosted") return RankingPolicy::boosted(boost, multiplier);
  if (name == "score_augmented") {
    if (!table) throw ConfigError("policy score_augmented needs --scores");
    return RankingPolicy::score_augmented(std::make_shared<const ScoreTable>(*table), weight);
  }
  throw ConfigError("unknown policy '" + name + "' (myopic, boosted, score_augmented)");
}

std::optional<ScoreTable> load_scores(const std::string& path) {
  if (path.empty()) return std::nullopt;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open score table " + path);
  return read_score_table_csv(in);
}

int cmd_simulate(const Globals& g, const std::string& policy_name, const std::string& scores_path,
                 double weight, double multiplier, const std::vector<std::uint32_t>& boost_ids) {
  const Json config = load_config(g);
  const Scenario scenario = load_scenario(config, g.seed);
  std::set<ProducerId> boost;
  for (auto id : boost_ids) boost.insert(ProducerId{id});
  const auto table = load_scores(scores_path);
  const RankingPolicy policy = make_policy(policy_name, table, weight, multiplier, boost);
  const World world(scenario);
  const ScenarioState state = simulate(world, policy, g.seed);
  const UtilityReport utility = discounted_utility(state.ledger, scenario.objective);

  pipeline::ArtifactSink sink(std::filesystem::path(g.out));
  std::ostringstream csv;
  write_engagement_csv(csv, state.engagement_log);
  sink.put("engagement.csv", csv.str());
  Json per_viewer = Json::object();
  for (const auto& [v, value] : utility.per_viewer) per_viewer[std::to_string(raw(v))] = value;
  sink.put("utility.json", Json{{"policy", policy_name},
                                {"total", utility.total},
                                {"per_viewer", per_viewer},
                                {"posts_created", state.created.size()},
                                {"engagement_events", state.engagement_log.size()}}
                                   .dump(2) + "\n");
  finish(sink, config, g.seed);
  std::cout << "discounted value " << format_double(utility.total) << "\n";
  return kExitOk;
}

int cmd_experiment(const Globals& g) {
  const Json raw_config = load_config(g);
  const auto config = pipeline::config_from_json(raw_config);
  const Population population = synth_population(config.population, g.seed);
  const Scenario scenario = pipeline::build_scenario(config, population);
  const auto assignment = experiment::assign(scenario.producers, config.fractions, g.seed);
  const auto e = experiment::run_boost_experiment(scenario, assignment, config.boost_multiplier,
                                                  config.experiment_periods, g.seed);

  pipeline::ArtifactSink sink(std::filesystem::path(g.out));
  sink.put("population.json", population_to_json(population).dump() + "\n");
  std::ostringstream labels;
  labels << "producer_id,label\n";
  for (const auto& [p, label] : assignment.labels) labels << raw(p) << ',' << experiment::to_string(label) << '\n';
  sink.put("assignment.csv", labels.str());
  sink.put("experiment_report.json", experiment::to_json(e.report).dump(2) + "\n");
  std::ostringstream csv;
  uplift::write_experiment_csv(csv, e.dataset);
  sink.put("experiment_dataset.csv", csv.str());
  finish(sink, pipeline::to_json(config), g.seed);
  auto rel = [](const experiment::Lift& l) { return l.relative ? format_double(l.relative->value) : "n/a"; };
  std::cout << "relative lifts: likes " << rel(e.report.likes) << ", comments " << rel(e.report.comments)
            << ", posts " << rel(e.report.posts) << "\n";
  return kExitOk;
}

uplift::ExperimentDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path);
  return uplift::read_experiment_csv(in);
}

int cmd_train(const Globals& g, const std::string& data_path) {
  const Json raw_config = load_config(g);
  const auto config = pipeline::config_from_json(raw_config);
  const auto data = load_dataset(data_path);
  const auto model = uplift::fit_three_tree(data, config.params_t, config.params_c, config.params_d);
  pipeline::ArtifactSink sink(std::filesystem::path(g.out));
  sink.put("model.json", uplift::to_json(model).dump() + "\n");
  const std::pair<const char*, const gbdt::TreeEnsemble*> parts[] = {
      {"treatment", &model.m_treatment}, {"control", &model.m_control}, {"difference", &model.m_difference}};
  Json importance = Json::object();
  for (const auto& [name, ensemble] : parts) {
    std::ostringstream csv;
    gbdt::write_loss_curve_csv(csv, *ensemble);
    sink.put(std::string("loss_curve_") + name + ".csv", csv.str());
    importance[name] = gbdt::feature_importance(*ensemble);
  }
  sink.put("feature_importance.json", importance.dump(2) + "\n");
  finish(sink, pipeline::to_json(config), g.seed);
  std::cout << "trained on " << model.train_row_count << " rows (" << model.treated_train_rows
            << " treated, " << model.control_train_rows << " control)\n";
  return kExitOk;
}

uplift::UpliftModel load_model(const std::string& path) {
  return with_context(path, [&] { return uplift::uplift_model_from_json(read_json_file(path)); });
}

int cmd_evaluate(const Globals& g, const std::string& data_path, const std::string& model_path,
                 double cutoff) {
  const auto data = load_dataset(data_path);
  const auto model = load_model(model_path);
  const auto eval = data.rows_with(uplift::SplitTag::kEvaluation);
  const auto result = uplift::evaluate_high_low(model, eval, cutoff);
  pipeline::ArtifactSink sink(std::filesystem::path(g.out));
  sink.put("evaluation.json", uplift::to_json(result).dump(2) + "\n");
  finish(sink, Json{{"data", data_path}, {"model", model_path}, {"cutoff", cutoff}}, g.seed);
  std::cout << "ate high " << format_double(result.high.ate_estimate) << " +- "
            << format_double(result.high.ci95_halfwidth) << ", ate low " << format_double(result.low.ate_estimate)
            << " +- " << format_double(result.low.ci95_halfwidth) << ", p = " << format_double(result.p_value)
            << (result.difference_significant ? " (significant)" : "") << "\n";
  return kExitOk;
}

std::set<ProducerId> read_holdout(const std::string& path) {
  std::set<ProducerId> holdout;
  if (path.empty()) return holdout;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open assignment " + path);
  std::string line;
  std::getline(in, line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(path + ":" + std::to_string(line_no) + ": expected producer_id,label");
    if (line.substr(comma + 1) == "holdout") {
      holdout.insert(ProducerId{static_cast<std::uint32_t>(std::stoul(line.substr(0, comma)))});
    }
  }
  return holdout;
}

int cmd_deploy(const Globals& g, const std::string& model_path, const std::string& population_path,
               const std::string& assignment_path, int version) {
  const auto model = load_model(model_path);
  const Population population =
      with_context(population_path, [&] { return population_from_json(read_json_file(population_path)); });
  const auto table = experiment::deploy(experiment::score_producers(model, population.producers),
                                        read_holdout(assignment_path), version);
  pipeline::ArtifactSink sink(std::filesystem::path(g.out));
  std::ostringstream csv;
  write_score_table_csv(csv, table);
  sink.put("score_table.csv", csv.str());
  finish(sink, Json{{"model", model_path}, {"population", population_path}, {"assignment", assignment_path}},
         g.seed);
  std::cout << table.scores.size() << " scores, default " << format_double(table.default_score) << "\n";
  return kExitOk;
}

int cmd_pipeline(const Globals& g, int replicas) {
  const auto config = pipeline::config_from_json(load_config(g));
  if (replicas < 1) throw ConfigError("--replicas must be >= 1");
  for (int r = 0; r < replicas; ++r) {
    const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(r);
    std::filesystem::path dir(g.out);
    if (replicas > 1) dir /= "replica_" + std::to_string(r);
    pipeline::ArtifactSink sink(dir);
    const auto s = pipeline::run_pipeline(config, seed, sink);
    std::cout << "seed " << seed << ": high/low " << format_double(s.evaluation.high.ate_estimate) << " vs "
              << format_double(s.evaluation.low.ate_estimate)
              << (s.evaluation.difference_significant ? " (significant)" : "") << "; value "
              << format_double(s.deployed_value) << " vs myopic " << format_double(s.myopic_value) << " (lift "
              << format_double(s.value_lift.value) << " +- " << format_double(s.value_lift.ci95_halfwidth())
              << ")" << (s.deprecated_at_cycle ? "; model deprecated" : "") << "\n";
  }
  return kExitOk;
}

int cmd_compare(const Globals& g, const std::string& scores_path, const std::string& policy_a,
                const std::string& policy_b, double weight) {
  const Json config = load_config(g);
  const Scenario scenario = load_scenario(config, g.seed);
  const auto table = load_scores(scores_path);
  if (!table) throw ConfigError("compare needs --scores");
  Json report = Json::object();
  for (const auto& name : {policy_a, policy_b}) {
    const RankingPolicy policy = make_policy(name, table, weight, 1.0, {});
    const auto run = experiment::evaluate_policy(scenario, policy, *table, g.seed);
    report[name == policy_a ? "a" : "b"] = {{"policy", name},
                                            {"discounted_value", run.discounted_value},
                                            {"goal_metric", run.goal.value},
                                            {"engagement_events", run.goal.events},
                                            {"missing_scores", run.goal.missing_scores}};
    std::cout << name << ": discounted value " << format_double(run.discounted_value) << ", goal metric "
              << format_double(run.goal.value) << "\n";
  }
  pipeline::ArtifactSink sink(std::filesystem::path(g.out));
  sink.put("compare.json", report.dump(2) + "\n");
  finish(sink, config, g.seed);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-run value ranking: simulation, uplift modeling and deployment"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output directory");

  double v1 = 0.8, v2 = 0.5, beta = 0.9;
  auto* oracle = app.add_subcommand("oracle", "Exhaustive optimum vs myopic on a small scenario");
  oracle->add_option("--v1", v1, "Two-period value of producer 1 (without --config)");
  oracle->add_option("--v2", v2, "Two-period value of producer 2 (without --config)");
  oracle->add_option("--beta", beta, "Two-period discount factor (without --config)");

  std::string policy = "myopic", scores, data, model, population, assignment_path;
  std::string policy_a = "myopic", policy_b = "score_augmented";
  double weight = 0.15, multiplier = 2.0, cutoff = 80.0;
  std::vector<std::uint32_t> boost_ids;
  int version = 1, replicas = 1;

  auto* sim = app.add_subcommand("simulate", "Simulate one policy to the horizon");
  sim->add_option("--policy", policy, "myopic, boosted or score_augmented");
  sim->add_option("--scores", scores, "Score table CSV");
  sim->add_option("--weight", weight, "Score weight");
  sim->add_option("--multiplier", multiplier, "Boost multiplier");
  sim->add_option("--boost", boost_ids, "Boosted producer ids");

  auto* exp = app.add_subcommand("experiment", "Run the producer boost experiment");

  auto* train = app.add_subcommand("train", "Fit the three-model uplift estimator");
  train->add_option("--data", data, "Experiment dataset CSV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "High/low validation on evaluation rows");
  evaluate->add_option("--data", data, "Experiment dataset CSV")->required();
  evaluate->add_option("--model", model, "model.json")->required();
  evaluate->add_option("--cutoff", cutoff, "Percentile cutoff in (0, 100)");

  auto* deploy = app.add_subcommand("deploy", "Score producers and publish a score table");
  deploy->add_option("--model", model, "model.json")->required();
  deploy->add_option("--population", population, "population.json")->required();
  deploy->add_option("--assignment", assignment_path, "assignment.csv (holdout labels)");
  deploy->add_option("--version", version, "Model version");

  auto* pipe = app.add_subcommand("pipeline", "Run every stage end to end");
  pipe->add_option("--replicas", replicas, "Seeds seed .. seed+replicas-1, one directory each");

  auto* compare = app.add_subcommand("compare", "Compare two policies on value and goal metric");
  compare->add_option("--scores", scores, "Score table CSV")->required();
  compare->add_option("--a", policy_a, "First policy");
  compare->add_option("--b", policy_b, "Second policy");
  compare->add_option("--weight", weight, "Score weight");

  for (auto* sub : {oracle, sim, exp, train, evaluate, deploy, pipe, compare}) {
    sub->add_option("--config", g.config, "JSON config file");
    sub->add_option("--seed", g.seed, "Random seed");
    sub->add_option("--out", g.out, "Output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*oracle) return cmd_oracle(g, v1, v2, beta);
    if (*sim) return cmd_simulate(g, policy, scores, weight, multiplier, boost_ids);
    if (*exp) return cmd_experiment(g);
    if (*train) return cmd_train(g, data);
    if (*evaluate) return cmd_evaluate(g, data, model, cutoff);
    if (*deploy) return cmd_deploy(g, model, population, assignment_path, version);
    if (*pipe) return cmd_pipeline(g, replicas);
    if (*compare) return cmd_compare(g, scores, policy_a, policy_b, weight);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    for (const auto& issue : e.issues()) std::cerr << "  " << issue.entity << ": " << issue.message << "\n";
    return kExitConfig;
  } catch (const pipeline::StageError& e) {
    std::cerr << "stage " << e.what() << "\n";
    return e.stage() == "config" ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
