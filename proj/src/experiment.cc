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

#include "lrv/experiment.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "lrv/io.h"
#include "lrv/rng.h"

namespace lrv::experiment {

std::string to_string(Label label) {
  switch (label) {
    case Label::kTreatment: return "treatment";
    case Label::kControl: return "control";
    case Label::kEvaluationTreatment: return "evaluation_treatment";
    case Label::kEvaluationControl: return "evaluation_control";
    case Label::kHoldout: return "holdout";
    case Label::kUntouched: return "untouched";
  }
  return "unknown";
}

void Fractions::validate() const {
  const double parts[] = {treatment, control, evaluation_treatment, evaluation_control, holdout};
  double sum = 0.0;
  for (double f : parts) {
    if (!(f >= 0.0 && f <= 1.0)) throw DomainError("assignment fractions must lie in [0, 1]");
    sum += f;
  }
  if (sum > 1.0 + 1e-12) throw DomainError("assignment fractions sum to more than 1");
}

Label Assignment::label(ProducerId producer) const {
  auto it = labels.find(producer);
  return it == labels.end() ? Label::kUntouched : it->second;
}

std::set<ProducerId> Assignment::with(Label l) const {
  std::set<ProducerId> out;
  for (const auto& [p, label] : labels) {
    if (label == l) out.insert(p);
  }
  return out;
}

std::set<ProducerId> Assignment::boosted() const {
  std::set<ProducerId> out = with(Label::kTreatment);
  const auto eval = with(Label::kEvaluationTreatment);
  out.insert(eval.begin(), eval.end());
  return out;
}

std::map<Label, std::size_t> Assignment::group_sizes() const {
  std::map<Label, std::size_t> out;
  for (Label l : {Label::kTreatment, Label::kControl, Label::kEvaluationTreatment,
                  Label::kEvaluationControl, Label::kHoldout, Label::kUntouched}) {
    out[l] = 0;
  }
  for (const auto& [p, label] : labels) ++out[label];
  return out;
}

Assignment assign(const std::vector<Producer>& producers, const Fractions& fractions,
                  std::uint64_t seed) {
  fractions.validate();
  std::vector<ProducerId> ids;
  for (const auto& p : producers) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw DomainError("duplicate producer id in assignment input");
  }
  const std::size_t n = ids.size();
  const double parts[] = {fractions.treatment, fractions.control, fractions.evaluation_treatment,
                          fractions.evaluation_control, fractions.holdout};
  const Label labels[] = {Label::kTreatment, Label::kControl, Label::kEvaluationTreatment,
                          Label::kEvaluationControl, Label::kHoldout};

  std::size_t sizes[5];
  double remainders[5];
  std::size_t assigned = 0;
  double exact_total = 0.0;
  for (int g = 0; g < 5; ++g) {
    const double exact = parts[g] * static_cast<double>(n);
    sizes[g] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainders[g] = exact - static_cast<double>(sizes[g]);
    assigned += sizes[g];
    exact_total += exact;
  }
  const auto total = std::min(n, static_cast<std::size_t>(std::floor(exact_total + 1e-9)));
  std::vector<int> by_remainder{0, 1, 2, 3, 4};
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++sizes[by_remainder[k % 5]];

  Engine engine = make_engine(seed, Stream::kAssignment);
  std::shuffle(ids.begin(), ids.end(), engine);
  Assignment out;
  out.fractions = fractions;
  out.seed = seed;
  std::size_t pos = 0;
  for (int g = 0; g < 5; ++g) {
    for (std::size_t i = 0; i < sizes[g]; ++i) out.labels[ids[pos++]] = labels[g];
  }
  for (; pos < n; ++pos) out.labels[ids[pos]] = Label::kUntouched;
  return out;
}

std::uint64_t feature_snapshot_hash(const std::vector<Producer>& producers) {
  Fnv1a h;
  for (const auto& p : producers) {
    h.value(raw(p.id));
    for (double x : p.features) h.value(x);
  }
  return h.digest();
}

namespace {

Scenario with_horizon(Scenario scenario, int horizon) {
  scenario.objective.horizon = horizon;
  return scenario;
}

// Outcomes per producer from a finished trajectory. Posts count creations
// with created_at in (first, last].
std::map<ProducerId, ProducerOutcome> collect_outcomes(const Scenario& scenario,
                                                       const ScenarioState& state, int first_period,
                                                       int last_period) {
  std::map<ProducerId, ProducerOutcome> out;
  for (const auto& p : scenario.producers) out[p.id];
  for (const ContentItem& item : state.created) {
    if (item.created_at > first_period && item.created_at <= last_period) ++out[item.producer].posts;
  }
  for (const auto& e : state.engagement_log) {
    if (e.period < first_period || e.period >= last_period) continue;
    if (e.kind == EngagementKind::kLike) ++out[e.producer()].likes;
    else ++out[e.producer()].comments;
  }
  return out;
}

Lift make_lift(const std::vector<double>& treated, const std::vector<double>& control) {
  Lift lift;
  lift.treated_mean = stats::mean(treated);
  lift.control_mean = stats::mean(control);
  lift.absolute = stats::mean_difference(treated, control);
  if (lift.control_mean != 0.0) {
    const double mt = lift.treated_mean, mc = lift.control_mean;
    const double vt = stats::sample_variance(treated) / static_cast<double>(treated.size());
    const double vc = stats::sample_variance(control) / static_cast<double>(control.size());
    lift.relative = stats::Estimate{mt / mc - 1.0, std::sqrt(vt / (mc * mc) + mt * mt * vc / (mc * mc * mc * mc))};
  }
  return lift;
}

nlohmann::json to_json(const Lift& l) {
  nlohmann::json j{{"treated_mean", l.treated_mean},
                   {"control_mean", l.control_mean},
                   {"abs", l.absolute.value},
                   {"abs_ci95", l.absolute.ci95_halfwidth()}};
  j["rel"] = l.relative ? nlohmann::json(l.relative->value) : nlohmann::json();
  j["ci95"] = l.relative ? nlohmann::json(l.relative->ci95_halfwidth()) : nlohmann::json();
  return j;
}

}  // namespace

nlohmann::json to_json(const BoostReport& r) {
  nlohmann::json sizes = nlohmann::json::object();
  for (const auto& [label, n] : r.group_sizes) sizes[to_string(label)] = n;
  return {{"lifts", {{"likes", to_json(r.likes)}, {"comments", to_json(r.comments)}, {"posts", to_json(r.posts)}}},
          {"group_sizes", sizes},
          {"multiplier", r.multiplier},
          {"periods", r.periods},
          {"seed", r.seed},
          {"feature_hash", r.feature_hash}};
}

BoostExperiment run_boost_experiment(const Scenario& scenario, const Assignment& assignment,
                                     double boost_multiplier, int periods, std::uint64_t seed) {
  if (periods < 1) throw DomainError("experiment periods must be >= 1");
  const std::set<ProducerId> boost = assignment.boosted();
  if (boost.empty()) throw DomainError("boost set is empty");
  const RankingPolicy policy = RankingPolicy::boosted(boost, boost_multiplier);

  const World world(with_horizon(scenario, periods + 1));
  const std::uint64_t frozen = feature_snapshot_hash(world.scenario().producers);
  std::map<ProducerId, std::vector<double>> features;
  for (const auto& p : world.scenario().producers) features[p.id] = p.features;

  BoostExperiment out;
  out.final_state = initial_state(world, seed);
  run_policy(world, out.final_state, policy, periods);
  if (feature_snapshot_hash(world.scenario().producers) != frozen) {
    throw IntegrityError("producer features changed during the experiment");
  }

  BoostReport& report = out.report;
  report.outcomes = collect_outcomes(world.scenario(), out.final_state, 1, periods + 1);
  report.group_sizes = assignment.group_sizes();
  report.multiplier = boost_multiplier;
  report.periods = periods;
  report.seed = seed;
  report.feature_hash = frozen;

  std::vector<std::string> names;
  const std::size_t dim = features.empty() ? 0 : features.begin()->second.size();
  for (std::size_t f = 0; f < dim; ++f) names.push_back("f_" + std::to_string(f));
  out.dataset = uplift::ExperimentDataset(names);
  std::vector<double> likes_t, likes_c, comments_t, comments_c, posts_t, posts_c;
  for (const auto& [producer, outcome] : report.outcomes) {
    const Label label = assignment.label(producer);
    if (label == Label::kHoldout || label == Label::kUntouched) continue;
    const bool treated = label == Label::kTreatment || label == Label::kEvaluationTreatment;
    const bool evaluation = label == Label::kEvaluationTreatment || label == Label::kEvaluationControl;
    out.dataset.add({producer, features.at(producer), treated,
                     static_cast<double>(outcome.posts) / static_cast<double>(periods),
                     evaluation ? uplift::SplitTag::kEvaluation : uplift::SplitTag::kTrain});
    (treated ? likes_t : likes_c).push_back(outcome.likes);
    (treated ? comments_t : comments_c).push_back(outcome.comments);
    (treated ? posts_t : posts_c).push_back(outcome.posts);
  }
  if (posts_c.empty()) throw DomainError("assignment has no control producers");
  report.likes = make_lift(likes_t, likes_c);
  report.comments = make_lift(comments_t, comments_c);
  report.posts = make_lift(posts_t, posts_c);
  return out;
}

std::map<ProducerId, double> score_producers(const uplift::UpliftModel& model,
                                             const std::vector<Producer>& producers) {
  std::map<ProducerId, double> out;
  for (const auto& p : producers) out[p.id] = uplift::predict_uplift(model, p.features);
  return out;
}

ScoreTable deploy(const std::map<ProducerId, double>& scores, const std::set<ProducerId>& holdout,
                  int model_version, int trained_at) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [p, s] : scores) {
    if (holdout.contains(p)) continue;
    sum += s;
    ++n;
  }
  if (n == 0) throw DomainError("no scores for non-holdout producers");
  ScoreTable table;
  table.default_score = sum / static_cast<double>(n);
  for (const auto& [p, s] : scores) table.scores[p] = holdout.contains(p) ? table.default_score : s;
  for (ProducerId p : holdout) table.scores[p] = table.default_score;
  table.holdout = holdout;
  table.model_version = model_version;
  table.trained_at = trained_at;
  return table;
}

GoalMetric goal_metric(const std::vector<EngagementEvent>& log, const ScoreTable& table) {
  GoalMetric out;
  for (const auto& e : log) {
    bool missing = false;
    out.value += table.lookup(e.producer(), &missing);
    ++out.events;
    if (missing) ++out.missing_scores;
  }
  return out;
}

void RetrainSchedule::validate() const {
  if (cadence_periods < 1) throw DomainError("cadence_periods must be >= 1");
  if (deprecation_patience < 1) throw DomainError("deprecation_patience must be >= 1");
  if (window_cycles < 1) throw DomainError("window_cycles must be >= 1");
  if (!(rotation_fraction > 0.0 && rotation_fraction < 1.0)) {
    throw DomainError("rotation_fraction must lie in (0, 1)");
  }
  if (!(rotation_multiplier > 1.0)) throw DomainError("rotation_multiplier must be > 1");
  if (!(lift_cutoff > 0.0 && lift_cutoff < 100.0)) throw DomainError("lift_cutoff must lie in (0, 100)");
}

namespace {

struct HoldoutCycle {
  std::vector<uplift::ExperimentRow> rows;
};

}  // namespace

RetrainResult retrain_loop(const Scenario& scenario, const Assignment& assignment,
                           const uplift::UpliftModel& initial_model, const RetrainConfig& config) {
  const RetrainSchedule& schedule = config.schedule;
  schedule.validate();
  const std::set<ProducerId> holdout_set = assignment.with(Label::kHoldout);
  if (holdout_set.empty()) throw DomainError("retraining needs a non-empty holdout");
  const std::vector<ProducerId> holdout(holdout_set.begin(), holdout_set.end());

  RetrainResult result;
  if (schedule.cadence_periods > config.horizon) {
    result.warnings.push_back("cadence_periods exceeds the horizon; the model is never retrained");
  }
  const World world(with_horizon(scenario, config.horizon + 1));
  const auto& producers = world.scenario().producers;

  std::map<ProducerId, double> raw_scores = score_producers(initial_model, producers);
  auto live = std::make_shared<ScoreTable>(deploy(raw_scores, holdout_set, 1, 0));
  ScorePublisher publisher;
  publisher.publish(live);
  result.tables.push_back(*live);

  std::vector<HoldoutCycle> history;
  int strikes = 0;
  ScenarioState& state = result.final_state;
  state = initial_state(world, config.seed);

  for (int cycle = 1; state.period <= config.horizon; ++cycle) {
    const int start = state.period;
    const int length = std::min(schedule.cadence_periods, config.horizon - start + 1);
    const auto table = publisher.current();

    std::set<ProducerId> rotated;
    if (!result.deprecated_at_cycle) {
      std::vector<ProducerId> pool = holdout;
      Engine engine = make_engine(config.seed, Stream::kHoldoutRotation, static_cast<std::uint64_t>(cycle));
      std::shuffle(pool.begin(), pool.end(), engine);
      const auto k = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(schedule.rotation_fraction * static_cast<double>(pool.size()))));
      rotated.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(k, pool.size())));
    }

    RankingPolicy policy = RankingPolicy::myopic();
    if (!result.deprecated_at_cycle) {
      policy = RankingPolicy::score_augmented(table, config.score_weight);
      policy.boost_set = rotated;
      policy.multiplier = schedule.rotation_multiplier;
    }
    run_policy(world, state, policy, length, [&](const ScenarioState&, const RankAudit& audit) {
      if (policy.kind != PolicyKind::kScoreAugmented) return;
      for (ProducerId p : holdout) {
        auto it = audit.effective_scores.find(p);
        if (it == audit.effective_scores.end()) continue;
        ++result.holdout_audit_checks;
        if (it->second != table->default_score) ++result.holdout_audit_violations;
      }
    });
    if (result.deprecated_at_cycle) continue;

    // Outcomes of this cycle: posts made in response to its engagement.
    const int end = start + length - 1;
    const auto outcomes = collect_outcomes(world.scenario(), state, start, end + 1);
    HoldoutCycle current;
    std::vector<uplift::ExperimentRow> scored;
    std::vector<double> live_scores;
    for (ProducerId p : holdout) {
      const Producer& producer = world.producer(p);
      current.rows.push_back({p, producer.features, rotated.contains(p),
                              static_cast<double>(outcomes.at(p).posts) / static_cast<double>(length),
                              uplift::SplitTag::kTrain});
      live_scores.push_back(raw_scores.at(p));
    }

    // Lift of the live model: treatment effect of the rotation boost among
    // holdout producers it scores high, minus the same among those it scores
    // low.
    LiftPoint point;
    point.cycle = cycle;
    point.end_period = end;
    point.model_version = table->model_version;
    {
      std::vector<double> sorted = live_scores;
      std::sort(sorted.begin(), sorted.end());
      auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(sorted.size()) * schedule.lift_cutoff / 100.0));
      k = std::clamp<std::size_t>(k, 1, sorted.size());
      const double cut = sorted[k - 1];
      std::vector<double> ht, hc, lt, lc;
      for (std::size_t i = 0; i < current.rows.size(); ++i) {
        const auto& r = current.rows[i];
        auto& cell = live_scores[i] > cut ? (r.treated ? ht : hc) : (r.treated ? lt : lc);
        cell.push_back(r.outcome);
      }
      if (ht.empty() || hc.empty() || lt.empty() || lc.empty()) {
        result.warnings.push_back("cycle " + std::to_string(cycle) +
                                  ": holdout lift undefined (empty high/low cell)");
        point.lift = 0.0;
        point.ci95 = 0.0;
      } else {
        const auto d = stats::difference(stats::mean_difference(ht, hc), stats::mean_difference(lt, lc));
        point.lift = d.value;
        point.ci95 = d.ci95_halfwidth();
      }
    }
    result.lift_series.push_back(point);

    strikes = point.lift <= schedule.deprecation_threshold ? strikes + 1 : 0;
    if (strikes >= schedule.deprecation_patience) {
      result.deprecated_at_cycle = cycle;
      continue;
    }

    history.push_back(std::move(current));
    if (static_cast<int>(history.size()) > schedule.window_cycles) history.erase(history.begin());
    if (state.period > config.horizon) break;

    uplift::ExperimentDataset data(initial_model.m_difference.feature_names);
    for (const auto& h : history) {
      for (const auto& r : h.rows) data.add(r);
    }
    const uplift::UpliftModel model =
        uplift::fit_three_tree(data, config.params_t, config.params_c, config.params_d);
    raw_scores = score_producers(model, producers);
    auto next = std::make_shared<ScoreTable>(deploy(raw_scores, holdout_set, table->model_version + 1, end));
    publisher.publish(next);
    result.tables.push_back(*next);
  }
  return result;
}

void write_lift_series_csv(std::ostream& out, const std::vector<LiftPoint>& series) {
  out << "cycle,lift,ci95\n";
  for (const auto& p : series) {
    out << p.cycle << ',' << format_double(p.lift) << ',' << format_double(p.ci95) << '\n';
  }
}

FollowUpResult run_follow_up(const Scenario& scenario, const uplift::FollowUpDesign& design,
                             double boost_multiplier, int periods, std::uint64_t seed) {
  const std::set<ProducerId> boost = design.boost_set();
  if (boost.empty()) throw DomainError("follow-up design boosts nobody");
  if (periods < 1) throw DomainError("follow-up periods must be >= 1");
  const World world(with_horizon(scenario, periods + 1));
  ScenarioState state = initial_state(world, seed);
  run_policy(world, state, RankingPolicy::boosted(boost, boost_multiplier), periods);
  const auto outcomes = collect_outcomes(world.scenario(), state, 1, periods + 1);

  auto gain = [&](const std::set<ProducerId>& group, const std::set<ProducerId>& boosted) {
    std::vector<double> t, c;
    for (ProducerId p : group) {
      (boosted.contains(p) ? t : c).push_back(static_cast<double>(outcomes.at(p).posts) / periods);
    }
    if (t.empty() || c.empty()) throw DomainError("follow-up group needs boosted and unboosted producers");
    return stats::mean_difference(t, c);
  };
  FollowUpResult r;
  r.gain_high = gain(design.high_group, design.high_boost);
  r.gain_low = gain(design.low_group, design.low_boost);
  r.difference = stats::difference(r.gain_high, r.gain_low);
  r.p_value = r.difference.p_value();
  r.confirmed = r.difference.value > 0.0 && r.p_value < 0.05;
  return r;
}

nlohmann::json to_json(const FollowUpResult& r) {
  auto est = [](const stats::Estimate& e) {
    return nlohmann::json{{"estimate", e.value}, {"ci95", e.ci95_halfwidth()}};
  };
  return {{"gain_high", est(r.gain_high)},
          {"gain_low", est(r.gain_low)},
          {"difference", est(r.difference)},
          {"p_value", r.p_value},
          {"confirmed", r.confirmed}};
}

PolicyRun evaluate_policy(const Scenario& scenario, const RankingPolicy& policy,
                          const ScoreTable& table, std::uint64_t seed) {
  const World world(scenario);
  ScenarioState state = simulate(world, policy, seed);
  PolicyRun run;
  UtilityReport utility = discounted_utility(state.ledger, scenario.objective);
  run.discounted_value = utility.total;
  run.per_viewer = std::move(utility.per_viewer);
  run.goal = goal_metric(state.engagement_log, table);
  run.engagement_log = std::move(state.engagement_log);
  return run;
}

}  // namespace lrv::experiment
