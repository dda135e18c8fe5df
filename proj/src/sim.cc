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

#include "lrv/sim.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <string>

#include "lrv/io.h"
#include "lrv/rng.h"

namespace lrv {

void ProductionRule::validate() const {
  if (max_posts < 1) throw DomainError("max_posts must be >= 1");
  if (!(smooth_gain >= 0.0)) throw DomainError("smooth_gain must be >= 0");
  if (threshold_k && *threshold_k < 0) throw DomainError("threshold_k must be >= 0");
  if (drift_period < 0) throw DomainError("drift_period must be >= 0");
  if (!(drift_factor >= 0.0 && drift_factor <= 1.0)) {
    throw DomainError("drift_factor must lie in [0, 1]");
  }
}

std::vector<ValidationIssue> Scenario::validate() const {
  auto issues = validate_scenario(viewers, producers, objective);
  if (content_ttl < 0) issues.push_back({"scenario", "content_ttl must be >= 0"});
  if (!(thresholds.engage >= 0.0 && thresholds.like >= 0.0 &&
        thresholds.comment >= thresholds.like)) {
    issues.push_back({"thresholds", "need engage >= 0, like >= 0 and comment >= like"});
  }
  try {
    production.validate();
  } catch (const DomainError& e) {
    issues.push_back({"production", e.what()});
  }
  return issues;
}

World::World(Scenario scenario) : scenario_(std::move(scenario)) {
  if (auto issues = scenario_.validate(); !issues.empty()) {
    throw ValidationError(std::move(issues));
  }
  for (std::size_t i = 0; i < scenario_.viewers.size(); ++i) {
    viewer_index_[scenario_.viewers[i].id] = i;
    followed_[scenario_.viewers[i].id];
  }
  for (std::size_t i = 0; i < scenario_.producers.size(); ++i) {
    const Producer& p = scenario_.producers[i];
    producer_index_[p.id] = i;
    for (ViewerId v : p.followers) followed_[v].push_back(p.id);
  }
  for (auto& [viewer, producers] : followed_) std::sort(producers.begin(), producers.end());
}

const Viewer& World::viewer(ViewerId id) const {
  auto it = viewer_index_.find(id);
  if (it == viewer_index_.end()) {
    throw IntegrityError("unknown viewer " + std::to_string(raw(id)));
  }
  return scenario_.viewers[it->second];
}

const Producer& World::producer(ProducerId id) const {
  auto it = producer_index_.find(id);
  if (it == producer_index_.end()) {
    throw IntegrityError("unknown producer " + std::to_string(raw(id)));
  }
  return scenario_.producers[it->second];
}

const std::vector<ProducerId>& World::followed(ViewerId id) const {
  auto it = followed_.find(id);
  if (it == followed_.end()) {
    throw IntegrityError("unknown viewer " + std::to_string(raw(id)));
  }
  return it->second;
}

namespace {

void publish(const World& world, ScenarioState& state, const ContentItem& item) {
  state.created.push_back(item);
  for (ViewerId follower : world.producer(item.producer).followers) {
    state.inventory[follower].push_back(item);
  }
}

}  // namespace

ScenarioState initial_state(const World& world, std::uint64_t seed) {
  ScenarioState state;
  state.rng_seed = seed;
  for (const Viewer& v : world.scenario().viewers) state.inventory[v.id];
  for (const Producer& p : world.scenario().producers) {
    publish(world, state, ContentItem{p.id, 1, 0});
  }
  for (auto& [viewer, items] : state.inventory) std::sort(items.begin(), items.end());
  return state;
}

double effective_responsiveness(const Producer& producer, const ProductionRule& rule,
                                int period) {
  if (rule.drift_period > 0 && period >= rule.drift_period) {
    return producer.responsiveness * rule.drift_factor;
  }
  return producer.responsiveness;
}

double expected_posts(const Producer& producer, int engagements, const ProductionRule& rule,
                      int next_period) {
  const double r = effective_responsiveness(producer, rule, next_period);
  if (rule.mode == ProductionMode::kThreshold) {
    return (r > 0.0 && rule.threshold_k && engagements >= *rule.threshold_k) ? 1.0 : 0.0;
  }
  const double expected =
      producer.base_rate * (1.0 + r * rule.smooth_gain * std::log1p(static_cast<double>(engagements)));
  return std::min(expected, static_cast<double>(rule.max_posts));
}

namespace {

int realized_posts(const Producer& producer, int engagements, const ProductionRule& rule,
                   int next_period, ScenarioState& state) {
  const double expected = expected_posts(producer, engagements, rule, next_period);
  if (rule.mode == ProductionMode::kThreshold) return static_cast<int>(expected);
  const double whole = std::floor(expected);
  const double u = keyed_uniform(state.rng_seed, {raw(producer.id), static_cast<std::uint64_t>(next_period)});
  ++state.rng_draws;
  const int posts = static_cast<int>(whole) + (u < expected - whole ? 1 : 0);
  return std::min(posts, rule.max_posts);
}

}  // namespace

void step_in_place(const World& world, ScenarioState& state, const Rankings& rankings) {
  const Scenario& scenario = world.scenario();
  const int t = state.period;
  if (t > world.horizon()) {
    throw DomainError("cannot step past the horizon (period " + std::to_string(t) + " > " +
                      std::to_string(world.horizon()) + ")");
  }

  // Validate every ranking before mutating anything.
  for (const auto& [viewer_id, ranking] : rankings) {
    world.viewer(viewer_id);
    const auto& inventory = state.inventory[viewer_id];
    std::set<ContentItem> seen;
    for (const ContentItem& item : ranking) {
      if (!std::binary_search(inventory.begin(), inventory.end(), item)) {
        throw IntegrityError("ranking for viewer " + std::to_string(raw(viewer_id)) +
                             " contains ineligible content " + to_string(item));
      }
      if (!seen.insert(item).second) {
        throw IntegrityError("ranking for viewer " + std::to_string(raw(viewer_id)) +
                             " lists content " + to_string(item) + " twice");
      }
    }
  }

  std::map<ProducerId, int> likes;
  for (const auto& [viewer_id, ranking] : rankings) {
    const Viewer& viewer = world.viewer(viewer_id);
    auto& inventory = state.inventory[viewer_id];
    const std::size_t take =
        std::min(ranking.size(), static_cast<std::size_t>(viewer.slots_per_period));
    for (std::size_t k = 0; k < take; ++k) {
      const ContentItem& item = ranking[k];
      const double value = viewer.affinity_for(item.producer);
      state.ledger.record(viewer_id, t, value);
      if (scenario.thresholds.engages(value)) {
        state.engagement_log.push_back({viewer_id, item, t, EngagementKind::kLike, value});
        ++likes[item.producer];
        if (scenario.thresholds.comments(value)) {
          state.engagement_log.push_back({viewer_id, item, t, EngagementKind::kComment, value});
        }
      }
      inventory.erase(std::lower_bound(inventory.begin(), inventory.end(), item));
    }
  }
  state.last_engagements = likes;

  const int next = t + 1;
  state.period = next;
  if (next > world.horizon()) return;

  if (scenario.content_ttl > 0) {
    for (auto& [viewer_id, items] : state.inventory) {
      std::erase_if(items, [&](const ContentItem& item) {
        return item.created_at + scenario.content_ttl <= next;
      });
    }
  }
  bool any_post = false;
  for (const Producer& producer : scenario.producers) {
    auto it = likes.find(producer.id);
    const int engagements = it == likes.end() ? 0 : it->second;
    const int posts = realized_posts(producer, engagements, scenario.production, next, state);
    for (int index = 0; index < posts; ++index) {
      publish(world, state, ContentItem{producer.id, next, index});
      any_post = true;
    }
  }
  if (any_post) {
    for (auto& [viewer_id, items] : state.inventory) std::sort(items.begin(), items.end());
  }
}

ScenarioState step(const World& world, ScenarioState state, const Rankings& rankings) {
  step_in_place(world, state, rankings);
  return state;
}

bool finished(const World& world, const ScenarioState& state) {
  return state.period > world.horizon();
}

TwoPeriodInstance make_two_period_scenario(double v1, double v2, double beta) {
  if (!(v2 > 0.0 && v2 < v1 && v1 <= 1.0)) {
    throw DomainError("two-period scenario needs 0 < v2 < v1 <= 1");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw DomainError("two-period scenario needs 0 < beta < 1");
  }
  const ProducerId p1{1};
  const ProducerId p2{2};
  Scenario s;
  for (std::uint32_t id : {1u, 2u}) {
    s.viewers.push_back(Viewer{ViewerId{id}, 1, {{p1, v1}, {p2, v2}}});
  }
  const std::vector<ViewerId> everyone{ViewerId{1}, ViewerId{2}};
  s.producers.push_back(Producer{p1, {}, 0.0, 0.0, everyone});
  s.producers.push_back(Producer{p2, {}, 1.0, 0.0, everyone});
  s.objective = DiscountedObjective{beta, 2, DiscountConvention::kFromZero};
  s.production = ProductionRule{ProductionMode::kThreshold, 1, 0.0, 1};
  s.content_ttl = 1;
  TwoPeriodInstance instance{s, {}};
  instance.initial = initial_state(World(s), 0);
  return instance;
}

void PopulationSpec::validate() const {
  if (n_producers < 1 || n_viewers < 1) throw DomainError("population sizes must be >= 1");
  if (feature_dim < 1) throw DomainError("feature_dim must be >= 1");
  if (theta.size() != static_cast<std::size_t>(feature_dim)) {
    throw DomainError("theta has length " + std::to_string(theta.size()) +
                      " but feature_dim is " + std::to_string(feature_dim));
  }
  if (!(noise_sigma >= 0.0)) throw DomainError("noise_sigma must be >= 0");
  if (!(responsiveness_scale >= 0.0 && responsiveness_scale <= 1.0)) {
    throw DomainError("responsiveness_scale must lie in [0, 1]");
  }
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) {
    throw DomainError("edge_probability must lie in [0, 1]");
  }
  if (!(base_rate >= 0.0)) throw DomainError("base_rate must be >= 0");
  if (slots_per_period < 1) throw DomainError("slots_per_period must be >= 1");
  if (!(affinity_min >= 0.0 && affinity_min <= affinity_max && affinity_max <= 1.0)) {
    throw DomainError("need 0 <= affinity_min <= affinity_max <= 1");
  }
}

Population synth_population(const PopulationSpec& spec, std::uint64_t seed) {
  spec.validate();
  Engine engine = make_engine(seed, Stream::kPopulation);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Population pop;
  pop.producers.resize(spec.n_producers);
  for (int p = 0; p < spec.n_producers; ++p) {
    Producer& producer = pop.producers[p];
    producer.id = ProducerId{static_cast<std::uint32_t>(p)};
    producer.features.resize(spec.feature_dim);
    for (double& f : producer.features) f = normal(engine);
    producer.base_rate = spec.base_rate;
  }
  for (Producer& producer : pop.producers) {
    double z = 0.0;
    for (int k = 0; k < spec.feature_dim; ++k) z += spec.theta[k] * producer.features[k];
    if (spec.noise_sigma > 0.0) z += spec.noise_sigma * normal(engine);
    producer.responsiveness = spec.responsiveness_scale / (1.0 + std::exp(-z));
  }

  pop.viewers.resize(spec.n_viewers);
  for (int v = 0; v < spec.n_viewers; ++v) {
    Viewer& viewer = pop.viewers[v];
    viewer.id = ViewerId{static_cast<std::uint32_t>(v)};
    viewer.slots_per_period = spec.slots_per_period;
    for (Producer& producer : pop.producers) {
      const bool follows = spec.graph == FollowerGraph::kComplete ||
                           unit(engine) < spec.edge_probability;
      if (!follows) continue;
      producer.followers.push_back(viewer.id);
      viewer.affinity[producer.id] =
          spec.affinity_min + (spec.affinity_max - spec.affinity_min) * unit(engine);
    }
  }
  return pop;
}

void write_engagement_csv(std::ostream& out, const std::vector<EngagementEvent>& log) {
  out << "period,viewer_id,producer_id,content_id,kind,value\n";
  for (const auto& e : log) {
    out << e.period << ',' << raw(e.viewer) << ',' << raw(e.producer()) << ','
        << to_string(e.content) << ',' << to_string(e.kind) << ',' << format_double(e.value)
        << '\n';
  }
}

}  // namespace lrv
