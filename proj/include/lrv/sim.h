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

// Seeded ecosystem simulation: producers post in response to the engagement
// they received, viewers consume the top J items of a ranking, and every
// consumption above the engagement threshold is revealed to the producer.

#ifndef LRV_SIM_H_
#define LRV_SIM_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "lrv/core.h"

namespace lrv {

enum class ProductionMode { kThreshold, kSmooth };

// How many posts a producer creates in period t+1 given E engagements
// received in period t.
//
// kThreshold: one post iff the producer is responsive (responsiveness > 0)
//   and E >= threshold_k; otherwise none. No threshold means never.
// kSmooth: base_rate * (1 + responsiveness * smooth_gain * ln(1 + E)) posts
//   in expectation, capped at max_posts and realized by seeded stochastic
//   rounding. This functional form is a modelling choice of this library.
struct ProductionRule {
  ProductionMode mode = ProductionMode::kThreshold;
  std::optional<int> threshold_k = 1;
  double smooth_gain = 1.0;
  int max_posts = 1;
  // From drift_period on (when > 0), responsiveness is multiplied by
  // drift_factor. Used to build worlds whose producers stop responding.
  int drift_period = 0;
  double drift_factor = 1.0;

  void validate() const;
};

struct Scenario {
  std::vector<Viewer> viewers;
  std::vector<Producer> producers;
  DiscountedObjective objective;
  Thresholds thresholds;
  ProductionRule production;
  // Number of periods a post stays eligible; 0 keeps it until consumed.
  int content_ttl = 1;

  std::vector<ValidationIssue> validate() const;
};

// A validated scenario plus id lookups. Construction throws ValidationError.
class World {
 public:
  explicit World(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  const Viewer& viewer(ViewerId id) const;
  const Producer& producer(ProducerId id) const;
  bool has_producer(ProducerId id) const { return producer_index_.contains(id); }
  // Producers the viewer follows, ascending.
  const std::vector<ProducerId>& followed(ViewerId id) const;
  int horizon() const { return scenario_.objective.horizon; }

 private:
  Scenario scenario_;
  std::unordered_map<ViewerId, std::size_t> viewer_index_;
  std::unordered_map<ProducerId, std::size_t> producer_index_;
  std::unordered_map<ViewerId, std::vector<ProducerId>> followed_;
};

struct ScenarioState {
  // Period about to be consumed, starting at 1.
  int period = 1;
  // Eligible, unconsumed content per viewer, ascending.
  std::map<ViewerId, std::vector<ContentItem>> inventory;
  std::vector<EngagementEvent> engagement_log;
  UtilityLedger ledger;
  // Every post ever created, in creation order.
  std::vector<ContentItem> created;
  // Likes received per producer in the last consumed period.
  std::map<ProducerId, int> last_engagements;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_draws = 0;

  bool operator==(const ScenarioState&) const = default;
};

// Ordered content list per viewer. Viewers absent from the map consume
// nothing this period.
using Rankings = std::map<ViewerId, std::vector<ContentItem>>;

// Every producer starts with one post at t = 1.
ScenarioState initial_state(const World& world, std::uint64_t seed);

double effective_responsiveness(const Producer& producer, const ProductionRule& rule,
                                int period);
// Expected number of posts created in period next_period.
double expected_posts(const Producer& producer, int engagements, const ProductionRule& rule,
                      int next_period);

// Consumes period state.period under the given rankings, then creates the
// next period's content. Throws IntegrityError for ineligible or duplicated
// ranking entries and DomainError when the horizon has been consumed.
void step_in_place(const World& world, ScenarioState& state, const Rankings& rankings);
ScenarioState step(const World& world, ScenarioState state, const Rankings& rankings);

bool finished(const World& world, const ScenarioState& state);

// Two viewers, two producers, J = 1, T = 2. Both viewers value producer 1's
// content at v1 and producer 2's at v2; producer 1 never posts again while
// producer 2 posts once in period 2 iff someone engaged in period 1.
struct TwoPeriodInstance {
  Scenario scenario;
  ScenarioState initial;
};
TwoPeriodInstance make_two_period_scenario(double v1, double v2, double beta);

enum class FollowerGraph { kComplete, kRandom };

struct PopulationSpec {
  int n_producers = 100;
  int n_viewers = 200;
  int feature_dim = 5;
  // responsiveness = responsiveness_scale * logistic(theta . x + noise).
  std::vector<double> theta = std::vector<double>(5, 0.0);
  double noise_sigma = 0.0;
  double responsiveness_scale = 1.0;
  FollowerGraph graph = FollowerGraph::kComplete;
  double edge_probability = 1.0;
  double base_rate = 0.3;
  int slots_per_period = 1;
  double affinity_min = 0.05;
  double affinity_max = 1.0;

  void validate() const;
};

struct Population {
  std::vector<Producer> producers;
  std::vector<Viewer> viewers;
};

// Features are i.i.d. standard normal. Ids are dense from 0. Viewers hold an
// affinity only for producers they follow.
Population synth_population(const PopulationSpec& spec, std::uint64_t seed);

// CSV header: period,viewer_id,producer_id,content_id,kind,value
void write_engagement_csv(std::ostream& out, const std::vector<EngagementEvent>& log);

}  // namespace lrv

#endif  // LRV_SIM_H_
