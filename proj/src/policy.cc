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

#include "lrv/policy.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace lrv {

RankingPolicy RankingPolicy::myopic() { return RankingPolicy{}; }

RankingPolicy RankingPolicy::boosted(std::set<ProducerId> boost_set, double multiplier) {
  RankingPolicy p;
  p.kind = PolicyKind::kBoosted;
  p.boost_set = std::move(boost_set);
  p.multiplier = multiplier;
  p.validate();
  return p;
}

RankingPolicy RankingPolicy::score_augmented(std::shared_ptr<const ScoreTable> scores,
                                             double weight) {
  RankingPolicy p;
  p.kind = PolicyKind::kScoreAugmented;
  p.scores = std::move(scores);
  p.weight = weight;
  p.validate();
  return p;
}

RankingPolicy RankingPolicy::fixed(FixedSequence sequence) {
  RankingPolicy p;
  p.kind = PolicyKind::kFixedSequence;
  p.sequence = std::make_shared<const FixedSequence>(std::move(sequence));
  return p;
}

void RankingPolicy::validate() const {
  switch (kind) {
    case PolicyKind::kMyopic:
      break;
    case PolicyKind::kBoosted:
      if (!(multiplier > 1.0)) throw DomainError("boost multiplier must be > 1");
      break;
    case PolicyKind::kScoreAugmented:
      if (!scores) throw DomainError("score-augmented policy needs a score table");
      if (!(weight >= 0.0)) throw DomainError("score weight must be >= 0");
      if (!boost_set.empty() && !(multiplier > 1.0)) {
        throw DomainError("boost multiplier must be > 1");
      }
      break;
    case PolicyKind::kFixedSequence:
      if (!sequence) throw DomainError("fixed-sequence policy needs a sequence");
      break;
  }
}

std::vector<ContentItem> rank(const RankingPolicy& policy, const Viewer& viewer,
                              const std::vector<ContentItem>& inventory, int period,
                              RankAudit* audit) {
  if (policy.kind == PolicyKind::kFixedSequence) {
    auto it = policy.sequence->find({viewer.id, period});
    if (it == policy.sequence->end()) {
      throw IntegrityError("fixed sequence has no ranking for viewer " +
                           std::to_string(raw(viewer.id)) + " in period " +
                           std::to_string(period));
    }
    return it->second;
  }

  const bool boosting = policy.kind != PolicyKind::kMyopic && !policy.boost_set.empty();
  const bool scoring = policy.kind == PolicyKind::kScoreAugmented;

  std::vector<std::pair<double, ContentItem>> keyed;
  keyed.reserve(inventory.size());
  for (const ContentItem& item : inventory) {
    double key = viewer.affinity_for(item.producer);
    if (boosting && policy.boost_set.contains(item.producer)) key *= policy.multiplier;
    if (scoring) {
      bool missing = false;
      const double score = policy.scores->lookup(item.producer, &missing);
      if (audit) {
        audit->effective_scores[item.producer] = score;
        if (missing) ++audit->missing_scores;
      }
      key += policy.weight * score;
    }
    keyed.emplace_back(key, item);
  }
  // Inventory is ascending, so a stable sort on the key alone breaks ties by
  // ascending (producer, content).
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<ContentItem> ranking;
  ranking.reserve(keyed.size());
  for (auto& [key, item] : keyed) ranking.push_back(item);
  return ranking;
}

Rankings rank_all(const RankingPolicy& policy, const World& world, const ScenarioState& state,
                  RankAudit* audit) {
  Rankings rankings;
  for (const auto& [viewer_id, inventory] : state.inventory) {
    rankings[viewer_id] = rank(policy, world.viewer(viewer_id), inventory, state.period, audit);
  }
  return rankings;
}

void run_policy(const World& world, ScenarioState& state, const RankingPolicy& policy,
                int periods, const StepObserver& observer) {
  for (int i = 0; i < periods && !finished(world, state); ++i) {
    RankAudit audit;
    Rankings rankings = rank_all(policy, world, state, &audit);
    step_in_place(world, state, rankings);
    if (observer) observer(state, audit);
  }
}

ScenarioState simulate(const World& world, const RankingPolicy& policy, std::uint64_t seed) {
  ScenarioState state = initial_state(world, seed);
  run_policy(world, state, policy, world.horizon());
  return state;
}

FixedSequence record_sequence(const World& world, const RankingPolicy& policy,
                              std::uint64_t seed) {
  FixedSequence sequence;
  ScenarioState state = initial_state(world, seed);
  while (!finished(world, state)) {
    Rankings rankings = rank_all(policy, world, state);
    for (auto& [viewer_id, ranking] : rankings) {
      const std::size_t take = std::min<std::size_t>(
          ranking.size(), static_cast<std::size_t>(world.viewer(viewer_id).slots_per_period));
      std::vector<ContentItem> consumed(ranking.begin(), ranking.begin() + take);
      std::sort(consumed.begin(), consumed.end());
      sequence[{viewer_id, state.period}] = std::move(consumed);
    }
    step_in_place(world, state, rankings);
  }
  return sequence;
}

std::optional<int> first_divergence(const FixedSequence& a, const FixedSequence& b) {
  std::optional<int> first;
  auto note = [&first](int period) {
    if (!first || period < *first) first = period;
  };
  for (const auto& [key, items] : a) {
    auto it = b.find(key);
    if (it == b.end() || it->second != items) note(key.second);
  }
  for (const auto& [key, items] : b) {
    if (!a.contains(key)) note(key.second);
  }
  return first;
}

PolicyComparison compare_policies(const World& world, const RankingPolicy& a,
                                  const RankingPolicy& b, std::uint64_t seed) {
  const auto& objective = world.scenario().objective;
  const UtilityReport ua = discounted_utility(simulate(world, a, seed).ledger, objective);
  const UtilityReport ub = discounted_utility(simulate(world, b, seed).ledger, objective);
  PolicyComparison out;
  out.total_a = ua.total;
  out.total_b = ub.total;
  for (const Viewer& v : world.scenario().viewers) {
    auto value = [&v](const UtilityReport& r) {
      auto it = r.per_viewer.find(v.id);
      return it == r.per_viewer.end() ? 0.0 : it->second;
    };
    out.per_viewer_delta[v.id] = value(ub) - value(ua);
  }
  const double tolerance = 1e-12 * std::max({1.0, std::abs(ua.total), std::abs(ub.total)});
  if (std::abs(ub.total - ua.total) <= tolerance) {
    out.winner = Winner::kTie;
  } else {
    out.winner = ub.total > ua.total ? Winner::kB : Winner::kA;
  }
  return out;
}

namespace {

double binomial(int n, int k) {
  if (k >= n) return 1.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// All k-subsets of items (ascending input), in lexicographic order.
std::vector<std::vector<ContentItem>> combinations(const std::vector<ContentItem>& items, int k) {
  std::vector<std::vector<ContentItem>> out;
  const int n = static_cast<int>(items.size());
  k = std::min(k, n);
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    std::vector<ContentItem> pick;
    pick.reserve(k);
    for (int i : idx) pick.push_back(items[i]);
    out.push_back(std::move(pick));
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

struct Enumerator {
  const World& world;
  const std::function<void(const FixedSequence&, const ScenarioState&)>& visit;
  std::vector<ViewerId> viewers;
  FixedSequence sequence;

  void period(const ScenarioState& state) {
    if (finished(world, state)) {
      visit(sequence, state);
      return;
    }
    Rankings rankings;
    assign(state, 0, rankings);
  }

  void assign(const ScenarioState& state, std::size_t viewer_pos, Rankings& rankings) {
    if (viewer_pos == viewers.size()) {
      period(step(world, state, rankings));
      return;
    }
    const ViewerId viewer = viewers[viewer_pos];
    auto inv = state.inventory.find(viewer);
    static const std::vector<ContentItem> kEmpty;
    const auto& items = inv == state.inventory.end() ? kEmpty : inv->second;
    for (auto& pick : combinations(items, world.viewer(viewer).slots_per_period)) {
      sequence[{viewer, state.period}] = pick;
      rankings[viewer] = std::move(pick);
      assign(state, viewer_pos + 1, rankings);
    }
    sequence.erase({viewer, state.period});
    rankings.erase(viewer);
  }
};

}  // namespace

double sequence_count_bound(const World& world) {
  const Scenario& s = world.scenario();
  const int horizon = s.objective.horizon;
  const int window = s.content_ttl == 0 ? horizon : std::min(s.content_ttl, horizon);
  double log_bound = 0.0;
  for (const Viewer& v : s.viewers) {
    const int followed = static_cast<int>(world.followed(v.id).size());
    const int max_inventory = followed * window * std::max(1, s.production.max_posts);
    log_bound += horizon * std::log(binomial(max_inventory, v.slots_per_period));
  }
  return std::exp(log_bound);
}

void for_each_sequence(const World& world,
                       const std::function<void(const FixedSequence&, const ScenarioState&)>& visit) {
  if (world.scenario().production.mode != ProductionMode::kThreshold) {
    throw DomainError("exhaustive enumeration requires threshold production mode");
  }
  const double bound = sequence_count_bound(world);
  if (bound > kMaxOracleSequences) {
    throw SizeError("instance too large for exhaustive search: up to " + std::to_string(bound) +
                        " sequences (limit " + std::to_string(kMaxOracleSequences) + ")",
                    bound);
  }
  Enumerator e{world, visit, {}, {}};
  for (const Viewer& v : world.scenario().viewers) e.viewers.push_back(v.id);
  std::sort(e.viewers.begin(), e.viewers.end());
  e.period(initial_state(world, 0));
}

OracleResult exhaustive_optimal(const World& world) {
  OracleResult result;
  bool have = false;
  const auto& objective = world.scenario().objective;
  for_each_sequence(world, [&](const FixedSequence& sequence, const ScenarioState& state) {
    ++result.sequences_evaluated;
    const double total = discounted_utility(state.ledger, objective).total;
    if (!have || total > result.best_total + 1e-12) {
      result.best_total = total;
      result.best_sequence = sequence;
      have = true;
    }
  });
  return result;
}

TheoremCheck theorem_condition_holds(const World& world, const FixedSequence& r_prime,
                                     const FixedSequence& r_dblprime, int t) {
  const int horizon = world.horizon();
  if (t < 1 || t >= horizon) {
    throw DomainError("deviation period must satisfy 1 <= t < T");
  }
  if (auto d = first_divergence(r_prime, r_dblprime); d && *d < t) {
    throw DomainError("sequences already differ in period " + std::to_string(*d) +
                      ", before the deviation period " + std::to_string(t));
  }
  const ScenarioState a = simulate(world, RankingPolicy::fixed(r_prime), 0);
  const ScenarioState b = simulate(world, RankingPolicy::fixed(r_dblprime), 0);
  const double beta = world.scenario().objective.beta;

  TheoremCheck check;
  check.lhs = a.ledger.period_total(t) - b.ledger.period_total(t);
  for (int k = t + 1; k <= horizon; ++k) {
    check.rhs += std::pow(beta, k - t) * (b.ledger.period_total(k) - a.ledger.period_total(k));
  }
  check.holds = check.lhs < check.rhs;
  return check;
}

}  // namespace lrv
