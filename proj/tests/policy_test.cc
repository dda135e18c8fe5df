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

#include <algorithm>
#include <random>

#include "doctest.h"
#include "lrv/policy.h"
#include "test_worlds.h"

namespace lrv {
namespace {

const ProducerId kP1{1};
const ProducerId kP2{2};
const ViewerId kV1{1};
const ViewerId kV2{2};

Viewer viewer_with(std::map<ProducerId, double> affinity) {
  return Viewer{ViewerId{0}, 1, std::move(affinity)};
}

const std::vector<ContentItem> kInventory{{kP1, 1, 0}, {kP2, 1, 0}};

TEST_CASE("myopic ranks by affinity") {
  const auto r = rank(RankingPolicy::myopic(), viewer_with({{kP1, 0.9}, {kP2, 0.5}}), kInventory, 1);
  CHECK(r.front().producer == kP1);
  CHECK(r.back().producer == kP2);
}

TEST_CASE("boost multiplies the affinity of boosted producers") {
  const auto r = rank(RankingPolicy::boosted({kP2}, 2.0), viewer_with({{kP1, 0.9}, {kP2, 0.5}}),
                      kInventory, 1);
  CHECK(r.front().producer == kP2);
  CHECK_THROWS_AS(RankingPolicy::boosted({kP2}, 1.0), DomainError);
}

TEST_CASE("score-augmented adds weighted producer scores") {
  auto table = std::make_shared<ScoreTable>();
  table->scores = {{kP1, 0.0}, {kP2, 0.5}};
  const auto r = rank(RankingPolicy::score_augmented(table, 1.0),
                      viewer_with({{kP1, 0.9}, {kP2, 0.5}}), kInventory, 1);
  CHECK(r.front().producer == kP2);
}

TEST_CASE("missing scores fall back to the default and are counted") {
  auto table = std::make_shared<ScoreTable>();
  table->scores = {{kP1, 0.0}};
  table->default_score = 0.25;
  RankAudit audit;
  rank(RankingPolicy::score_augmented(table, 1.0), viewer_with({{kP1, 0.9}, {kP2, 0.5}}),
       kInventory, 1, &audit);
  CHECK(audit.missing_scores == 1);
  CHECK(audit.effective_scores.at(kP2) == 0.25);
  CHECK(audit.effective_scores.at(kP1) == 0.0);
}

TEST_CASE("ties break by ascending producer then content id") {
  const std::vector<ContentItem> inv{{kP1, 1, 0}, {kP1, 1, 1}, {kP2, 1, 0}};
  const auto r = rank(RankingPolicy::myopic(), viewer_with({{kP1, 0.5}, {kP2, 0.5}}), inv, 1);
  CHECK(r == inv);
}

TEST_CASE("ranking invariances on random inventories") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    Viewer v = viewer_with({});
    std::vector<ContentItem> inv;
    auto table = std::make_shared<ScoreTable>();
    const int producers = 2 + static_cast<int>(rng() % 6);
    for (int p = 0; p < producers; ++p) {
      const ProducerId id{static_cast<std::uint32_t>(p)};
      v.affinity[id] = unit(rng);
      table->scores[id] = unit(rng) - 0.5;
      inv.push_back({id, 1, 0});
    }
    const auto myopic = rank(RankingPolicy::myopic(), v, inv, 1);
    CHECK(rank(RankingPolicy::score_augmented(table, 0.0), v, inv, 1) == myopic);

    Viewer scaled = v;
    const double c = 0.01 + 5.0 * unit(rng);
    for (auto& [id, a] : scaled.affinity) a *= c;
    CHECK(rank(RankingPolicy::myopic(), scaled, inv, 1) == myopic);

    // Uniform scores shift every key by the same constant.
    auto uniform = std::make_shared<ScoreTable>();
    for (const auto& [id, s] : table->scores) uniform->scores[id] = 0.375;
    CHECK(rank(RankingPolicy::score_augmented(uniform, 0.5), v, inv, 1) == myopic);
  }
}

FixedSequence viewer1_sees_p2() {
  return FixedSequence{{{kV1, 1}, {{kP2, 1, 0}}},
                       {{kV2, 1}, {{kP1, 1, 0}}},
                       {{kV1, 2}, {{kP2, 2, 0}}},
                       {{kV2, 2}, {{kP2, 2, 0}}}};
}

// Closed form of the two-period model: period 1 values plus, if anyone saw
// producer 2, one discounted v2 for each of the two followers.
double two_period_total(bool v1_sees_p2, bool v2_sees_p2, double v1, double v2, double beta) {
  const double first = (v1_sees_p2 ? v2 : v1) + (v2_sees_p2 ? v2 : v1);
  const double second = (v1_sees_p2 || v2_sees_p2) ? 2.0 * beta * v2 : 0.0;
  return first + second;
}

TEST_CASE("closed form agrees with simulated trajectories") {
  for (double v1 : {0.6, 0.8, 0.99}) {
    for (double beta : {0.2, 0.5, 0.9}) {
      const double v2 = 0.5;
      const World world(make_two_period_scenario(v1, v2, beta).scenario);
      double best = -1.0;
      for (int mask = 0; mask < 4; ++mask) {
        best = std::max(best, two_period_total(mask & 1, mask & 2, v1, v2, beta));
      }
      CHECK(exhaustive_optimal(world).best_total == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("oracle on (0.8, 0.5, 0.9) shows producer 2 to exactly one viewer") {
  const World world(make_two_period_scenario(0.8, 0.5, 0.9).scenario);
  const auto oracle = exhaustive_optimal(world);
  CHECK(oracle.best_total == doctest::Approx(2.2).epsilon(1e-12));
  CHECK(oracle.sequences_evaluated == 4);
  // (p1, p2) and (p2, p1) tie; the lexicographically smaller one wins.
  CHECK(oracle.best_sequence.at({kV1, 1}) == std::vector<ContentItem>{{kP1, 1, 0}});
  CHECK(oracle.best_sequence.at({kV2, 1}) == std::vector<ContentItem>{{kP2, 1, 0}});
  const auto myopic = simulate(world, RankingPolicy::myopic(), 0);
  CHECK(discounted_utility(myopic.ledger, world.scenario().objective).total ==
        doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("oracle on (0.99, 0.5, 0.9) still deviates because both followers benefit") {
  const World world(make_two_period_scenario(0.99, 0.5, 0.9).scenario);
  const auto oracle = exhaustive_optimal(world);
  CHECK(oracle.best_total == doctest::Approx(0.99 + 0.5 + 0.9).epsilon(1e-12));
  CHECK(first_divergence(oracle.best_sequence, record_sequence(world, RankingPolicy::myopic())) == 1);
}

TEST_CASE("oracle coincides with myopic when deviation cannot pay") {
  // (1 + 2 beta) v2 = 0.95 < 0.99.
  const World world(make_two_period_scenario(0.99, 0.5, 0.45).scenario);
  const auto oracle = exhaustive_optimal(world);
  CHECK(oracle.best_total == doctest::Approx(1.98).epsilon(1e-12));
  CHECK(oracle.best_sequence == record_sequence(world, RankingPolicy::myopic()));
}

TEST_CASE("exact tie keeps the lexicographically smallest (myopic) sequence") {
  // (1 + 2 beta) v2 = v1 with v1 = 0.9, v2 = 0.5, beta = 0.4.
  const World world(make_two_period_scenario(0.9, 0.5, 0.4).scenario);
  const auto oracle = exhaustive_optimal(world);
  const auto myopic_seq = record_sequence(world, RankingPolicy::myopic());
  CHECK(oracle.best_sequence == myopic_seq);
  const double deviation_total = discounted_utility(
      simulate(world, RankingPolicy::fixed(viewer1_sees_p2()), 0).ledger, world.scenario().objective).total;
  CHECK(std::abs(deviation_total - oracle.best_total) < 1e-12);
}

TEST_CASE("theorem condition on the two-period instance") {
  SUBCASE("0.8, 0.5, 0.9") {
    const World world(make_two_period_scenario(0.8, 0.5, 0.9).scenario);
    const auto c = theorem_condition_holds(world, record_sequence(world, RankingPolicy::myopic()),
                                           viewer1_sees_p2(), 1);
    CHECK(c.lhs == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(c.rhs == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(c.holds);
  }
  SUBCASE("0.99, 0.5, 0.9") {
    const World world(make_two_period_scenario(0.99, 0.5, 0.9).scenario);
    const auto c = theorem_condition_holds(world, record_sequence(world, RankingPolicy::myopic()),
                                           viewer1_sees_p2(), 1);
    CHECK(c.lhs == doctest::Approx(0.49).epsilon(1e-12));
    CHECK(c.rhs == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(c.holds);
  }
  SUBCASE("0.99, 0.5, 0.45") {
    const World world(make_two_period_scenario(0.99, 0.5, 0.45).scenario);
    const auto c = theorem_condition_holds(world, record_sequence(world, RankingPolicy::myopic()),
                                           viewer1_sees_p2(), 1);
    CHECK(c.lhs == doctest::Approx(0.49).epsilon(1e-12));
    CHECK(c.rhs == doctest::Approx(0.45).epsilon(1e-12));
    CHECK_FALSE(c.holds);
  }
  SUBCASE("identical sequences") {
    const World world(make_two_period_scenario(0.8, 0.5, 0.9).scenario);
    const auto seq = record_sequence(world, RankingPolicy::myopic());
    const auto c = theorem_condition_holds(world, seq, seq, 1);
    CHECK(c.lhs == 0.0);
    CHECK(c.rhs == 0.0);
    CHECK_FALSE(c.holds);
  }
}

TEST_CASE("theorem condition preconditions") {
  const World world(make_two_period_scenario(0.8, 0.5, 0.9).scenario);
  const auto myopic = record_sequence(world, RankingPolicy::myopic());
  CHECK_THROWS_AS(theorem_condition_holds(world, myopic, viewer1_sees_p2(), 2), DomainError);
  auto later = myopic;
  later[{kV1, 2}] = {};
  CHECK_THROWS_AS(theorem_condition_holds(world, myopic, viewer1_sees_p2(), 0), DomainError);
}

TEST_CASE("oracle refuses large or smooth instances") {
  const World large(testing::random_small_world(1, 8, 8, 3, 6));
  CHECK_THROWS_AS(exhaustive_optimal(large), SizeError);
  Scenario smooth = make_two_period_scenario(0.8, 0.5, 0.9).scenario;
  smooth.production.mode = ProductionMode::kSmooth;
  CHECK_THROWS_AS(exhaustive_optimal(World(smooth)), DomainError);
}

TEST_CASE("oracle dominates myopic and deviations imply the condition") {
  std::mt19937_64 rng(11);
  int deviating = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const World world(testing::random_small_world(rng(), 1 + rng() % 3, 2 + rng() % 2,
                                                  1 + rng() % 2, 2 + rng() % 2));
    const auto oracle = exhaustive_optimal(world);
    const auto myopic_seq = record_sequence(world, RankingPolicy::myopic());
    const double myopic_total = discounted_utility(
        simulate(world, RankingPolicy::myopic(), 0).ledger, world.scenario().objective).total;
    CHECK(oracle.best_total >= myopic_total - 1e-12);
    if (oracle.best_total > myopic_total + 1e-12) {
      ++deviating;
      const int t = *first_divergence(myopic_seq, oracle.best_sequence);
      CHECK(theorem_condition_holds(world, myopic_seq, oracle.best_sequence, t).holds);
    }
  }
  CHECK(deviating > 0);
}

TEST_CASE("compare_policies reports the winner") {
  const World world(make_two_period_scenario(0.8, 0.5, 0.9).scenario);
  const auto cmp = compare_policies(world, RankingPolicy::myopic(),
                                    RankingPolicy::fixed(viewer1_sees_p2()), 0);
  CHECK(cmp.winner == Winner::kB);
  CHECK(cmp.total_b - cmp.total_a == doctest::Approx(0.6));
  CHECK(cmp.per_viewer_delta.at(kV1) == doctest::Approx(-0.3 + 0.45));
  CHECK(cmp.per_viewer_delta.at(kV2) == doctest::Approx(0.45));
  const auto same = compare_policies(world, RankingPolicy::myopic(), RankingPolicy::myopic(), 0);
  CHECK(same.winner == Winner::kTie);
}

}  // namespace
}  // namespace lrv
