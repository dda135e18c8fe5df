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

// Ranking policies, trajectory simulation, the brute-force long-run optimum
// for tiny instances, and the check of the one-period deviation condition.

#ifndef LRV_POLICY_H_
#define LRV_POLICY_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "lrv/core.h"
#include "lrv/score_table.h"
#include "lrv/sim.h"

namespace lrv {

// Consumed set per (viewer, period), ascending content order.
using FixedSequence = std::map<std::pair<ViewerId, int>, std::vector<ContentItem>>;

enum class PolicyKind { kMyopic, kBoosted, kScoreAugmented, kFixedSequence };

// Ranking key of an item from producer p:
//   affinity * (multiplier if p in boost_set else 1) + weight * score(p)
// sorted descending, ties by ascending (producer, content). kMyopic uses
// neither term; kScoreAugmented may carry a boost set as well, which is how
// a boost sub-experiment runs on top of a deployed score.
struct RankingPolicy {
  PolicyKind kind = PolicyKind::kMyopic;
  std::set<ProducerId> boost_set;
  double multiplier = 1.0;
  std::shared_ptr<const ScoreTable> scores;
  double weight = 0.0;
  std::shared_ptr<const FixedSequence> sequence;

  static RankingPolicy myopic();
  static RankingPolicy boosted(std::set<ProducerId> boost_set, double multiplier);
  static RankingPolicy score_augmented(std::shared_ptr<const ScoreTable> scores, double weight);
  static RankingPolicy fixed(FixedSequence sequence);

  void validate() const;
};

// Side channel of rank(): which score each producer was ranked with and how
// often a producer had to fall back to the default score.
struct RankAudit {
  std::map<ProducerId, double> effective_scores;
  std::int64_t missing_scores = 0;
};

std::vector<ContentItem> rank(const RankingPolicy& policy, const Viewer& viewer,
                              const std::vector<ContentItem>& inventory, int period,
                              RankAudit* audit = nullptr);

Rankings rank_all(const RankingPolicy& policy, const World& world, const ScenarioState& state,
                  RankAudit* audit = nullptr);

// Steps `periods` times (or until the horizon) under the policy. The
// observer, when set, runs after each step with the audit of that step.
using StepObserver = std::function<void(const ScenarioState&, const RankAudit&)>;
void run_policy(const World& world, ScenarioState& state, const RankingPolicy& policy,
                int periods, const StepObserver& observer = {});

// Full trajectory from the initial state to the horizon.
ScenarioState simulate(const World& world, const RankingPolicy& policy, std::uint64_t seed);

// The consumed sets a policy produces along its own trajectory.
FixedSequence record_sequence(const World& world, const RankingPolicy& policy,
                              std::uint64_t seed = 0);

// First period at which the consumed sets differ.
std::optional<int> first_divergence(const FixedSequence& a, const FixedSequence& b);

enum class Winner { kA, kB, kTie };

struct PolicyComparison {
  double total_a = 0.0;
  double total_b = 0.0;
  std::map<ViewerId, double> per_viewer_delta;  // b - a
  Winner winner = Winner::kTie;
};

PolicyComparison compare_policies(const World& world, const RankingPolicy& a,
                                  const RankingPolicy& b, std::uint64_t seed);

class SizeError : public Error {
 public:
  SizeError(const std::string& what, double bound) : Error(what), bound_(bound) {}
  double bound() const { return bound_; }

 private:
  double bound_;
};

inline constexpr double kMaxOracleSequences = 1e7;

// Upper bound on the number of distinct consumed-set sequences:
// prod over viewers of C(M_i, J_i)^T, where M_i bounds the inventory size.
double sequence_count_bound(const World& world);

// Visits every feasible sequence (viewers consume min(J, |inventory|)
// items each period) in lexicographic order, with the terminal state.
// Threshold production mode only.
void for_each_sequence(const World& world,
                       const std::function<void(const FixedSequence&, const ScenarioState&)>& visit);

struct OracleResult {
  FixedSequence best_sequence;
  double best_total = 0.0;
  std::uint64_t sequences_evaluated = 0;
};

// Maximizes the discounted total by enumeration. Totals within 1e-12 count
// as ties and the lexicographically smallest sequence wins. Throws SizeError
// when the bound exceeds kMaxOracleSequences, DomainError for smooth mode.
OracleResult exhaustive_optimal(const World& world);

struct TheoremCheck {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

// Compares following r_prime against following r_dblprime, where the two
// agree before period t. lhs is the period-t value r_prime gains over
// r_dblprime; rhs is the discounted (beta^(k-t)) value r_dblprime gains
// over r_prime in periods k > t, each along its own trajectory. Holds iff
// lhs < rhs.
TheoremCheck theorem_condition_holds(const World& world, const FixedSequence& r_prime,
                                     const FixedSequence& r_dblprime, int t);

}  // namespace lrv

#endif  // LRV_POLICY_H_
