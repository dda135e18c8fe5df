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

// Domain types of the content ecosystem: viewers, producers, content,
// engagement, and the discounted user-value objective.

#ifndef LRV_CORE_H_
#define LRV_CORE_H_

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lrv {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value outside the domain an operation accepts (bad fraction, bad beta,
// period beyond the horizon, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inconsistent references between entities, e.g. a ranking that contains
// content the viewer is not eligible to see.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

enum class ViewerId : std::uint32_t {};
enum class ProducerId : std::uint32_t {};

constexpr std::uint32_t raw(ViewerId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t raw(ProducerId id) { return static_cast<std::uint32_t>(id); }

// A post. The triple (producer, created_at, index) is the content identity;
// index numbers the posts one producer created in one period, from 0.
struct ContentItem {
  ProducerId producer{};
  int created_at = 1;
  int index = 0;

  auto operator<=>(const ContentItem&) const = default;
};

// "producer.period.index", e.g. "2.1.0".
std::string to_string(const ContentItem& item);
ContentItem parse_content_id(const std::string& text);

struct Viewer {
  ViewerId id{};
  int slots_per_period = 1;
  // Per-item satisfaction a post from each producer yields this viewer.
  std::map<ProducerId, double> affinity;

  double affinity_for(ProducerId producer) const {
    auto it = affinity.find(producer);
    return it == affinity.end() ? 0.0 : it->second;
  }
};

struct Producer {
  ProducerId id{};
  // Observed before any experiment starts.
  std::vector<double> features;
  // Simulator ground truth. Learners must never read it.
  double responsiveness = 0.0;
  double base_rate = 0.0;
  // Sorted, unique.
  std::vector<ViewerId> followers;
};

enum class EngagementKind { kLike, kComment };

std::string to_string(EngagementKind kind);

struct EngagementEvent {
  ViewerId viewer{};
  ContentItem content;
  int period = 1;
  EngagementKind kind = EngagementKind::kLike;
  double value = 0.0;

  ProducerId producer() const { return content.producer; }
  bool operator==(const EngagementEvent&) const = default;
};

// Engagement emission rule for a consumed item of satisfaction v:
//   engaged (and a like is emitted)  iff v > engage and v >= like;
//   a comment is additionally emitted iff engaged and v >= comment.
struct Thresholds {
  double engage = 0.0;
  double like = 0.0;
  double comment = 0.7;

  bool engages(double value) const { return value > engage && value >= like; }
  bool comments(double value) const { return engages(value) && value >= comment; }
};

// Realized satisfactions per (viewer, period), at most J values per key.
class UtilityLedger {
 public:
  using Key = std::pair<ViewerId, int>;

  void record(ViewerId viewer, int period, double value);
  // Registers a (viewer, period) key with no consumption, so empty periods
  // remain visible in exports.
  void touch(ViewerId viewer, int period);

  const std::map<Key, std::vector<double>>& entries() const { return entries_; }
  double period_total(int period) const;
  bool operator==(const UtilityLedger&) const = default;

 private:
  std::map<Key, std::vector<double>> entries_;
};

// Exponent applied to beta for period t: t - 1 (kFromZero, so the first
// period is undiscounted) or t (kFromOne).
enum class DiscountConvention { kFromZero, kFromOne };

struct DiscountedObjective {
  double beta = 0.9;
  int horizon = 1;
  DiscountConvention convention = DiscountConvention::kFromZero;

  // Weight of period t under the configured convention.
  double weight(int period) const;
  // Throws DomainError unless 0 < beta <= 1 and horizon >= 1.
  void validate() const;
};

struct UtilityReport {
  std::map<ViewerId, double> per_viewer;
  double total = 0.0;
};

// Sum over viewers and periods of weight(t) * (sum of the period's
// satisfactions). Throws DomainError for entries beyond the horizon.
UtilityReport discounted_utility(const UtilityLedger& ledger,
                                 const DiscountedObjective& objective);

struct ValidationIssue {
  std::string entity;  // e.g. "viewer 3"
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

// Type invariants, referential integrity and feature-length uniformity.
// Returns every violation found; an empty result means the population is
// well formed.
std::vector<ValidationIssue> validate_scenario(const std::vector<Viewer>& viewers,
                                               const std::vector<Producer>& producers,
                                               const DiscountedObjective& objective);

}  // namespace lrv

#endif  // LRV_CORE_H_
