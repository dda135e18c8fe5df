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

#include "lrv/core.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace lrv {

std::string to_string(const ContentItem& item) {
  std::ostringstream out;
  out << raw(item.producer) << '.' << item.created_at << '.' << item.index;
  return out.str();
}

ContentItem parse_content_id(const std::string& text) {
  std::istringstream in(text);
  std::uint32_t producer = 0;
  int period = 0;
  int index = 0;
  char dot1 = 0;
  char dot2 = 0;
  if (!(in >> producer >> dot1 >> period >> dot2 >> index) || dot1 != '.' || dot2 != '.' ||
      in.peek() != std::char_traits<char>::eof()) {
    throw DomainError("malformed content id '" + text + "'");
  }
  return ContentItem{ProducerId{producer}, period, index};
}

std::string to_string(EngagementKind kind) {
  return kind == EngagementKind::kLike ? "like" : "comment";
}

void UtilityLedger::record(ViewerId viewer, int period, double value) {
  entries_[{viewer, period}].push_back(value);
}

void UtilityLedger::touch(ViewerId viewer, int period) { entries_[{viewer, period}]; }

double UtilityLedger::period_total(int period) const {
  double total = 0.0;
  for (const auto& [key, values] : entries_) {
    if (key.second != period) continue;
    for (double v : values) total += v;
  }
  return total;
}

double DiscountedObjective::weight(int period) const {
  const int exponent = convention == DiscountConvention::kFromZero ? period - 1 : period;
  return std::pow(beta, exponent);
}

void DiscountedObjective::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw DomainError("discount factor must lie in (0, 1], got " + std::to_string(beta));
  }
  if (horizon < 1) {
    throw DomainError("horizon must be >= 1, got " + std::to_string(horizon));
  }
}

UtilityReport discounted_utility(const UtilityLedger& ledger,
                                 const DiscountedObjective& objective) {
  objective.validate();
  UtilityReport report;
  for (const auto& [key, values] : ledger.entries()) {
    const auto& [viewer, period] = key;
    if (period < 1 || period > objective.horizon) {
      throw DomainError("ledger entry for period " + std::to_string(period) +
                        " lies outside the horizon [1, " + std::to_string(objective.horizon) +
                        "]");
    }
    double consumed = 0.0;
    for (double v : values) consumed += v;
    report.per_viewer[viewer] += objective.weight(period) * consumed;
  }
  for (const auto& [viewer, value] : report.per_viewer) report.total += value;
  return report;
}

namespace {

std::string describe(const std::vector<ValidationIssue>& issues) {
  std::ostringstream out;
  out << "invalid scenario (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s")
      << ")";
  for (const auto& issue : issues) out << "\n  " << issue.entity << ": " << issue.message;
  return out.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : Error(describe(issues)), issues_(std::move(issues)) {}

std::vector<ValidationIssue> validate_scenario(const std::vector<Viewer>& viewers,
                                               const std::vector<Producer>& producers,
                                               const DiscountedObjective& objective) {
  std::vector<ValidationIssue> issues;
  auto report = [&issues](std::string entity, std::string message) {
    issues.push_back({std::move(entity), std::move(message)});
  };

  if (viewers.empty()) report("population", "no viewers");
  if (producers.empty()) report("population", "no producers");

  if (!(objective.beta > 0.0 && objective.beta <= 1.0)) {
    report("objective", "beta must lie in (0, 1]");
  }
  if (objective.horizon < 1) report("objective", "horizon must be >= 1");

  std::set<ViewerId> viewer_ids;
  for (const auto& v : viewers) {
    if (!viewer_ids.insert(v.id).second) {
      report("viewer " + std::to_string(raw(v.id)), "duplicate id");
    }
  }
  std::set<ProducerId> producer_ids;
  for (const auto& p : producers) {
    if (!producer_ids.insert(p.id).second) {
      report("producer " + std::to_string(raw(p.id)), "duplicate id");
    }
  }

  for (const auto& v : viewers) {
    const std::string name = "viewer " + std::to_string(raw(v.id));
    if (v.slots_per_period < 1) report(name, "slots_per_period must be >= 1");
    for (const auto& [producer, value] : v.affinity) {
      if (!(value >= 0.0 && value <= 1.0)) {
        report(name, "affinity " + std::to_string(value) + " for producer " +
                         std::to_string(raw(producer)) + " outside [0, 1]");
      }
      if (!producer_ids.contains(producer)) {
        report(name, "affinity references unknown producer " + std::to_string(raw(producer)));
      }
    }
  }

  const std::size_t feature_dim = producers.empty() ? 0 : producers.front().features.size();
  for (const auto& p : producers) {
    const std::string name = "producer " + std::to_string(raw(p.id));
    if (p.features.size() != feature_dim) {
      report(name, "feature vector has length " + std::to_string(p.features.size()) +
                       ", expected " + std::to_string(feature_dim));
    }
    for (double f : p.features) {
      if (!std::isfinite(f)) {
        report(name, "non-finite feature value");
        break;
      }
    }
    if (!(p.responsiveness >= 0.0 && p.responsiveness <= 1.0)) {
      report(name, "responsiveness outside [0, 1]");
    }
    if (!(p.base_rate >= 0.0)) report(name, "base_rate must be >= 0");
    if (!std::is_sorted(p.followers.begin(), p.followers.end()) ||
        std::adjacent_find(p.followers.begin(), p.followers.end()) != p.followers.end()) {
      report(name, "followers must be sorted and unique");
    }
    for (ViewerId follower : p.followers) {
      if (!viewer_ids.contains(follower)) {
        report(name, "follower references unknown viewer " + std::to_string(raw(follower)));
      }
    }
  }
  return issues;
}

}  // namespace lrv
