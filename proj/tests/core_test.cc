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

#include <random>

#include "doctest.h"
#include "lrv/core.h"
#include "lrv/io.h"
#include "lrv/sim.h"

namespace lrv {
namespace {

bool mentions(const std::vector<ValidationIssue>& issues, const std::string& entity,
              const std::string& fragment) {
  for (const auto& i : issues) {
    if (i.entity == entity && i.message.find(fragment) != std::string::npos) return true;
  }
  return false;
}

TEST_CASE("discounted utility of the two-period worked example") {
  UtilityLedger ledger;
  ledger.record(ViewerId{1}, 1, 1.0);
  ledger.record(ViewerId{1}, 2, 0.5);
  const DiscountedObjective obj{0.9, 2, DiscountConvention::kFromZero};
  const auto report = discounted_utility(ledger, obj);
  CHECK(report.total == doctest::Approx(1.45).epsilon(1e-15));
  CHECK(report.per_viewer.at(ViewerId{1}) == doctest::Approx(1.45).epsilon(1e-15));
}

TEST_CASE("vanishing discount keeps only the first period") {
  UtilityLedger ledger;
  ledger.record(ViewerId{1}, 1, 1.0);
  ledger.record(ViewerId{1}, 2, 0.5);
  const auto report = discounted_utility(ledger, {1e-9, 2, DiscountConvention::kFromZero});
  CHECK(std::abs(report.total - 1.0) < 1e-6);
}

TEST_CASE("two viewers both consuming producer 2 in both periods") {
  UtilityLedger ledger;
  for (std::uint32_t v : {1u, 2u}) {
    ledger.record(ViewerId{v}, 1, 0.6);
    ledger.record(ViewerId{v}, 2, 0.6);
  }
  const auto report = discounted_utility(ledger, {0.8, 2, DiscountConvention::kFromZero});
  CHECK(report.per_viewer.at(ViewerId{1}) == doctest::Approx(1.08));
  CHECK(report.per_viewer.at(ViewerId{2}) == doctest::Approx(1.08));
  CHECK(report.total == doctest::Approx(2.16));
}

TEST_CASE("from-one convention discounts the first period too") {
  UtilityLedger ledger;
  ledger.record(ViewerId{1}, 1, 1.0);
  ledger.record(ViewerId{1}, 2, 0.5);
  const auto report = discounted_utility(ledger, {0.9, 2, DiscountConvention::kFromOne});
  CHECK(report.total == doctest::Approx(0.9 + 0.81 * 0.5));
}

TEST_CASE("ledger entries past the horizon are rejected") {
  UtilityLedger ledger;
  ledger.record(ViewerId{1}, 3, 0.5);
  CHECK_THROWS_AS(discounted_utility(ledger, {0.9, 2}), DomainError);
}

TEST_CASE("objective domain") {
  CHECK_THROWS_AS((DiscountedObjective{0.0, 2}).validate(), DomainError);
  CHECK_THROWS_AS((DiscountedObjective{1.1, 2}).validate(), DomainError);
  CHECK_THROWS_AS((DiscountedObjective{0.5, 0}).validate(), DomainError);
  CHECK_NOTHROW((DiscountedObjective{1.0, 2}).validate());
}

TEST_CASE("discounted utility properties on random ledgers") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    UtilityLedger ledger;
    const int horizon = 1 + static_cast<int>(rng() % 5);
    const int viewers = 1 + static_cast<int>(rng() % 4);
    for (int v = 0; v < viewers; ++v) {
      for (int t = 1; t <= horizon; ++t) {
        const int slots = static_cast<int>(rng() % 3);
        for (int j = 0; j < slots; ++j) {
          ledger.record(ViewerId{static_cast<std::uint32_t>(v)}, t, unit(rng));
        }
      }
    }
    const double beta = 0.05 + 0.9 * unit(rng);
    const DiscountedObjective obj{beta, horizon};
    const auto base = discounted_utility(ledger, obj);

    // Additive over viewers.
    double sum = 0.0;
    for (const auto& [viewer, value] : base.per_viewer) sum += value;
    CHECK(base.total == doctest::Approx(sum).epsilon(1e-12));

    // Scaling by c scales the total by c.
    const double c = 0.1 + 2.0 * unit(rng);
    UtilityLedger scaled;
    for (const auto& [key, values] : ledger.entries()) {
      for (double x : values) scaled.record(key.first, key.second, c * x);
    }
    CHECK(discounted_utility(scaled, obj).total == doctest::Approx(c * base.total).epsilon(1e-12));

    // Strict monotonicity in any single satisfaction.
    if (!ledger.entries().empty()) {
      UtilityLedger bumped = ledger;
      const auto& [key, values] = *ledger.entries().begin();
      bumped.record(key.first, key.second, 0.25);
      CHECK(discounted_utility(bumped, obj).total > base.total);
    }

    // beta = 1 is the undiscounted sum.
    double undiscounted = 0.0;
    for (const auto& [key, values] : ledger.entries()) {
      for (double x : values) undiscounted += x;
    }
    CHECK(discounted_utility(ledger, {1.0, horizon}).total ==
          doctest::Approx(undiscounted).epsilon(1e-15));
  }
}

TEST_CASE("validate_scenario accepts the two-period scenario") {
  const auto instance = make_two_period_scenario(0.8, 0.5, 0.9);
  const auto& s = instance.scenario;
  CHECK(validate_scenario(s.viewers, s.producers, s.objective).empty());
}

TEST_CASE("validate_scenario names the offending entities") {
  auto s = make_two_period_scenario(0.8, 0.5, 0.9).scenario;

  SUBCASE("affinity above one") {
    s.viewers[0].affinity[ProducerId{1}] = 1.2;
    CHECK(mentions(validate_scenario(s.viewers, s.producers, s.objective), "viewer 1", "outside [0, 1]"));
  }
  SUBCASE("feature length mismatch") {
    s.producers[0].features.assign(5, 0.0);
    s.producers[1].features.assign(6, 0.0);
    CHECK(mentions(validate_scenario(s.viewers, s.producers, s.objective), "producer 2",
                   "has length 6, expected 5"));
  }
  SUBCASE("dangling follower and affinity references") {
    s.producers[0].followers.push_back(ViewerId{9});
    s.viewers[1].affinity[ProducerId{7}] = 0.3;
    const auto issues = validate_scenario(s.viewers, s.producers, s.objective);
    CHECK(mentions(issues, "producer 1", "unknown viewer 9"));
    CHECK(mentions(issues, "viewer 2", "unknown producer 7"));
  }
  SUBCASE("empty population") {
    const auto issues = validate_scenario({}, {}, s.objective);
    CHECK(mentions(issues, "population", "no viewers"));
    CHECK(mentions(issues, "population", "no producers"));
  }
  SUBCASE("zero slots and negative base rate") {
    s.viewers[0].slots_per_period = 0;
    s.producers[1].base_rate = -1.0;
    const auto issues = validate_scenario(s.viewers, s.producers, s.objective);
    CHECK(mentions(issues, "viewer 1", "slots_per_period"));
    CHECK(mentions(issues, "producer 2", "base_rate"));
  }
}

TEST_CASE("scenario JSON round trip") {
  const auto s = make_two_period_scenario(0.8, 0.5, 0.9).scenario;
  const Json j = to_json(s);
  CHECK(j.at("objective").at("beta") == 0.9);
  CHECK(j.at("thresholds").contains("comment"));
  CHECK(j.at("viewers")[0].at("affinity").at("2") == 0.5);
  const Scenario back = scenario_from_json(j);
  CHECK(to_json(back) == j);
}

TEST_CASE("malformed scenario documents report the field") {
  Json j = to_json(make_two_period_scenario(0.8, 0.5, 0.9).scenario);
  j["producers"][1]["id"] = "two";
  try {
    scenario_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("scenario.producers[1]") != std::string::npos);
  }
  j.erase("objective");
  CHECK_THROWS_AS(scenario_from_json(j), ConfigError);
}

TEST_CASE("content ids print and parse") {
  const ContentItem item{ProducerId{12}, 3, 1};
  CHECK(to_string(item) == "12.3.1");
  CHECK(parse_content_id("12.3.1") == item);
  CHECK_THROWS_AS(parse_content_id("12-3-1"), DomainError);
}

}  // namespace
}  // namespace lrv
