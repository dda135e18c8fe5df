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

// JSON and CSV encodings of scenarios, populations and their parts.
// Field names follow the C++ member names in lower_snake_case.

#ifndef LRV_IO_H_
#define LRV_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrv/core.h"
#include "lrv/sim.h"

namespace lrv {

using Json = nlohmann::json;

// Malformed input documents: syntax errors, missing or mistyped fields.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shortest representation that round-trips.
std::string format_double(double value);

// Reads and parses a JSON file. Syntax errors are reported with line and
// column.
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Json to_json(const DiscountedObjective& objective);
DiscountedObjective objective_from_json(const Json& j);
Json to_json(const Thresholds& thresholds);
Thresholds thresholds_from_json(const Json& j);
Json to_json(const ProductionRule& rule);
ProductionRule production_rule_from_json(const Json& j);
Json to_json(const Viewer& viewer);
Viewer viewer_from_json(const Json& j);
// With ground_truth_marked, responsiveness is written under "_ground_truth"
// (population exports) instead of as a plain field (scenario documents).
Json to_json(const Producer& producer, bool ground_truth_marked = false);
Producer producer_from_json(const Json& j);

// {viewers, producers, objective, thresholds, production, content_ttl}.
Json to_json(const Scenario& scenario);
// Missing optional sections take their defaults. Throws ConfigError with
// the offending field path.
Scenario scenario_from_json(const Json& j);

// Population export: responsiveness appears only under "_ground_truth".
Json population_to_json(const Population& population);
Population population_from_json(const Json& j);

Json to_json(const PopulationSpec& spec);
PopulationSpec population_spec_from_json(const Json& j);

// Runs fn, converting JSON type and key errors into ConfigError prefixed
// with `where`.
template <typename Fn>
auto with_context(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace lrv

#endif  // LRV_IO_H_
