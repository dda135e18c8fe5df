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

#include "lrv/io.h"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lrv {

std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

Json to_json(const DiscountedObjective& o) {
  return Json{{"beta", o.beta},
              {"horizon", o.horizon},
              {"convention", o.convention == DiscountConvention::kFromZero ? "from_zero"
                                                                           : "from_one"}};
}

DiscountedObjective objective_from_json(const Json& j) {
  DiscountedObjective o;
  o.beta = j.at("beta").get<double>();
  o.horizon = j.at("horizon").get<int>();
  const std::string convention = j.value("convention", std::string("from_zero"));
  if (convention == "from_zero") {
    o.convention = DiscountConvention::kFromZero;
  } else if (convention == "from_one") {
    o.convention = DiscountConvention::kFromOne;
  } else {
    throw ConfigError("objective.convention must be from_zero or from_one");
  }
  return o;
}

Json to_json(const Thresholds& t) {
  return Json{{"engage", t.engage}, {"like", t.like}, {"comment", t.comment}};
}

Thresholds thresholds_from_json(const Json& j) {
  Thresholds t;
  t.engage = j.value("engage", t.engage);
  t.like = j.value("like", t.like);
  t.comment = j.value("comment", t.comment);
  return t;
}

Json to_json(const ProductionRule& r) {
  Json j{{"mode", r.mode == ProductionMode::kThreshold ? "threshold" : "smooth"},
         {"smooth_gain", r.smooth_gain},
         {"max_posts", r.max_posts},
         {"drift_period", r.drift_period},
         {"drift_factor", r.drift_factor}};
  j["threshold_k"] = r.threshold_k ? Json(*r.threshold_k) : Json(nullptr);
  return j;
}

ProductionRule production_rule_from_json(const Json& j) {
  ProductionRule r;
  const std::string mode = j.value("mode", std::string("threshold"));
  if (mode == "threshold") {
    r.mode = ProductionMode::kThreshold;
  } else if (mode == "smooth") {
    r.mode = ProductionMode::kSmooth;
  } else {
    throw ConfigError("production.mode must be threshold or smooth");
  }
  if (j.contains("threshold_k")) {
    const Json& k = j.at("threshold_k");
    r.threshold_k = k.is_null() ? std::nullopt : std::optional<int>(k.get<int>());
  }
  r.smooth_gain = j.value("smooth_gain", r.smooth_gain);
  r.max_posts = j.value("max_posts", r.max_posts);
  r.drift_period = j.value("drift_period", r.drift_period);
  r.drift_factor = j.value("drift_factor", r.drift_factor);
  return r;
}

Json to_json(const Viewer& v) {
  Json affinity = Json::object();
  for (const auto& [producer, value] : v.affinity) {
    affinity[std::to_string(raw(producer))] = value;
  }
  return Json{{"id", raw(v.id)}, {"slots_per_period", v.slots_per_period}, {"affinity", affinity}};
}

Viewer viewer_from_json(const Json& j) {
  Viewer v;
  v.id = ViewerId{j.at("id").get<std::uint32_t>()};
  v.slots_per_period = j.value("slots_per_period", 1);
  for (const auto& [key, value] : j.at("affinity").items()) {
    std::uint32_t producer = 0;
    auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), producer);
    if (ec != std::errc() || ptr != key.data() + key.size()) {
      throw ConfigError("affinity key '" + key + "' is not a producer id");
    }
    v.affinity[ProducerId{producer}] = value.get<double>();
  }
  return v;
}

Json to_json(const Producer& p, bool ground_truth_marked) {
  Json followers = Json::array();
  for (ViewerId f : p.followers) followers.push_back(raw(f));
  Json j{{"id", raw(p.id)},
         {"features", p.features},
         {"base_rate", p.base_rate},
         {"followers", followers}};
  if (ground_truth_marked) {
    j["_ground_truth"] = Json{{"responsiveness", p.responsiveness}};
  } else {
    j["responsiveness"] = p.responsiveness;
  }
  return j;
}

Producer producer_from_json(const Json& j) {
  Producer p;
  p.id = ProducerId{j.at("id").get<std::uint32_t>()};
  p.features = j.value("features", std::vector<double>{});
  p.base_rate = j.value("base_rate", 0.0);
  if (j.contains("responsiveness")) {
    p.responsiveness = j.at("responsiveness").get<double>();
  } else if (j.contains("_ground_truth")) {
    p.responsiveness = j.at("_ground_truth").at("responsiveness").get<double>();
  }
  for (std::uint32_t f : j.value("followers", std::vector<std::uint32_t>{})) {
    p.followers.push_back(ViewerId{f});
  }
  return p;
}

Json to_json(const Scenario& s) {
  Json viewers = Json::array();
  for (const auto& v : s.viewers) viewers.push_back(to_json(v));
  Json producers = Json::array();
  for (const auto& p : s.producers) producers.push_back(to_json(p));
  return Json{{"viewers", viewers},
              {"producers", producers},
              {"objective", to_json(s.objective)},
              {"thresholds", to_json(s.thresholds)},
              {"production", to_json(s.production)},
              {"content_ttl", s.content_ttl}};
}

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
  auto field = [&j](const char* name) -> const Json& {
    if (!j.contains(name)) throw ConfigError(std::string("scenario: missing field '") + name + "'");
    return j.at(name);
  };
  const Json& viewers = field("viewers");
  for (std::size_t i = 0; i < viewers.size(); ++i) {
    s.viewers.push_back(with_context("scenario.viewers[" + std::to_string(i) + "]",
                                     [&] { return viewer_from_json(viewers[i]); }));
  }
  const Json& producers = field("producers");
  for (std::size_t i = 0; i < producers.size(); ++i) {
    s.producers.push_back(with_context("scenario.producers[" + std::to_string(i) + "]",
                                       [&] { return producer_from_json(producers[i]); }));
  }
  s.objective = with_context("scenario.objective", [&] { return objective_from_json(field("objective")); });
  if (j.contains("thresholds")) {
    s.thresholds = with_context("scenario.thresholds", [&] { return thresholds_from_json(j["thresholds"]); });
  }
  if (j.contains("production")) {
    s.production = with_context("scenario.production",
                                [&] { return production_rule_from_json(j["production"]); });
  }
  s.content_ttl = with_context("scenario.content_ttl", [&] { return j.value("content_ttl", 1); });
  return s;
}

Json population_to_json(const Population& population) {
  Json producers = Json::array();
  for (const auto& p : population.producers) producers.push_back(to_json(p, true));
  Json viewers = Json::array();
  for (const auto& v : population.viewers) viewers.push_back(to_json(v));
  return Json{{"producers", producers}, {"viewers", viewers}};
}

Population population_from_json(const Json& j) {
  Population pop;
  for (const auto& p : j.at("producers")) pop.producers.push_back(producer_from_json(p));
  for (const auto& v : j.at("viewers")) pop.viewers.push_back(viewer_from_json(v));
  return pop;
}

Json to_json(const PopulationSpec& s) {
  return Json{{"n_producers", s.n_producers},
              {"n_viewers", s.n_viewers},
              {"feature_dim", s.feature_dim},
              {"theta", s.theta},
              {"noise_sigma", s.noise_sigma},
              {"responsiveness_scale", s.responsiveness_scale},
              {"follower_graph", s.graph == FollowerGraph::kComplete ? "complete" : "random_p"},
              {"edge_probability", s.edge_probability},
              {"base_rate", s.base_rate},
              {"slots_per_period", s.slots_per_period},
              {"affinity_min", s.affinity_min},
              {"affinity_max", s.affinity_max}};
}

PopulationSpec population_spec_from_json(const Json& j) {
  PopulationSpec s;
  s.n_producers = j.value("n_producers", s.n_producers);
  s.n_viewers = j.value("n_viewers", s.n_viewers);
  s.feature_dim = j.value("feature_dim", s.feature_dim);
  s.theta = j.value("theta", std::vector<double>(s.feature_dim, 0.0));
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.responsiveness_scale = j.value("responsiveness_scale", s.responsiveness_scale);
  const std::string graph = j.value("follower_graph", std::string("complete"));
  if (graph == "complete") {
    s.graph = FollowerGraph::kComplete;
  } else if (graph == "random_p") {
    s.graph = FollowerGraph::kRandom;
  } else {
    throw ConfigError("population.follower_graph must be complete or random_p");
  }
  s.edge_probability = j.value("edge_probability", s.edge_probability);
  s.base_rate = j.value("base_rate", s.base_rate);
  s.slots_per_period = j.value("slots_per_period", s.slots_per_period);
  s.affinity_min = j.value("affinity_min", s.affinity_min);
  s.affinity_max = j.value("affinity_max", s.affinity_max);
  return s;
}

}  // namespace lrv
