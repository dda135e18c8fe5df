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

#include "lrv/uplift.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lrv/io.h"
#include "lrv/rng.h"

namespace lrv::uplift {

std::uint64_t fingerprint(const ExperimentRow& row) {
  Fnv1a h;
  h.value(raw(row.producer)).value(row.treated).value(row.outcome);
  for (double x : row.features) h.value(x);
  return h.digest();
}

ExperimentDataset::ExperimentDataset(std::vector<std::string> feature_names)
    : names_(std::move(feature_names)) {}

void ExperimentDataset::add(ExperimentRow row) {
  if (row.features.size() != names_.size()) {
    throw DomainError("row for producer " + std::to_string(raw(row.producer)) + " has " +
                      std::to_string(row.features.size()) + " features, expected " +
                      std::to_string(names_.size()));
  }
  if (!std::isfinite(row.outcome) ||
      !std::all_of(row.features.begin(), row.features.end(), [](double v) { return std::isfinite(v); })) {
    throw DomainError("row for producer " + std::to_string(raw(row.producer)) +
                      " has a missing or non-finite value");
  }
  if (row.split == SplitTag::kEvaluation) evaluation_.insert(fingerprint(row));
  rows_.push_back(std::move(row));
}

std::vector<ExperimentRow> ExperimentDataset::rows_with(SplitTag split) const {
  std::vector<ExperimentRow> out;
  for (const auto& r : rows_) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

namespace {

gbdt::TreeEnsemble guarded_fit(const ExperimentDataset& data,
                               const std::vector<const ExperimentRow*>& rows,
                               const std::vector<double>& targets, const gbdt::TrainParams& params) {
  gbdt::Dataset d(data.dim(), data.feature_names());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->split == SplitTag::kEvaluation || data.is_evaluation_row(*rows[i])) {
      throw LeakageError("evaluation row for producer " + std::to_string(raw(rows[i]->producer)) +
                         " reached a training call");
    }
    d.add_row(rows[i]->features, targets[i]);
  }
  return gbdt::fit(d, params);
}

}  // namespace

UpliftModel fit_three_tree(const ExperimentDataset& data, const gbdt::TrainParams& params_t,
                           const gbdt::TrainParams& params_c, const gbdt::TrainParams& params_d) {
  std::vector<const ExperimentRow*> train, treated, control;
  std::vector<double> y_treated, y_control;
  for (const auto& r : data.rows()) {
    if (r.split != SplitTag::kTrain) continue;
    train.push_back(&r);
    (r.treated ? treated : control).push_back(&r);
    (r.treated ? y_treated : y_control).push_back(r.outcome);
  }
  if (treated.empty() || control.empty()) {
    throw DomainError(std::string("degenerate split: training data has no ") +
                      (treated.empty() ? "treated" : "control") + " rows");
  }
  if (treated.size() < static_cast<std::size_t>(params_t.min_samples_leaf) ||
      control.size() < static_cast<std::size_t>(params_c.min_samples_leaf)) {
    throw DomainError("training data needs at least min_samples_leaf treated and control rows");
  }

  UpliftModel model;
  model.m_treatment = guarded_fit(data, treated, y_treated, params_t);
  model.m_control = guarded_fit(data, control, y_control, params_c);
  model.pseudo_outcomes.reserve(train.size());
  for (const ExperimentRow* r : train) {
    model.pseudo_outcomes.push_back(gbdt::predict(model.m_treatment, r->features) -
                                    gbdt::predict(model.m_control, r->features));
  }
  model.m_difference = guarded_fit(data, train, model.pseudo_outcomes, params_d);
  model.train_row_count = train.size();
  model.treated_train_rows = treated.size();
  model.control_train_rows = control.size();
  return model;
}

nlohmann::json to_json(const UpliftModel& m) {
  return {{"m_treatment", gbdt::to_json(m.m_treatment)},
          {"m_control", gbdt::to_json(m.m_control)},
          {"m_difference", gbdt::to_json(m.m_difference)},
          {"train_row_count", m.train_row_count},
          {"treated_train_rows", m.treated_train_rows},
          {"control_train_rows", m.control_train_rows}};
}

UpliftModel uplift_model_from_json(const nlohmann::json& j) {
  UpliftModel m;
  m.m_treatment = gbdt::ensemble_from_json(j.at("m_treatment"));
  m.m_control = gbdt::ensemble_from_json(j.at("m_control"));
  m.m_difference = gbdt::ensemble_from_json(j.at("m_difference"));
  m.train_row_count = j.value("train_row_count", std::size_t{0});
  m.treated_train_rows = j.value("treated_train_rows", std::size_t{0});
  m.control_train_rows = j.value("control_train_rows", std::size_t{0});
  if (m.m_treatment.dim() != m.m_difference.dim() || m.m_control.dim() != m.m_difference.dim()) {
    throw ConfigError("model: the three ensembles have different feature dimensions");
  }
  return m;
}

double predict_uplift(const UpliftModel& model, std::span<const double> x) {
  return gbdt::predict(model.m_difference, x);
}

namespace {

struct PercentileSplit {
  std::vector<bool> high;
  double cutoff_score = 0.0;
  bool tie_fallback = false;
};

// Rows strictly above the score at the cutoff rank go high. When nothing is
// strictly above, the lowest-ranked positions (by score, then input order)
// fill the low group instead.
PercentileSplit split_at_percentile(const std::vector<double>& scores, double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 100.0)) {
    throw DomainError("cutoff percentile must lie in (0, 100)");
  }
  const std::size_t n = scores.size();
  if (n < 2) throw DomainError("need at least two rows to form high and low groups");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::size_t k = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * cutoff / 100.0));
  k = std::clamp<std::size_t>(k, 1, n - 1);

  PercentileSplit out;
  out.cutoff_score = scores[order[k - 1]];
  out.high.assign(n, false);
  bool any_high = false;
  for (std::size_t i = 0; i < n; ++i) {
    out.high[i] = scores[i] > out.cutoff_score;
    any_high = any_high || out.high[i];
  }
  if (!any_high) {
    out.tie_fallback = true;
    for (std::size_t pos = k; pos < n; ++pos) out.high[order[pos]] = true;
  }
  return out;
}

GroupStats group_stats(const std::vector<double>& treated, const std::vector<double>& control,
                       const std::string& name) {
  if (treated.empty()) throw DomainError(name + " group has no treated rows");
  if (control.empty()) throw DomainError(name + " group has no control rows");
  const stats::Estimate ate = stats::mean_difference(treated, control);
  GroupStats g;
  g.n_treated = treated.size();
  g.n_control = control.size();
  g.ate_estimate = ate.value;
  g.standard_error = ate.standard_error;
  g.ci95_halfwidth = ate.ci95_halfwidth();
  g.control_mean = stats::mean(control);
  if (g.control_mean != 0.0) g.ate_pct_of_control = 100.0 * ate.value / g.control_mean;
  return g;
}

nlohmann::json to_json(const GroupStats& g) {
  return {{"n_treated", g.n_treated},
          {"n_control", g.n_control},
          {"ate_estimate", g.ate_estimate},
          {"ci95_halfwidth", g.ci95_halfwidth},
          {"standard_error", g.standard_error},
          {"control_mean", g.control_mean},
          {"ate_pct_of_control",
           g.ate_pct_of_control ? nlohmann::json(*g.ate_pct_of_control) : nlohmann::json()}};
}

}  // namespace

GroupComparison evaluate_high_low(const UpliftModel& model, const std::vector<ExperimentRow>& rows,
                                  double cutoff_percentile) {
  std::vector<double> scores;
  scores.reserve(rows.size());
  for (const auto& r : rows) scores.push_back(predict_uplift(model, r.features));
  const PercentileSplit split = split_at_percentile(scores, cutoff_percentile);

  std::vector<double> high_t, high_c, low_t, low_c;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& cell = split.high[i] ? (rows[i].treated ? high_t : high_c)
                               : (rows[i].treated ? low_t : low_c);
    cell.push_back(rows[i].outcome);
  }

  GroupComparison out;
  out.cutoff_percentile = cutoff_percentile;
  out.cutoff_score = split.cutoff_score;
  out.tie_fallback = split.tie_fallback;
  out.high = group_stats(high_t, high_c, "high");
  out.low = group_stats(low_t, low_c, "low");
  const stats::Estimate diff = stats::difference({out.high.ate_estimate, out.high.standard_error},
                                                 {out.low.ate_estimate, out.low.standard_error});
  out.difference = diff.value;
  out.difference_ci95 = diff.ci95_halfwidth();
  out.p_value = diff.p_value();
  out.difference_significant = diff.value > 0.0 && out.p_value < 0.05;
  return out;
}

nlohmann::json to_json(const GroupComparison& c) {
  return {{"cutoff_percentile", c.cutoff_percentile},
          {"cutoff_score", c.cutoff_score},
          {"high", to_json(c.high)},
          {"low", to_json(c.low)},
          {"difference", c.difference},
          {"difference_ci95", c.difference_ci95},
          {"p_value", c.p_value},
          {"difference_significant", c.difference_significant},
          {"tie_fallback", c.tie_fallback}};
}

std::set<ProducerId> FollowUpDesign::boost_set() const {
  std::set<ProducerId> out = high_boost;
  out.insert(low_boost.begin(), low_boost.end());
  return out;
}

namespace {

std::set<ProducerId> sample(const std::vector<ProducerId>& pool, int k, Engine& engine) {
  std::vector<ProducerId> v = pool;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), v.size() - 1);
    std::swap(v[static_cast<std::size_t>(i)], v[pick(engine)]);
  }
  return {v.begin(), v.begin() + k};
}

}  // namespace

FollowUpDesign validate_follow_up_design(const UpliftModel& model,
                                         const std::vector<Producer>& population, int k_per_group,
                                         double cutoff_percentile, std::uint64_t seed) {
  if (k_per_group < 1) throw DomainError("k_per_group must be >= 1");
  std::vector<Producer> sorted = population;
  std::sort(sorted.begin(), sorted.end(), [](const Producer& a, const Producer& b) { return a.id < b.id; });
  std::vector<double> scores;
  for (const auto& p : sorted) scores.push_back(predict_uplift(model, p.features));
  const PercentileSplit split = split_at_percentile(scores, cutoff_percentile);

  FollowUpDesign design;
  design.cutoff_percentile = cutoff_percentile;
  design.k_per_group = k_per_group;
  design.seed = seed;
  std::vector<ProducerId> high, low;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    (split.high[i] ? high : low).push_back(sorted[i].id);
  }
  const auto k = static_cast<std::size_t>(k_per_group);
  if (k > high.size() || k > low.size()) {
    throw DomainError("insufficient producers: k_per_group = " + std::to_string(k) + " but the high group has " +
                      std::to_string(high.size()) + " and the low group " + std::to_string(low.size()));
  }
  design.high_group = {high.begin(), high.end()};
  design.low_group = {low.begin(), low.end()};
  Engine engine = make_engine(seed, Stream::kFollowUp);
  design.high_boost = sample(high, k_per_group, engine);
  design.low_boost = sample(low, k_per_group, engine);
  return design;
}

nlohmann::json to_json(const FollowUpDesign& d) {
  auto ids = [](const std::set<ProducerId>& s) {
    nlohmann::json a = nlohmann::json::array();
    for (ProducerId p : s) a.push_back(raw(p));
    return a;
  };
  return {{"hypothesis", d.hypothesis},
          {"cutoff_percentile", d.cutoff_percentile},
          {"k_per_group", d.k_per_group},
          {"seed", d.seed},
          {"high_group_size", d.high_group.size()},
          {"low_group_size", d.low_group.size()},
          {"high_boost", ids(d.high_boost)},
          {"low_boost", ids(d.low_boost)}};
}

void write_experiment_csv(std::ostream& out, const ExperimentDataset& data) {
  out << "producer_id,treated,outcome";
  for (const auto& n : data.feature_names()) out << ',' << n;
  out << ",split\n";
  for (const auto& r : data.rows()) {
    out << raw(r.producer) << ',' << (r.treated ? 1 : 0) << ',' << format_double(r.outcome);
    for (double x : r.features) out << ',' << format_double(x);
    out << ',' << (r.split == SplitTag::kTrain ? "train" : "evaluation") << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, int line, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("line " + std::to_string(line) + ": column '" + column + "' is not a number: '" + s + "'");
}

}  // namespace

ExperimentDataset read_experiment_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("experiment CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  int id_col = -1, treated_col = -1, outcome_col = -1, split_col = -1;
  std::vector<int> feature_cols;
  std::vector<std::string> names;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const auto& h = header[c];
    if (h == "producer_id") id_col = c;
    else if (h == "treated") treated_col = c;
    else if (h == "outcome") outcome_col = c;
    else if (h == "split") split_col = c;
    else {
      feature_cols.push_back(c);
      names.push_back(h);
    }
  }
  if (id_col < 0 || treated_col < 0 || outcome_col < 0) {
    throw ConfigError("experiment CSV header needs producer_id, treated and outcome columns");
  }

  ExperimentDataset data(names);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    ExperimentRow row;
    row.producer = ProducerId{static_cast<std::uint32_t>(parse_number(fields[id_col], line_no, "producer_id"))};
    const auto& t = fields[treated_col];
    if (t == "1" || t == "true") row.treated = true;
    else if (t == "0" || t == "false") row.treated = false;
    else throw ConfigError("line " + std::to_string(line_no) + ": column 'treated' must be 0/1 or true/false");
    row.outcome = parse_number(fields[outcome_col], line_no, "outcome");
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      row.features.push_back(parse_number(fields[feature_cols[k]], line_no, names[k]));
    }
    if (split_col >= 0) {
      const auto& s = fields[split_col];
      if (s == "evaluation") row.split = SplitTag::kEvaluation;
      else if (s == "train" || s.empty()) row.split = SplitTag::kTrain;
      else throw ConfigError("line " + std::to_string(line_no) + ": column 'split' must be train or evaluation");
    }
    try {
      data.add(std::move(row));
    } catch (const DomainError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

}  // namespace lrv::uplift
