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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "lrv/io.h"
#include "lrv/stats.h"
#include "lrv/synthetic.h"
#include "lrv/uplift.h"

namespace lrv::uplift {
namespace {

gbdt::TrainParams small_params() {
  gbdt::TrainParams p;
  p.rounds = 30;
  p.max_leaves = 8;
  return p;
}

ExperimentDataset small_world(std::uint64_t seed, bool linear = true, std::size_t n = 3000) {
  synthetic::UpliftWorldSpec spec;
  spec.n = n;
  spec.linear_uplift = linear;
  return synthetic::uplift_world(spec, seed);
}

TEST_CASE("pseudo-outcomes are the arm-model difference on training rows") {
  const auto data = small_world(1);
  const auto p = small_params();
  const UpliftModel m = fit_three_tree(data, p, p, p);
  const auto train = data.rows_with(SplitTag::kTrain);
  REQUIRE(m.pseudo_outcomes.size() == train.size());
  CHECK(m.train_row_count == train.size());
  CHECK(m.treated_train_rows + m.control_train_rows == train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double d = gbdt::predict(m.m_treatment, train[i].features) -
                     gbdt::predict(m.m_control, train[i].features);
    CHECK(std::fabs(m.pseudo_outcomes[i] - d) <= 1e-12);
  }
}

TEST_CASE("the deployed score is the third model's output") {
  const auto data = small_world(2);
  const auto p = small_params();
  const UpliftModel m = fit_three_tree(data, p, p, p);
  for (std::size_t i = 0; i < data.rows().size(); i += 101) {
    const auto& x = data.rows()[i].features;
    CHECK(predict_uplift(m, x) == gbdt::predict(m.m_difference, x));
    CHECK(predict_uplift(m, x) == predict_uplift(m, x));
  }
  const double wrong[2] = {0.0, 0.0};
  CHECK_THROWS_AS(predict_uplift(m, wrong), DomainError);
}

TEST_CASE("evaluation rows never reach a fit") {
  auto data = small_world(3);
  auto p = small_params();
  CHECK_NOTHROW(fit_three_tree(data, p, p, p));
  for (auto& r : data.mutable_rows()) {
    if (r.split == SplitTag::kEvaluation) {
      r.split = SplitTag::kTrain;
      break;
    }
  }
  CHECK_THROWS_AS(fit_three_tree(data, p, p, p), LeakageError);
}

TEST_CASE("degenerate arms are rejected") {
  ExperimentDataset data({"x"});
  for (int i = 0; i < 100; ++i) {
    data.add({ProducerId{static_cast<std::uint32_t>(i)}, {double(i)}, true, double(i % 3)});
  }
  const auto p = small_params();
  CHECK_THROWS_WITH_AS(fit_three_tree(data, p, p, p), doctest::Contains("no control"), DomainError);
  data.add({ProducerId{999}, {1.0}, false, 0.0});
  CHECK_THROWS_AS(fit_three_tree(data, p, p, p), DomainError);
  CHECK_THROWS_AS(data.add({ProducerId{1}, {1.0, 2.0}, false, 0.0}), DomainError);
}

TEST_CASE("doubling outcomes doubles every score") {
  const auto data = small_world(4);
  ExperimentDataset doubled(data.feature_names());
  for (auto r : data.rows()) {
    r.outcome *= 2.0;
    doubled.add(r);
  }
  const auto p = small_params();
  const UpliftModel a = fit_three_tree(data, p, p, p);
  const UpliftModel b = fit_three_tree(doubled, p, p, p);
  for (std::size_t i = 0; i < data.rows().size(); i += 7) {
    const auto& x = data.rows()[i].features;
    CHECK(predict_uplift(b, x) == 2.0 * predict_uplift(a, x));
  }
}

TEST_CASE("shifting outcomes preserves the score ranking") {
  const auto data = small_world(5);
  ExperimentDataset shifted(data.feature_names());
  for (auto r : data.rows()) {
    r.outcome = 2.0 * r.outcome + 3.0;
    shifted.add(r);
  }
  const auto p = small_params();
  const UpliftModel a = fit_three_tree(data, p, p, p);
  const UpliftModel b = fit_three_tree(shifted, p, p, p);
  std::vector<double> sa, sb;
  for (const auto& r : data.rows()) {
    sa.push_back(predict_uplift(a, r.features));
    sb.push_back(predict_uplift(b, r.features));
  }
  CHECK(stats::spearman(sa, sb) > 0.999);
}

TEST_CASE("zero-effect world gives small scores") {
  synthetic::UpliftWorldSpec spec;
  spec.n = 10000;
  spec.linear_uplift = false;
  const auto data = synthetic::uplift_world(spec, 6);
  gbdt::TrainParams p;
  p.rounds = 20;
  p.max_leaves = 4;
  p.min_samples_leaf = 250;
  const UpliftModel m = fit_three_tree(data, p, p, p);
  std::vector<double> yt, yc;
  double mean_abs = 0.0;
  const auto train = data.rows_with(SplitTag::kTrain);
  for (const auto& r : train) {
    mean_abs += std::fabs(predict_uplift(m, r.features));
    (r.treated ? yt : yc).push_back(r.outcome);
  }
  mean_abs /= static_cast<double>(train.size());
  CHECK(mean_abs < 2.0 * stats::mean_difference(yt, yc).standard_error);
}

TEST_CASE("monotone uplift is recovered and separates high from low") {
  const auto data = small_world(7, true, 20000);
  const gbdt::TrainParams p;
  const UpliftModel m = fit_three_tree(data, p, p, p);
  const auto eval = data.rows_with(SplitTag::kEvaluation);
  std::vector<double> score, truth;
  for (const auto& r : eval) {
    score.push_back(predict_uplift(m, r.features));
    truth.push_back(std::max(0.0, r.features[1]));
  }
  CHECK(stats::spearman(score, truth) >= 0.8);
  const GroupComparison g = evaluate_high_low(m, eval, 80.0);
  CHECK(g.high.ate_estimate - g.high.ci95_halfwidth > g.low.ate_estimate + g.low.ci95_halfwidth);
  CHECK(g.difference_significant);
  CHECK(g.high.n_treated + g.high.n_control + g.low.n_treated + g.low.n_control == eval.size());
}

TEST_CASE("group statistics match a direct computation") {
  // A constant-score model sends everything through the positional split.
  ExperimentDataset data({"x"});
  for (int i = 0; i < 200; ++i) {
    data.add({ProducerId{static_cast<std::uint32_t>(i)}, {double(i)}, i % 2 == 0, 0.0});
  }
  const auto p = small_params();
  const UpliftModel m = fit_three_tree(data, p, p, p);
  std::vector<ExperimentRow> rows;
  for (int i = 0; i < 8; ++i) {
    rows.push_back({ProducerId{static_cast<std::uint32_t>(i)}, {double(i)}, i % 2 == 0, double(i)});
  }
  const GroupComparison g = evaluate_high_low(m, rows, 50.0);
  CHECK(g.tie_fallback);
  // Positions 0..3 low, 4..7 high; treated rows are the even ones.
  CHECK(g.low.ate_estimate == doctest::Approx((0.0 + 2.0) / 2 - (1.0 + 3.0) / 2));
  CHECK(g.high.ate_estimate == doctest::Approx((4.0 + 6.0) / 2 - (5.0 + 7.0) / 2));
  CHECK(g.low.standard_error == doctest::Approx(std::sqrt(2.0 / 2 + 2.0 / 2)));
  CHECK(g.low.n_treated == 2);
  CHECK(g.high.n_control == 2);
  CHECK(g.high.ate_pct_of_control.has_value());
  CHECK(*g.high.ate_pct_of_control == doctest::Approx(100.0 * -1.0 / 6.0));
  CHECK_FALSE(g.difference_significant);

  CHECK_THROWS_AS(evaluate_high_low(m, rows, 0.0), DomainError);
  CHECK_THROWS_AS(evaluate_high_low(m, rows, 100.0), DomainError);
  std::vector<ExperimentRow> one_arm = rows;
  for (auto& r : one_arm) r.treated = true;
  CHECK_THROWS_WITH_AS(evaluate_high_low(m, one_arm, 50.0), doctest::Contains("no control"), DomainError);
  const auto j = to_json(g);
  CHECK(j.at("high").at("n_treated") == 2);
  CHECK(j.contains("p_value"));
}

TEST_CASE("follow-up design") {
  synthetic::UpliftWorldSpec spec;
  spec.n = 4000;
  const auto data = synthetic::uplift_world(spec, 8);
  const auto p = small_params();
  const UpliftModel m = fit_three_tree(data, p, p, p);
  std::vector<Producer> population;
  for (const auto& r : data.rows()) population.push_back(Producer{.id = r.producer, .features = r.features});

  const FollowUpDesign d = validate_follow_up_design(m, population, 100, 80.0, 1);
  CHECK(d.high_boost.size() == 100);
  CHECK(d.low_boost.size() == 100);
  CHECK(d.boost_set().size() == 200);
  CHECK(d.high_group.size() + d.low_group.size() == population.size());
  for (ProducerId id : d.high_boost) CHECK(d.high_group.contains(id));
  for (ProducerId id : d.low_boost) CHECK(d.low_group.contains(id));
  CHECK(d.hypothesis == "production gain(high) > production gain(low)");
  CHECK(validate_follow_up_design(m, population, 100, 80.0, 1).high_boost == d.high_boost);
  CHECK_THROWS_AS(validate_follow_up_design(m, population, 900, 80.0, 1), DomainError);
  CHECK_THROWS_AS(validate_follow_up_design(m, population, 0, 80.0, 1), DomainError);
}

TEST_CASE("experiment CSV round trip") {
  const auto data = small_world(9, true, 50);
  std::stringstream ss;
  write_experiment_csv(ss, data);
  const ExperimentDataset back = read_experiment_csv(ss);
  REQUIRE(back.rows().size() == data.rows().size());
  CHECK(back.feature_names() == data.feature_names());
  for (std::size_t i = 0; i < data.rows().size(); ++i) {
    CHECK(fingerprint(back.rows()[i]) == fingerprint(data.rows()[i]));
    CHECK(back.rows()[i].split == data.rows()[i].split);
  }
  std::istringstream no_split("producer_id,treated,outcome,f_0\n1,1,2.5,0.1\n2,0,1.0,0.2\n");
  CHECK(read_experiment_csv(no_split).rows().size() == 2);
  std::istringstream bad("producer_id,treated,outcome,f_0\n1,1,abc,0.1\n");
  CHECK_THROWS_WITH_AS(read_experiment_csv(bad), doctest::Contains("line 2"), ConfigError);
  std::istringstream missing("producer_id,outcome\n");
  CHECK_THROWS_AS(read_experiment_csv(missing), ConfigError);
}

}  // namespace
}  // namespace lrv::uplift
