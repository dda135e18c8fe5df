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

#include "lrv/synthetic.h"

#include <array>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lrv/rng.h"

namespace lrv::synthetic {

std::string to_string(RegressionTask task) {
  switch (task) {
    case RegressionTask::kStep: return "step";
    case RegressionTask::kAdditive: return "additive";
    case RegressionTask::kInteraction: return "interaction";
  }
  return "unknown";
}

gbdt::Dataset regression_task(RegressionTask task, std::size_t n, std::uint64_t seed,
                              double noise_sd) {
  Engine engine = make_engine(seed, Stream::kDataset, static_cast<std::uint64_t>(task));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sd);
  gbdt::Dataset data(5);
  std::array<double, 5> x{};
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : x) v = unit(engine);
    double y = 0.0;
    switch (task) {
      case RegressionTask::kStep: y = x[0] > 0.0 ? 1.0 : 0.0; break;
      case RegressionTask::kAdditive: y = x[0] + std::sin(3.0 * x[1]) + x[2] * x[2]; break;
      case RegressionTask::kInteraction: y = x[0] * x[1]; break;
    }
    data.add_row(x, y + noise(engine));
  }
  return data;
}

uplift::ExperimentDataset uplift_world(const UpliftWorldSpec& spec, std::uint64_t seed) {
  Engine engine = make_engine(seed, Stream::kDataset, spec.linear_uplift ? 10 : 11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, spec.noise_sd);
  const std::size_t n = spec.n;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<bool> treated(n, false);
  for (std::size_t i = 0; i < n / 2; ++i) treated[order[i]] = true;
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<bool> evaluation(n, false);
  const auto n_eval = static_cast<std::size_t>(std::llround(spec.evaluation_fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < std::min(n_eval, n); ++i) evaluation[order[i]] = true;

  uplift::ExperimentDataset data({"f_0", "f_1", "f_2", "f_3", "f_4"});
  for (std::size_t i = 0; i < n; ++i) {
    uplift::ExperimentRow row;
    row.producer = ProducerId{static_cast<std::uint32_t>(i)};
    row.features.resize(5);
    for (double& v : row.features) v = unit(engine);
    const double& x0 = row.features[0];
    const double& x1 = row.features[1];
    row.treated = treated[i];
    const double base = spec.linear_uplift ? x0 : x0 + std::sin(3.0 * x1);
    row.outcome = base + (row.treated ? true_uplift(spec, row.features) : 0.0) + noise(engine);
    row.split = evaluation[i] ? uplift::SplitTag::kEvaluation : uplift::SplitTag::kTrain;
    data.add(std::move(row));
  }
  return data;
}

double true_uplift(const UpliftWorldSpec& spec, std::span<const double> features) {
  return spec.linear_uplift ? std::max(0.0, features[1]) : 0.0;
}

}  // namespace lrv::synthetic
