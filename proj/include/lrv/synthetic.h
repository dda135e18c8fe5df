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

// Synthetic regression tasks and experiment datasets with known structure.

#ifndef LRV_SYNTHETIC_H_
#define LRV_SYNTHETIC_H_

#include <cstdint>
#include <string>

#include "lrv/gbdt.h"
#include "lrv/uplift.h"

namespace lrv::synthetic {

// Five uniform features on [-1, 1] and Gaussian noise (sd 0.1):
//   kStep:        y = 1{x0 > 0}
//   kAdditive:    y = x0 + sin(3 x1) + x2^2
//   kInteraction: y = x0 * x1
enum class RegressionTask { kStep, kAdditive, kInteraction };

std::string to_string(RegressionTask task);

gbdt::Dataset regression_task(RegressionTask task, std::size_t n, std::uint64_t seed,
                              double noise_sd = 0.1);

struct UpliftWorldSpec {
  std::size_t n = 20000;
  double evaluation_fraction = 0.2;
  double noise_sd = 0.5;
  // false: y = x0 + sin(3 x1) + noise in both arms.
  bool linear_uplift = true;
};

// Five uniform features on [-1, 1]. Exactly half the rows are treated and a
// random evaluation_fraction of rows is tagged for evaluation. With
// linear_uplift, y = x0 + treated * max(0, x1) + noise.
uplift::ExperimentDataset uplift_world(const UpliftWorldSpec& spec, std::uint64_t seed);

// The generating treatment effect of a row from uplift_world.
double true_uplift(const UpliftWorldSpec& spec, std::span<const double> features);

}  // namespace lrv::synthetic

#endif  // LRV_SYNTHETIC_H_
