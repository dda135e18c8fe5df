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

// Small sample statistics: moments, Welch normal-approximation intervals,
// rank correlation, and the sign test.

#ifndef LRV_STATS_H_
#define LRV_STATS_H_

#include <span>
#include <vector>

namespace lrv::stats {

inline constexpr double kZ95 = 1.959963984540054;

double mean(std::span<const double> x);
// Unbiased (n - 1) variance; 0 for fewer than two values.
double sample_variance(std::span<const double> x);

double normal_cdf(double z);
// Two-sided p-value of a standard normal statistic.
double two_sided_p(double z);

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;

  double ci95_halfwidth() const { return kZ95 * standard_error; }
  double lower95() const { return value - ci95_halfwidth(); }
  double upper95() const { return value + ci95_halfwidth(); }
  // Two-sided p-value against zero; 1 when the standard error is zero and
  // the value is zero, 0 when only the standard error is zero.
  double p_value() const;
};

// mean(a) - mean(b) with the Welch (unequal variance) standard error.
Estimate mean_difference(std::span<const double> a, std::span<const double> b);

// a - b for independent estimates.
Estimate difference(const Estimate& a, const Estimate& b);

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

// One-sided sign test: P(X >= successes) for X ~ Binomial(trials, 1/2).
double sign_test_p(int successes, int trials);

}  // namespace lrv::stats

#endif  // LRV_STATS_H_
