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

#ifndef LRV_SCORE_TABLE_H_
#define LRV_SCORE_TABLE_H_

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <set>

#include "lrv/core.h"

namespace lrv {

// Published producer scores. Holdout producers carry default_score exactly;
// producers missing from the table are looked up as default_score too.
struct ScoreTable {
  std::map<ProducerId, double> scores;
  double default_score = 0.0;
  std::set<ProducerId> holdout;
  int model_version = 0;
  int trained_at = 0;

  // Sets *missing (when given) if the producer has no entry.
  double lookup(ProducerId producer, bool* missing = nullptr) const {
    auto it = scores.find(producer);
    if (it == scores.end()) {
      if (missing) *missing = true;
      return default_score;
    }
    return it->second;
  }
};

// CSV: producer_id,score,version
void write_score_table_csv(std::ostream& out, const ScoreTable& table);
// Reads producer_id,score[,version]. The default score is the mean of the
// scores read.
ScoreTable read_score_table_csv(std::istream& in);

// Holds the live table. Readers always see either the old or the new table
// in full.
class ScorePublisher {
 public:
  std::shared_ptr<const ScoreTable> current() const {
    std::lock_guard lock(mu_);
    return table_;
  }
  void publish(std::shared_ptr<const ScoreTable> table) {
    std::lock_guard lock(mu_);
    table_ = std::move(table);
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const ScoreTable> table_;
};

}  // namespace lrv

#endif  // LRV_SCORE_TABLE_H_
