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

#include "lrv/score_table.h"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "lrv/io.h"

namespace lrv {

void write_score_table_csv(std::ostream& out, const ScoreTable& table) {
  out << "producer_id,score,version\n";
  for (const auto& [producer, score] : table.scores) {
    out << raw(producer) << ',' << format_double(score) << ',' << table.model_version << '\n';
  }
}

ScoreTable read_score_table_csv(std::istream& in) {
  ScoreTable table;
  std::string line;
  if (!std::getline(in, line) || line.rfind("producer_id,score", 0) != 0) {
    throw ConfigError("score table: expected header producer_id,score[,version]");
  }
  int line_no = 1;
  double sum = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id;
    std::string score;
    std::string version;
    std::getline(row, id, ',');
    std::getline(row, score, ',');
    std::getline(row, version, ',');
    try {
      const double value = std::stod(score);
      table.scores[ProducerId{static_cast<std::uint32_t>(std::stoul(id))}] = value;
      sum += value;
      if (!version.empty()) table.model_version = std::stoi(version);
    } catch (const std::exception&) {
      throw ConfigError("score table line " + std::to_string(line_no) + ": malformed row '" +
                        line + "'");
    }
  }
  if (!table.scores.empty()) table.default_score = sum / static_cast<double>(table.scores.size());
  return table;
}

}  // namespace lrv
