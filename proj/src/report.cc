// Copyright 2026 The IWR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "iwr/report.h"

#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "json.hpp"

#include "iwr/errors.h"

namespace iwr {

namespace {

constexpr char kCsvHeader[] = "method,round,mean,std,n_seeds";

std::string Cell(const RoundStats& s) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", 100.0 * s.mean,
                100.0 * s.std);
  return buf;
}

std::string Pad(const std::string& s, size_t width) {
  // "±" is two bytes but one column
  size_t visible = 0;
  for (unsigned char c : s) visible += (c & 0xC0) != 0x80;
  return s + std::string(width > visible ? width - visible : 0, ' ');
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<ReportRow> ReportRows(std::span<const ExperimentReport> reports) {
  std::vector<ReportRow> rows;
  for (const ExperimentReport& r : reports) {
    for (const RoundStats& s : r.Aggregate()) {
      rows.push_back({r.method, s.round, s.mean, s.std, s.n_seeds});
    }
  }
  return rows;
}

std::string FormatTable(std::span<const ExperimentReport> reports,
                        int final_round) {
  std::vector<std::string> headers = {"Model"};
  for (int r = 1; r < final_round; ++r) {
    headers.push_back("Round " + std::to_string(r));
  }
  headers.push_back("Final");
  const size_t columns = headers.size();

  std::vector<std::vector<std::string>> table = {headers};
  for (const ExperimentReport& report : reports) {
    std::vector<std::string> row(columns, "-");
    row[0] = report.method;
    for (const RoundStats& s : report.Aggregate()) {
      size_t col = (s.round == 0 || s.round >= final_round)
                       ? columns - 1
                       : static_cast<size_t>(s.round);
      row[col] = Cell(s);
    }
    table.push_back(std::move(row));
  }
  std::vector<size_t> widths(columns, 0);
  for (const auto& row : table) {
    for (size_t c = 0; c < columns; ++c) {
      widths[c] = std::max(widths[c], Pad(row[c], 0).size());
    }
  }
  std::string out;
  for (const auto& row : table) {
    for (size_t c = 0; c < columns; ++c) {
      out += c + 1 < columns ? Pad(row[c], widths[c] + 2) : row[c];
    }
    out += '\n';
  }
  return out;
}

std::string FormatCsv(std::span<const ExperimentReport> reports) {
  std::string out = std::string(kCsvHeader) + "\n";
  char buf[128];
  for (const ReportRow& r : ReportRows(reports)) {
    std::snprintf(buf, sizeof(buf), ",%d,%.17g,%.17g,%d\n", r.round, r.mean,
                  r.std, r.n_seeds);
    out += r.method + buf;
  }
  return out;
}

std::vector<ReportRow> ParseCsv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line != kCsvHeader) {
    throw Error(ErrorKind::kSchemaViolation,
                "report csv must start with \"" + std::string(kCsvHeader) +
                    "\"");
  }
  std::vector<ReportRow> rows;
  int line_number = 1;
  while (std::getline(ss, line)) {
    ++line_number;
    if (line.empty()) continue;
    auto fields = SplitCsv(line);
    auto bad = [&] {
      throw Error(ErrorKind::kSchemaViolation,
                  "report csv line " + std::to_string(line_number));
    };
    if (fields.size() != 5 || fields[0].empty()) bad();
    ReportRow row;
    row.method = fields[0];
    char* end = nullptr;
    row.round = static_cast<int>(std::strtol(fields[1].c_str(), &end, 10));
    if (*end != '\0') bad();
    row.mean = std::strtod(fields[2].c_str(), &end);
    if (*end != '\0') bad();
    row.std = std::strtod(fields[3].c_str(), &end);
    if (*end != '\0') bad();
    row.n_seeds = static_cast<int>(std::strtol(fields[4].c_str(), &end, 10));
    if (*end != '\0') bad();
    rows.push_back(row);
  }
  return rows;
}

std::string FormatCrossTable(std::span<const CrossCell> cells) {
  std::vector<std::string> collectors;
  std::vector<std::string> trainers;
  std::map<std::pair<std::string, std::string>, std::string> value;
  for (const CrossCell& c : cells) {
    std::string trainer(MethodName(c.trainer));
    if (std::find(collectors.begin(), collectors.end(), c.collector) ==
        collectors.end()) {
      collectors.push_back(c.collector);
    }
    if (std::find(trainers.begin(), trainers.end(), trainer) ==
        trainers.end()) {
      trainers.push_back(trainer);
    }
    value[{trainer, c.collector}] = Cell(c.stats);
  }
  size_t width = 14;
  std::string out = Pad("Model \\ Data", width);
  for (const auto& col : collectors) out += Pad(col, width);
  out += '\n';
  for (const auto& t : trainers) {
    out += Pad(t, width);
    for (const auto& col : collectors) {
      auto it = value.find({t, col});
      out += Pad(it == value.end() ? "-" : it->second, width);
    }
    out += '\n';
  }
  return out;
}

std::string FormatCrossCsv(std::span<const CrossCell> cells) {
  std::string out = "trainer,collector,mean,std,n_seeds\n";
  char buf[128];
  for (const CrossCell& c : cells) {
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%d\n", c.stats.mean,
                  c.stats.std, c.stats.n_seeds);
    out += std::string(MethodName(c.trainer)) + "," + c.collector + buf;
  }
  return out;
}

std::string ReportJson(std::span<const ExperimentReport> reports) {
  using nlohmann::json;
  json out = json::array();
  for (const ExperimentReport& r : reports) {
    json seeds = json::array();
    for (const SeedRun& s : r.seeds) {
      json rounds = json::array();
      for (const RoundReport& rr : s.rounds) {
        json checkpoints = json::array();
        for (const CheckpointScore& c : rr.checkpoints) {
          checkpoints.push_back({{"epoch", c.epoch},
                                 {"success_rate", c.success_rate},
                                 {"training_loss", c.training_loss}});
        }
        rounds.push_back({{"round", rr.round},
                          {"quota", rr.quota},
                          {"intervention_samples", rr.intervention_samples},
                          {"quota_overshoot",
                           rr.quota > 0 ? rr.intervention_samples - rr.quota
                                        : 0},
                          {"trajectories", rr.trajectories},
                          {"best_success", rr.best_success},
                          {"intervention_size", rr.intervention_size},
                          {"on_policy_size", rr.on_policy_size},
                          {"checkpoints", std::move(checkpoints)}});
      }
      seeds.push_back({{"seed", s.seed}, {"rounds", std::move(rounds)}});
    }
    out.push_back({{"method", r.method}, {"seeds", std::move(seeds)}});
  }
  return out.dump(2);
}

}  // namespace iwr
