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

#ifndef IWR_REPORT_H_
#define IWR_REPORT_H_

#include <span>
#include <string>
#include <vector>

#include "iwr/orchestrator.h"

namespace iwr {

struct ReportRow {
  std::string method;
  int round = 0;
  double mean = 0.0;
  double std = 0.0;
  int n_seeds = 0;

  bool operator==(const ReportRow&) const = default;
};

// one row per (method, round) with the across-seed summary of best_success
std::vector<ReportRow> ReportRows(std::span<const ExperimentReport> reports);

// Methods as rows, rounds as columns ("Round 1", ..., "Final"); cells are
// "mean ± std" in percent. Base sits in the Final column.
std::string FormatTable(std::span<const ExperimentReport> reports,
                        int final_round);

// header "method,round,mean,std,n_seeds"; values printed with %.17g
std::string FormatCsv(std::span<const ExperimentReport> reports);
std::vector<ReportRow> ParseCsv(const std::string& text);

std::string FormatCrossTable(std::span<const CrossCell> cells);
std::string FormatCrossCsv(std::span<const CrossCell> cells);

// per-seed, per-round, per-checkpoint detail as pretty JSON
std::string ReportJson(std::span<const ExperimentReport> reports);

}  // namespace iwr

#endif  // IWR_REPORT_H_
