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

#include "iwr/datastore.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <utility>

#include "json.hpp"

#include "iwr/errors.h"

namespace iwr {

namespace {

using nlohmann::json;

[[noreturn]] void Schema(const std::string& what) {
  throw Error(ErrorKind::kSchemaViolation, what);
}

const json& Field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    Schema("missing field \"" + std::string(key) + "\"" + where);
  }
  return *it;
}

template <int N>
Eigen::Matrix<double, N, 1> ReadVector(const json& v, const char* key,
                                       const std::string& where) {
  if (!v.is_array() || v.size() != N) {
    Schema("\"" + std::string(key) + "\" must be an array of " +
           std::to_string(N) + " numbers" + where);
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!v[i].is_number()) {
      Schema("\"" + std::string(key) + "\"[" + std::to_string(i) +
             "] is not a number" + where);
    }
    out(i) = v[i].get<double>();
  }
  return out;
}

void FillRow(Batch* batch, int row, const StoredStep& step, Bucket bucket,
             int index) {
  batch->obs.row(row) = step.obs.transpose();
  batch->actions.row(row) = step.action.transpose();
  batch->sources[row] =
      bucket == Bucket::kIntervention ? Source::kHuman : Source::kPolicy;
  batch->refs[row] = {bucket, index};
}

Batch MakeBatch(int rows) {
  Batch b;
  b.obs.resize(rows, kObsDim);
  b.actions.resize(rows, kActDim);
  b.sources.resize(rows);
  b.refs.resize(rows);
  return b;
}

void CheckBatchSize(int batch_size) {
  if (batch_size < 1) {
    throw Error(ErrorKind::kInvalidArgument, "batch size must be >= 1");
  }
}

}  // namespace

DatasetStore::DatasetStore(std::string task) : task_(std::move(task)) {}

void DatasetStore::Ingest(const Trajectory& trajectory, IngestRule rule) {
  const int id = static_cast<int>(trajectories_.size());
  trajectories_.push_back({trajectory.operator_id, trajectory.round,
                           trajectory.seed, trajectory.success});
  std::vector<SampleRef>& refs = trajectory_steps_.emplace_back();
  for (const Step& step : trajectory.steps) {
    Bucket target = Bucket::kIntervention;
    if (step.source == Source::kPolicy) {
      if (rule == IngestRule::kDiscardPolicy) continue;
      if (rule == IngestRule::kSplit) target = Bucket::kOnPolicy;
    }
    auto& dest =
        target == Bucket::kIntervention ? intervention_ : on_policy_;
    refs.push_back({target, static_cast<int>(dest.size())});
    dest.push_back({step.obs, step.action, step.t, id});
  }
}

Trajectory DatasetStore::StoredTrajectory(int i) const {
  Trajectory traj;
  const TrajectoryInfo& info = trajectories_.at(i);
  traj.operator_id = info.operator_id;
  traj.round = info.round;
  traj.seed = info.seed;
  traj.success = info.success;
  for (const SampleRef& ref : trajectory_steps_[i]) {
    const StoredStep& s = bucket(ref.bucket)[ref.index];
    traj.steps.push_back({s.obs, s.action,
                          ref.bucket == Bucket::kIntervention ? Source::kHuman
                                                              : Source::kPolicy,
                          s.t});
  }
  return traj;
}

int DatasetStore::round_count() const {
  int rounds = 0;
  for (const auto& t : trajectories_) rounds = std::max(rounds, t.round);
  return rounds;
}

std::vector<std::string> DatasetStore::operator_ids() const {
  std::set<std::string> ids;
  for (const auto& t : trajectories_) ids.insert(t.operator_id);
  return {ids.begin(), ids.end()};
}

bool DatasetStore::SameContents(const DatasetStore& other) const {
  if (trajectories_ != other.trajectories_ ||
      intervention_ != other.intervention_ || on_policy_ != other.on_policy_) {
    return false;
  }
  for (size_t i = 0; i < trajectory_steps_.size(); ++i) {
    const auto& a = trajectory_steps_[i];
    const auto& b = other.trajectory_steps_[i];
    if (a.size() != b.size()) return false;
    for (size_t j = 0; j < a.size(); ++j) {
      if (a[j].bucket != b[j].bucket || a[j].index != b[j].index) return false;
    }
  }
  return true;
}

double Alpha(const DatasetStore& store) {
  if (store.intervention_size() == 0) {
    throw Error(ErrorKind::kEmptyInterventionBucket,
                "alpha is undefined with an empty intervention bucket");
  }
  return static_cast<double>(store.on_policy_size()) /
         static_cast<double>(store.intervention_size());
}

Batch SampleBalanced(const DatasetStore& store, int batch_size, Rng& rng) {
  CheckBatchSize(batch_size);
  if (batch_size % 2 != 0) {
    throw Error(ErrorKind::kOddBatch, "balanced batch size " +
                                          std::to_string(batch_size) +
                                          " is odd");
  }
  if (store.intervention_size() == 0 || store.on_policy_size() == 0) {
    throw Error(ErrorKind::kEmptyBucket,
                "balanced sampling needs both buckets (|D_I|=" +
                    std::to_string(store.intervention_size()) +
                    ", |D_R|=" + std::to_string(store.on_policy_size()) + ")");
  }
  std::vector<SampleRef> picks;
  picks.reserve(batch_size);
  const int half = batch_size / 2;
  for (Bucket b : {Bucket::kIntervention, Bucket::kOnPolicy}) {
    const auto n = static_cast<uint64_t>(store.bucket(b).size());
    for (int i = 0; i < half; ++i) {
      picks.push_back({b, static_cast<int>(rng.UniformInt(n))});
    }
  }
  // Fisher-Yates
  for (int i = batch_size - 1; i > 0; --i) {
    auto j = static_cast<int>(rng.UniformInt(static_cast<uint64_t>(i) + 1));
    std::swap(picks[i], picks[j]);
  }
  Batch batch = MakeBatch(batch_size);
  for (int r = 0; r < batch_size; ++r) {
    const SampleRef& ref = picks[r];
    FillRow(&batch, r, store.bucket(ref.bucket)[ref.index], ref.bucket,
            ref.index);
  }
  return batch;
}

Batch SampleUniform(const DatasetStore& store, int batch_size, Rng& rng) {
  CheckBatchSize(batch_size);
  const uint64_t n_i = store.intervention_size();
  const uint64_t total = store.total_size();
  if (total == 0) throw Error(ErrorKind::kEmptyStore, "store is empty");
  Batch batch = MakeBatch(batch_size);
  for (int r = 0; r < batch_size; ++r) {
    uint64_t u = rng.UniformInt(total);
    if (u < n_i) {
      FillRow(&batch, r, store.intervention()[u], Bucket::kIntervention,
              static_cast<int>(u));
    } else {
      FillRow(&batch, r, store.on_policy()[u - n_i], Bucket::kOnPolicy,
              static_cast<int>(u - n_i));
    }
  }
  return batch;
}

Batch SampleBucket(const DatasetStore& store, Bucket bucket, int batch_size,
                   Rng& rng) {
  CheckBatchSize(batch_size);
  const auto& steps = store.bucket(bucket);
  if (steps.empty()) {
    throw Error(ErrorKind::kEmptyBucket,
                bucket == Bucket::kIntervention ? "intervention bucket is empty"
                                                : "on-policy bucket is empty");
  }
  Batch batch = MakeBatch(batch_size);
  for (int r = 0; r < batch_size; ++r) {
    auto u = static_cast<int>(rng.UniformInt(steps.size()));
    FillRow(&batch, r, steps[u], bucket, u);
  }
  return batch;
}

Batch BucketBatch(const DatasetStore& store, Bucket bucket) {
  const auto& steps = store.bucket(bucket);
  Batch batch = MakeBatch(static_cast<int>(steps.size()));
  for (int r = 0; r < batch.size(); ++r) FillRow(&batch, r, steps[r], bucket, r);
  return batch;
}

DatasetStore Merge(std::span<const DatasetStore> stores) {
  std::string task;
  for (const DatasetStore& s : stores) {
    if (s.trajectories().empty()) continue;
    if (task.empty()) {
      task = s.task();
    } else if (s.task() != task) {
      throw Error(ErrorKind::kTaskMismatch,
                  "cannot merge task \"" + s.task() + "\" into \"" + task +
                      "\"");
    }
  }
  DatasetStore merged(task.empty() ? std::string(kTaskId) : task);
  if (!stores.empty()) merged.set_method(stores.front().method());
  // stored trajectories carry their bucket as source, so Split re-ingests
  // them into the same buckets in the same order
  for (const DatasetStore& s : stores) {
    for (int i = 0; i < static_cast<int>(s.trajectories().size()); ++i) {
      merged.Ingest(s.StoredTrajectory(i), IngestRule::kSplit);
    }
  }
  return merged;
}

std::string EncodeTrajectoryLine(const Trajectory& trajectory,
                                 std::string_view task) {
  json steps = json::array();
  for (const Step& s : trajectory.steps) {
    json obs = json::array();
    for (int i = 0; i < kObsDim; ++i) obs.push_back(s.obs(i));
    json action = json::array();
    for (int i = 0; i < kActDim; ++i) action.push_back(s.action(i));
    steps.push_back({{"t", s.t},
                     {"obs", std::move(obs)},
                     {"action", std::move(action)},
                     {"source", SourceName(s.source)}});
  }
  json line = {{"task", task},
               {"operator", trajectory.operator_id},
               {"round", trajectory.round},
               {"seed", trajectory.seed},
               {"success", trajectory.success},
               {"steps", std::move(steps)}};
  return line.dump();
}

Trajectory DecodeTrajectoryLine(std::string_view line, std::string* task) {
  json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) Schema("not valid JSON");
  if (!doc.is_object()) Schema("line is not a JSON object");
  const std::string top;
  const json& task_field = Field(doc, "task", top);
  const json& op = Field(doc, "operator", top);
  const json& round = Field(doc, "round", top);
  const json& seed = Field(doc, "seed", top);
  const json& success = Field(doc, "success", top);
  const json& steps = Field(doc, "steps", top);
  if (!task_field.is_string()) Schema("\"task\" must be a string");
  if (!op.is_string()) Schema("\"operator\" must be a string");
  if (!round.is_number_integer()) Schema("\"round\" must be an integer");
  if (!seed.is_number_unsigned()) {
    Schema("\"seed\" must be a non-negative integer");
  }
  if (!success.is_boolean()) Schema("\"success\" must be a boolean");
  if (!steps.is_array()) Schema("\"steps\" must be an array");

  Trajectory traj;
  if (task != nullptr) *task = task_field.get<std::string>();
  traj.operator_id = op.get<std::string>();
  traj.round = round.get<int>();
  traj.seed = seed.get<uint64_t>();
  traj.success = success.get<bool>();
  traj.steps.reserve(steps.size());
  for (size_t i = 0; i < steps.size(); ++i) {
    const std::string where = " in step " + std::to_string(i);
    const json& s = steps[i];
    if (!s.is_object()) Schema("step " + std::to_string(i) + " is not an object");
    const json& t = Field(s, "t", where);
    const json& source = Field(s, "source", where);
    if (!t.is_number_integer()) Schema("\"t\" must be an integer" + where);
    Step step;
    step.t = t.get<int>();
    step.obs = ReadVector<kObsDim>(Field(s, "obs", where), "obs", where);
    step.action =
        ReadVector<kActDim>(Field(s, "action", where), "action", where);
    if (source == "human") {
      step.source = Source::kHuman;
    } else if (source == "policy") {
      step.source = Source::kPolicy;
    } else {
      Schema("\"source\" must be \"policy\" or \"human\"" + where);
    }
    traj.steps.push_back(step);
  }
  return traj;
}

void SaveDataset(const DatasetStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (int i = 0; i < static_cast<int>(store.trajectories().size()); ++i) {
    out << EncodeTrajectoryLine(store.StoredTrajectory(i), store.task())
        << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

DatasetStore LoadDataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::vector<std::pair<std::string, Trajectory>> lines;
  std::string text;
  int line_number = 0;
  while (std::getline(in, text)) {
    ++line_number;
    if (text.empty()) continue;
    std::string task;
    try {
      Trajectory traj = DecodeTrajectoryLine(text, &task);
      lines.emplace_back(std::move(task), std::move(traj));
    } catch (const Error& e) {
      throw Error(ErrorKind::kSchemaViolation,
                  path.string() + " line " + std::to_string(line_number) +
                      ": " + e.detail());
    }
  }
  DatasetStore store(lines.empty() ? std::string(kTaskId) : lines[0].first);
  for (auto& [task, traj] : lines) {
    if (task != store.task()) {
      throw Error(ErrorKind::kTaskMismatch,
                  path.string() + ": mixed task ids \"" + store.task() +
                      "\" and \"" + task + "\"");
    }
    store.Ingest(traj, IngestRule::kSplit);
  }
  return store;
}

}  // namespace iwr
