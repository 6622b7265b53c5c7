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

#ifndef IWR_DATASTORE_H_
#define IWR_DATASTORE_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iwr/env.h"
#include "iwr/operator.h"
#include "iwr/policy.h"
#include "iwr/random.h"

namespace iwr {

// How a trajectory's steps are routed into the two buckets.
enum class IngestRule {
  kSplit,          // human -> intervention, policy -> on-policy
  kAllHuman,       // everything -> intervention (full demos, relabeled data)
  kDiscardPolicy,  // human -> intervention, policy steps dropped
};

enum class Bucket { kIntervention, kOnPolicy };

struct StoredStep {
  Observation obs;
  Action action;
  int t = 0;
  int trajectory = 0;  // index into DatasetStore::trajectories()

  bool operator==(const StoredStep&) const = default;
};

struct TrajectoryInfo {
  std::string operator_id;
  int round = 0;
  uint64_t seed = 0;
  bool success = false;

  bool operator==(const TrajectoryInfo&) const = default;
};

struct SampleRef {
  Bucket bucket;
  int index;
};

struct Batch {
  RowMatrix obs;
  RowMatrix actions;
  std::vector<Source> sources;
  std::vector<SampleRef> refs;

  int size() const { return static_cast<int>(obs.rows()); }
};

// Two append-only buckets: D_I holds operator-labeled samples, D_R the
// samples the learned policy executed itself. Every step keeps its
// provenance (trajectory, round, operator).
class DatasetStore {
 public:
  explicit DatasetStore(std::string task = std::string(kTaskId));

  void Ingest(const Trajectory& trajectory, IngestRule rule);

  const std::vector<StoredStep>& bucket(Bucket b) const {
    return b == Bucket::kIntervention ? intervention_ : on_policy_;
  }
  const std::vector<StoredStep>& intervention() const { return intervention_; }
  const std::vector<StoredStep>& on_policy() const { return on_policy_; }
  size_t intervention_size() const { return intervention_.size(); }
  size_t on_policy_size() const { return on_policy_.size(); }
  size_t total_size() const { return intervention_.size() + on_policy_.size(); }

  const std::vector<TrajectoryInfo>& trajectories() const {
    return trajectories_;
  }
  // stored steps of trajectory i in time order, as bucket references
  const std::vector<SampleRef>& trajectory_steps(int i) const {
    return trajectory_steps_[i];
  }
  // trajectory i as stored, with each step's source set by its bucket
  Trajectory StoredTrajectory(int i) const;

  const std::string& task() const { return task_; }
  const std::string& method() const { return method_; }
  void set_method(std::string method) { method_ = std::move(method); }
  int round_count() const;
  std::vector<std::string> operator_ids() const;

  bool SameContents(const DatasetStore& other) const;

 private:
  std::string task_;
  std::string method_;
  std::vector<StoredStep> intervention_;
  std::vector<StoredStep> on_policy_;
  std::vector<TrajectoryInfo> trajectories_;
  std::vector<std::vector<SampleRef>> trajectory_steps_;
};

// |D_R| / |D_I|; kEmptyInterventionBucket when D_I is empty.
double Alpha(const DatasetStore& store);

// B/2 rows uniformly with replacement from each bucket, then shuffled.
Batch SampleBalanced(const DatasetStore& store, int batch_size, Rng& rng);

// B rows uniformly with replacement over D_I followed by D_R.
Batch SampleUniform(const DatasetStore& store, int batch_size, Rng& rng);

// B rows uniformly with replacement from a single bucket.
Batch SampleBucket(const DatasetStore& store, Bucket bucket, int batch_size,
                   Rng& rng);

// every row of a bucket, in storage order
Batch BucketBatch(const DatasetStore& store, Bucket bucket);

// Bucket-wise concatenation in argument order. Stores without trajectories
// are compatible with any task id.
DatasetStore Merge(std::span<const DatasetStore> stores);

// JSON Lines, one trajectory per line:
//   {"task","operator","round","seed","success",
//    "steps":[{"t","obs":[10],"action":[3],"source":"policy"|"human"}]}
// A step's "source" names its bucket, so loading re-splits exactly.
void SaveDataset(const DatasetStore& store, const std::filesystem::path& path);
DatasetStore LoadDataset(const std::filesystem::path& path);

std::string EncodeTrajectoryLine(const Trajectory& trajectory,
                                 std::string_view task);
// throws kSchemaViolation describing the offending field
Trajectory DecodeTrajectoryLine(std::string_view line, std::string* task);

}  // namespace iwr

#endif  // IWR_DATASTORE_H_
