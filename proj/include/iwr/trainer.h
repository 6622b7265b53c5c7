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

#ifndef IWR_TRAINER_H_
#define IWR_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "iwr/datastore.h"
#include "iwr/operator.h"
#include "iwr/policy.h"

namespace iwr {

enum class Method { kFullDemos, kHGDagger, kIwrNoBalance, kIwr, kDaggerOracle };

// FullDemos, HGDagger, IWR_NB, IWR, DAggerOracle
std::string_view MethodName(Method method);
std::optional<Method> ParseMethod(std::string_view name);

struct TrainConfig {
  Method method = Method::kIwr;
  int epochs = 400;
  int batch_size = 64;
  int checkpoint_every = 10;
  uint64_t seed = 0;
  // 0 selects ceil(samples seen by the method / batch_size)
  int steps_per_epoch = 0;
  // upper bound on the automatic value; 0 leaves it unbounded
  int max_steps_per_epoch = 100;
  int hidden1 = 64;
  int hidden2 = 64;
  AdamConfig adam;

  void Validate() const;
};

struct Checkpoint {
  int epoch = 0;
  PolicyParams params;
  double training_loss = 0.0;  // mean batch loss over that epoch
};

struct CheckpointSet {
  std::vector<Checkpoint> entries;

  const Checkpoint& final() const { return entries.back(); }
};

// Number of stored samples the method trains on: D_I only for HGDagger and
// DAggerOracle, both buckets otherwise.
size_t SamplesForMethod(const DatasetStore& store, Method method);

// One minibatch under the method's sampling rule:
//   IWR                   balanced (B/2 from each bucket)
//   IWR_NB, FullDemos     uniform over both buckets
//   HGDagger, DAggerOracle uniform over D_I
Batch SampleForMethod(const DatasetStore& store, Method method, int batch_size,
                      Rng& rng);

// Behavioral cloning with Adam from a fresh initialization; checkpoints every
// checkpoint_every epochs and at the final epoch. Deterministic in
// (store, config).
CheckpointSet Train(const DatasetStore& store, const TrainConfig& config);

// Full-dataset objective for q(s,a) proportional to alpha*rho_I + rho_R with
// rho_X the empirical (count) measure of bucket X:
//   (alpha * sum_I l + sum_R l) / (alpha |D_I| + |D_R|),  l = |pi(s) - a|^2.
// With alpha = |D_R|/|D_I| this is (L_I + L_R) / 2, the expected balanced
// batch loss.
double IwrWeightedLoss(const PolicyParams& params, const DatasetStore& store,
                       double alpha);
LossAndGrad IwrWeightedLossAndGrad(const PolicyParams& params,
                                   const DatasetStore& store, double alpha);

// Pairs every visited state with the oracle expert's action; the result holds
// all samples in D_I.
DatasetStore DaggerRelabel(std::span<const Trajectory> trajectories,
                           const TaskConfig& task, const ExpertConfig& expert);

// epoch_0010.ckpt, ... plus losses.csv
void SaveCheckpointSet(const CheckpointSet& set,
                       const std::filesystem::path& dir);

}  // namespace iwr

#endif  // IWR_TRAINER_H_
