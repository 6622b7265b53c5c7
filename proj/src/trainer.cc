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

#include "iwr/trainer.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <vector>

#include "iwr/errors.h"
#include "iwr/random.h"

namespace iwr {

namespace {

constexpr uint64_t kBatchStream = 0x4241544348ULL;  // "BATCH"

void CheckMethodRequirements(const DatasetStore& store, Method method) {
  switch (method) {
    case Method::kIwr:
      if (store.intervention_size() == 0 || store.on_policy_size() == 0) {
        throw Error(ErrorKind::kEmptyBucket,
                    "IWR needs both buckets (|D_I|=" +
                        std::to_string(store.intervention_size()) +
                        ", |D_R|=" + std::to_string(store.on_policy_size()) +
                        ")");
      }
      break;
    case Method::kHGDagger:
    case Method::kDaggerOracle:
      if (store.intervention_size() == 0) {
        throw Error(ErrorKind::kEmptyBucket, std::string(MethodName(method)) +
                                                 " needs a non-empty D_I");
      }
      break;
    case Method::kFullDemos:
    case Method::kIwrNoBalance:
      if (store.total_size() == 0) {
        throw Error(ErrorKind::kEmptyStore, "store is empty");
      }
      break;
  }
}

}  // namespace

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kFullDemos:
      return "FullDemos";
    case Method::kHGDagger:
      return "HGDagger";
    case Method::kIwrNoBalance:
      return "IWR_NB";
    case Method::kIwr:
      return "IWR";
    case Method::kDaggerOracle:
      return "DAggerOracle";
  }
  return "Unknown";
}

std::optional<Method> ParseMethod(std::string_view name) {
  for (Method m : {Method::kFullDemos, Method::kHGDagger, Method::kIwrNoBalance,
                   Method::kIwr, Method::kDaggerOracle}) {
    if (MethodName(m) == name) return m;
  }
  return std::nullopt;
}

void TrainConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidArgument, "train config: " + what);
  };
  if (batch_size < 2 || batch_size % 2 != 0) {
    fail("batch_size must be a positive even number");
  }
  if (checkpoint_every < 1) fail("checkpoint_every must be >= 1");
  if (epochs < checkpoint_every) fail("epochs must be >= checkpoint_every");
  if (steps_per_epoch < 0) fail("steps_per_epoch must be >= 0");
  if (max_steps_per_epoch < 0) fail("max_steps_per_epoch must be >= 0");
  if (hidden1 < 1 || hidden2 < 1) fail("hidden widths must be >= 1");
  if (!(adam.learning_rate > 0)) fail("learning_rate must be positive");
}

size_t SamplesForMethod(const DatasetStore& store, Method method) {
  if (method == Method::kHGDagger || method == Method::kDaggerOracle) {
    return store.intervention_size();
  }
  return store.total_size();
}

Batch SampleForMethod(const DatasetStore& store, Method method, int batch_size,
                      Rng& rng) {
  switch (method) {
    case Method::kIwr:
      return SampleBalanced(store, batch_size, rng);
    case Method::kIwrNoBalance:
    case Method::kFullDemos:
      return SampleUniform(store, batch_size, rng);
    case Method::kHGDagger:
    case Method::kDaggerOracle:
      return SampleBucket(store, Bucket::kIntervention, batch_size, rng);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown method");
}

CheckpointSet Train(const DatasetStore& store, const TrainConfig& config) {
  config.Validate();
  CheckMethodRequirements(store, config.method);
  const auto samples = static_cast<int>(SamplesForMethod(store, config.method));
  int steps = config.steps_per_epoch;
  if (steps == 0) {
    steps = std::max(1, (samples + config.batch_size - 1) / config.batch_size);
    if (config.max_steps_per_epoch > 0) {
      steps = std::min(steps, config.max_steps_per_epoch);
    }
  }

  PolicyParams params = InitParams(config.seed, config.hidden1, config.hidden2);
  OptimizerState opt(params, config.adam);
  Rng rng({kBatchStream, config.seed});
  CheckpointSet out;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int s = 0; s < steps; ++s) {
      Batch batch =
          SampleForMethod(store, config.method, config.batch_size, rng);
      LossAndGrad lg = ComputeLossAndGrad(params, batch.obs, batch.actions);
      AdamStep(&params, &opt, lg.grad);
      loss_sum += lg.loss;
    }
    if (epoch % config.checkpoint_every == 0 || epoch == config.epochs) {
      out.entries.push_back({epoch, params, loss_sum / steps});
    }
  }
  return out;
}

namespace {

// concatenated D_I then D_R rows with alpha on the D_I rows
std::pair<Batch, std::vector<double>> WeightedRows(const DatasetStore& store,
                                                   double alpha) {
  if (store.intervention_size() == 0 || store.on_policy_size() == 0) {
    throw Error(ErrorKind::kEmptyBucket,
                "weighted loss needs both buckets non-empty");
  }
  Batch in = BucketBatch(store, Bucket::kIntervention);
  Batch on = BucketBatch(store, Bucket::kOnPolicy);
  Batch all;
  all.obs.resize(in.size() + on.size(), kObsDim);
  all.actions.resize(in.size() + on.size(), kActDim);
  all.obs << in.obs, on.obs;
  all.actions << in.actions, on.actions;
  std::vector<double> w(in.size(), alpha);
  w.resize(in.size() + on.size(), 1.0);
  return {std::move(all), std::move(w)};
}

}  // namespace

double IwrWeightedLoss(const PolicyParams& params, const DatasetStore& store,
                       double alpha) {
  auto [rows, w] = WeightedRows(store, alpha);
  return ComputeLoss(params, rows.obs, rows.actions, w);
}

LossAndGrad IwrWeightedLossAndGrad(const PolicyParams& params,
                                   const DatasetStore& store, double alpha) {
  auto [rows, w] = WeightedRows(store, alpha);
  return ComputeLossAndGrad(params, rows.obs, rows.actions, w);
}

DatasetStore DaggerRelabel(std::span<const Trajectory> trajectories,
                           const TaskConfig& task, const ExpertConfig& expert) {
  DatasetStore store;
  for (const Trajectory& traj : trajectories) {
    Trajectory relabeled = traj;
    for (Step& step : relabeled.steps) {
      TaskParams params;
      EnvState state = StateFromObservation(step.obs, task, &params);
      step.action = ExpertAction(state, params, expert);
      step.source = Source::kHuman;
    }
    store.Ingest(relabeled, IngestRule::kAllHuman);
  }
  return store;
}

void SaveCheckpointSet(const CheckpointSet& set,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream losses(dir / "losses.csv", std::ios::trunc);
  losses << "epoch,training_loss\n";
  char name[32];
  char line[64];
  for (const Checkpoint& c : set.entries) {
    std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", c.epoch);
    SaveCheckpoint(c.params, dir / name);
    std::snprintf(line, sizeof(line), "%d,%.17g\n", c.epoch, c.training_loss);
    losses << line;
  }
}

}  // namespace iwr
