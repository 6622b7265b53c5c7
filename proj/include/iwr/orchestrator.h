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

#ifndef IWR_ORCHESTRATOR_H_
#define IWR_ORCHESTRATOR_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "iwr/datastore.h"
#include "iwr/env.h"
#include "iwr/operator.h"
#include "iwr/policy.h"
#include "iwr/trainer.h"

namespace iwr {

struct ExperimentConfig {
  int n_initial_demos = 30;
  int rounds = 3;
  // per-round quota of operator-labeled samples, as a fraction of the
  // initial dataset's sample count
  double round_quota_fraction = 0.33;
  // one round whose quota equals the initial sample count
  bool single_round_variant = false;
  int eval_rollouts = 50;
  std::vector<uint64_t> seeds = {0, 1, 2};
  std::vector<Method> methods = {Method::kFullDemos, Method::kHGDagger,
                                 Method::kIwrNoBalance, Method::kIwr};
  // seed jobs run concurrently; results do not depend on it
  int jobs = 1;

  void Validate() const;
  int effective_rounds() const { return single_round_variant ? 1 : rounds; }
};

// Everything a protocol run depends on.
struct ProtocolConfig {
  TaskConfig task;
  ExpertConfig expert;
  GateConfig gate;
  TrainConfig train;  // method and seed are set per run
  ExperimentConfig experiment;

  void Validate() const;
};

// Evaluation episodes use seeds at or above 2^62; collection seeds stay
// below (CollectionSeed), so no evaluation episode is ever a training one.
uint64_t EvalSeedBase(uint64_t experiment_seed);

// Seed of the training run that produces round `round`'s policy.
uint64_t TrainSeed(uint64_t experiment_seed, int round);

// Fraction of n pure-controller episodes (seeds seed_base .. seed_base+n-1)
// that succeed. kZeroRollouts when n < 1.
double Evaluate(const Controller& controller, const TaskConfig& task, int n,
                uint64_t seed_base);

struct CheckpointScore {
  int epoch = 0;
  double success_rate = 0.0;
  double training_loss = 0.0;
};

std::vector<CheckpointScore> EvaluateCheckpoints(const CheckpointSet& set,
                                                 const TaskConfig& task, int n,
                                                 uint64_t seed_base);

double BestSuccess(std::span<const CheckpointScore> scores);

struct RoundCollection {
  std::vector<Trajectory> trajectories;
  int human_samples = 0;
  bool exhausted = false;  // episode budget ran out before the quota
};

// Mixture episodes (seeds derived from collection_key) until the cumulative
// count of operator-labeled steps reaches quota. Trajectories without any
// intervention are kept. After 10 * quota episodes this throws
// kQuotaUnreachable, or with allow_partial returns what was gathered and sets
// exhausted.
RoundCollection CollectRound(const Controller& policy, Gate& gate,
                             const TaskConfig& task,
                             const ExpertConfig& expert, int quota,
                             uint64_t collection_key, int round,
                             const std::string& operator_id = "oracle",
                             bool allow_partial = false);

struct RoundReport {
  int round = 0;  // 0 is the base policy
  int quota = 0;
  int intervention_samples = 0;
  int trajectories = 0;
  std::vector<CheckpointScore> checkpoints;
  double best_success = 0.0;
  size_t intervention_size = 0;
  size_t on_policy_size = 0;
};

struct SeedRun {
  uint64_t seed = 0;
  std::vector<RoundReport> rounds;
};

struct RoundStats {
  int round = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  int n_seeds = 0;
};

// One method's results across seeds. "Base" is reported like a method with
// a single round 0.
struct ExperimentReport {
  std::string method;
  std::vector<SeedRun> seeds;

  std::vector<RoundStats> Aggregate() const;
};

RoundStats Summarize(int round, std::span<const double> values);

struct ExperimentResult {
  std::vector<ExperimentReport> reports;  // Base first, then cfg methods
  int final_round = 0;
  int initial_samples_first_seed = 0;
  // method name -> per-seed final aggregated store (seed order as in config)
  std::map<std::string, std::vector<DatasetStore>> final_stores;
  // method name -> per-seed, per-round policy handed to the next round
  std::map<std::string, std::vector<std::vector<PolicyParams>>> policies;
  std::vector<DatasetStore> initial_demos;  // per seed
};

using ProgressFn = std::function<void(const std::string&)>;

// Full protocol per seed: initial demos -> base policy -> rounds of
// (collect to quota -> aggregate -> retrain -> evaluate checkpoints) for each
// intervention method, plus the sample-matched full-demonstration baseline.
ExperimentResult RunExperiment(const ProtocolConfig& config,
                               const ProgressFn& progress = {});

struct CrossCell {
  Method trainer;
  std::string collector;
  std::vector<double> per_seed;
  RoundStats stats;
};

// Trains every method in `trainers` on every collector's final datasets with
// the final-round training seed and evaluates with the experiment's eval
// seeds, so diagonal cells repeat the experiment's final numbers.
std::vector<CrossCell> CrossTrain(
    const std::map<std::string, std::vector<DatasetStore>>& final_stores,
    std::span<const Method> trainers, const ProtocolConfig& config,
    const ProgressFn& progress = {});

}  // namespace iwr

#endif  // IWR_ORCHESTRATOR_H_
