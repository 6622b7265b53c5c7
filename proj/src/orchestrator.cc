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

#include "iwr/orchestrator.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "iwr/errors.h"
#include "iwr/random.h"

namespace iwr {

namespace {

constexpr uint64_t kInitialDemoStream = 0x494E4954444DULL;
constexpr uint64_t kExtraDemoStream = 0x4558545241ULL;
constexpr uint64_t kCollectStream = 0x434F4C4CULL;
constexpr uint64_t kDaggerStream = 0x444147ULL;
constexpr uint64_t kTrainStream = 0x545241494EULL;
constexpr uint64_t kEvalBase = uint64_t{1} << 62;

bool IsInterventionMethod(Method m) {
  return m == Method::kHGDagger || m == Method::kIwrNoBalance ||
         m == Method::kIwr;
}

RoundReport ScoreRound(int round, const CheckpointSet& set,
                       const ProtocolConfig& config, uint64_t seed) {
  RoundReport report;
  report.round = round;
  report.checkpoints =
      EvaluateCheckpoints(set, config.task, config.experiment.eval_rollouts,
                          EvalSeedBase(seed));
  report.best_success = BestSuccess(report.checkpoints);
  return report;
}

struct MethodRun {
  std::vector<RoundReport> rounds;
  DatasetStore final_store;
  std::vector<PolicyParams> policies;
};

struct SeedOutput {
  DatasetStore initial;
  RoundReport base;
  PolicyParams base_policy;
  std::vector<MethodRun> methods;  // parallel to config.experiment.methods
};

void Log(const ProgressFn& progress, const std::string& message) {
  if (progress) progress(message);
}

SeedOutput RunSeed(const ProtocolConfig& config, uint64_t seed,
                   const ProgressFn& progress) {
  const ExperimentConfig& exp = config.experiment;
  const std::string tag = "seed " + std::to_string(seed) + ": ";
  SeedOutput out;

  DemoResult demos =
      CollectFullDemos(exp.n_initial_demos, config.task,
                       HashKey({kInitialDemoStream, seed}), config.expert);
  for (const Trajectory& t : demos.trajectories) {
    out.initial.Ingest(t, IngestRule::kAllHuman);
  }
  const int initial_samples = static_cast<int>(out.initial.total_size());
  const int rounds = exp.effective_rounds();
  const int quota =
      exp.single_round_variant
          ? initial_samples
          : static_cast<int>(
                std::ceil(exp.round_quota_fraction * initial_samples));

  TrainConfig tc = config.train;
  tc.method = Method::kFullDemos;
  tc.seed = TrainSeed(seed, 0);
  CheckpointSet base_set = Train(out.initial, tc);
  out.base = ScoreRound(0, base_set, config, seed);
  out.base.intervention_size = out.initial.intervention_size();
  out.base.trajectories = static_cast<int>(demos.trajectories.size());
  out.base_policy = base_set.final().params;
  Log(progress, tag + "base trained on " + std::to_string(initial_samples) +
                    " samples, best success " +
                    std::to_string(out.base.best_success));

  if (rounds == 0) return out;

  // round 1 runs on the shared base policy, so its data is shared too
  RoundCollection round1;
  bool need_round1 =
      rounds >= 1 && std::any_of(exp.methods.begin(), exp.methods.end(),
                                 IsInterventionMethod);
  if (need_round1) {
    ThresholdGate gate(config.gate);
    round1 = CollectRound(PolicyController(out.base_policy), gate, config.task,
                          config.expert, quota,
                          HashKey({kCollectStream, seed, 1}), 1, "oracle",
                          true);
  }

  for (Method method : exp.methods) {
    const std::string name(MethodName(method));
    MethodRun run;
    DatasetStore store = out.initial;
    store.set_method(name);
    tc.method = method;

    if (method == Method::kFullDemos) {
      // matched to the operator-labeled budget of the intervention rounds
      const int target = rounds * quota;
      int added = 0;
      int trajectories = 0;
      for (uint64_t k = 0; added < target; ++k) {
        DemoResult extra =
            CollectFullDemos(1, config.task, HashKey({kExtraDemoStream, seed, k}),
                             config.expert, rounds);
        for (const Trajectory& t : extra.trajectories) {
          store.Ingest(t, IngestRule::kAllHuman);
          added += static_cast<int>(t.steps.size());
          ++trajectories;
        }
      }
      tc.seed = TrainSeed(seed, rounds);
      CheckpointSet set = Train(store, tc);
      RoundReport report = ScoreRound(rounds, set, config, seed);
      report.quota = target;
      report.intervention_samples = added;
      report.trajectories = trajectories;
      report.intervention_size = store.intervention_size();
      report.on_policy_size = store.on_policy_size();
      run.rounds.push_back(std::move(report));
      run.policies.push_back(set.final().params);
      Log(progress, tag + name + " best success " +
                        std::to_string(run.rounds.back().best_success));
    } else {
      PolicyParams policy = out.base_policy;
      for (int r = 1; r <= rounds; ++r) {
        RoundCollection collected;
        const uint64_t key = HashKey({kCollectStream, seed,
                                      static_cast<uint64_t>(r)});
        if (method == Method::kDaggerOracle) {
          // pure on-policy rollouts, every visited state relabeled
          ConstantGate off(false);
          Env env(config.task);
          PolicyController controller(policy);
          int episodes = 0;
          while (collected.human_samples < quota) {
            Trajectory t = RunMixtureEpisode(
                controller, off, env,
                CollectionSeed({kDaggerStream, key,
                                static_cast<uint64_t>(episodes++)}),
                config.expert, r);
            collected.human_samples += static_cast<int>(t.steps.size());
            collected.trajectories.push_back(std::move(t));
          }
          DatasetStore relabeled =
              DaggerRelabel(collected.trajectories, config.task, config.expert);
          std::vector<DatasetStore> parts = {store, relabeled};
          store = Merge(parts);
          store.set_method(name);
        } else {
          if (r == 1) {
            collected = round1;
          } else {
            ThresholdGate gate(config.gate);
            collected =
                CollectRound(PolicyController(policy), gate, config.task,
                             config.expert, quota, key, r, "oracle", true);
          }
          if (collected.exhausted) {
            Log(progress, tag + name + " round " + std::to_string(r) +
                              " stopped at " +
                              std::to_string(collected.human_samples) +
                              " intervention samples");
          }
          // every method keeps both buckets; HGDagger's sampler ignores D_R
          for (const Trajectory& t : collected.trajectories) {
            store.Ingest(t, IngestRule::kSplit);
          }
        }
        tc.seed = TrainSeed(seed, r);
        CheckpointSet set = Train(store, tc);
        RoundReport report = ScoreRound(r, set, config, seed);
        report.quota = quota;
        report.intervention_samples = collected.human_samples;
        report.trajectories = static_cast<int>(collected.trajectories.size());
        report.intervention_size = store.intervention_size();
        report.on_policy_size = store.on_policy_size();
        Log(progress, tag + name + " round " + std::to_string(r) +
                          " best success " +
                          std::to_string(report.best_success) + " (|D_I|=" +
                          std::to_string(report.intervention_size) +
                          ", |D_R|=" + std::to_string(report.on_policy_size) +
                          ")");
        run.rounds.push_back(std::move(report));
        policy = set.final().params;
        run.policies.push_back(policy);
      }
    }
    run.final_store = std::move(store);
    out.methods.push_back(std::move(run));
  }
  return out;
}

// Runs job(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure.
void ParallelFor(int n, int jobs, const std::function<void(int)>& job) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void ExperimentConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidArgument, "experiment config: " + what);
  };
  if (n_initial_demos < 1) fail("n_initial_demos must be >= 1");
  if (rounds < 0) fail("rounds must be >= 0");
  if (!(round_quota_fraction > 0)) fail("round_quota_fraction must be > 0");
  if (eval_rollouts < 1) fail("eval_rollouts must be >= 1");
  if (seeds.empty()) fail("at least one seed is required");
  if (jobs < 1) fail("jobs must be >= 1");
  for (uint64_t s : seeds) {
    if (s >= (uint64_t{1} << 30)) fail("seeds must be below 2^30");
  }
}

void ProtocolConfig::Validate() const {
  task.Validate();
  expert.Validate();
  gate.Validate();
  train.Validate();
  experiment.Validate();
}

uint64_t EvalSeedBase(uint64_t experiment_seed) {
  return kEvalBase + (experiment_seed << 32);
}

uint64_t TrainSeed(uint64_t experiment_seed, int round) {
  return HashKey({kTrainStream, experiment_seed, static_cast<uint64_t>(round)});
}

double Evaluate(const Controller& controller, const TaskConfig& task, int n,
                uint64_t seed_base) {
  if (n < 1) {
    throw Error(ErrorKind::kZeroRollouts,
                "evaluation needs at least one rollout");
  }
  Env env(task);
  int successes = 0;
  for (int i = 0; i < n; ++i) {
    if (RunEpisode(controller, env, seed_base + static_cast<uint64_t>(i))) {
      ++successes;
    }
  }
  return static_cast<double>(successes) / n;
}

std::vector<CheckpointScore> EvaluateCheckpoints(const CheckpointSet& set,
                                                 const TaskConfig& task, int n,
                                                 uint64_t seed_base) {
  std::vector<CheckpointScore> scores;
  for (const Checkpoint& c : set.entries) {
    scores.push_back({c.epoch,
                      Evaluate(PolicyController(c.params), task, n, seed_base),
                      c.training_loss});
  }
  return scores;
}

double BestSuccess(std::span<const CheckpointScore> scores) {
  double best = 0.0;
  for (const auto& s : scores) best = std::max(best, s.success_rate);
  return best;
}

RoundCollection CollectRound(const Controller& policy, Gate& gate,
                             const TaskConfig& task,
                             const ExpertConfig& expert, int quota,
                             uint64_t collection_key, int round,
                             const std::string& operator_id,
                             bool allow_partial) {
  if (quota < 1) {
    throw Error(ErrorKind::kInvalidArgument, "quota must be >= 1");
  }
  Env env(task);
  RoundCollection out;
  const int64_t max_episodes = 10 * static_cast<int64_t>(quota);
  int64_t episodes = 0;
  while (out.human_samples < quota) {
    if (episodes >= max_episodes) {
      if (allow_partial) {
        out.exhausted = true;
        break;
      }
      throw Error(ErrorKind::kQuotaUnreachable,
                  std::to_string(out.human_samples) + " of " +
                      std::to_string(quota) + " intervention samples after " +
                      std::to_string(episodes) + " episodes");
    }
    Trajectory t = RunMixtureEpisode(
        policy, gate, env,
        CollectionSeed({collection_key, static_cast<uint64_t>(episodes)}),
        expert, round, operator_id);
    ++episodes;
    out.human_samples += t.CountSource(Source::kHuman);
    out.trajectories.push_back(std::move(t));
  }
  return out;
}

RoundStats Summarize(int round, std::span<const double> values) {
  RoundStats s;
  s.round = round;
  s.n_seeds = static_cast<int>(values.size());
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<RoundStats> ExperimentReport::Aggregate() const {
  std::vector<RoundStats> out;
  if (seeds.empty()) return out;
  for (size_t r = 0; r < seeds.front().rounds.size(); ++r) {
    std::vector<double> values;
    for (const SeedRun& s : seeds) values.push_back(s.rounds.at(r).best_success);
    out.push_back(Summarize(seeds.front().rounds[r].round, values));
  }
  return out;
}

ExperimentResult RunExperiment(const ProtocolConfig& config,
                               const ProgressFn& progress) {
  config.Validate();
  const ExperimentConfig& exp = config.experiment;
  const int n = static_cast<int>(exp.seeds.size());
  std::vector<SeedOutput> outputs(n);
  std::mutex log_mutex;
  ProgressFn locked = [&](const std::string& m) {
    std::lock_guard<std::mutex> lock(log_mutex);
    if (progress) progress(m);
  };
  ParallelFor(n, exp.jobs,
              [&](int i) { outputs[i] = RunSeed(config, exp.seeds[i], locked); });

  ExperimentResult result;
  result.final_round = exp.effective_rounds();
  result.initial_samples_first_seed =
      static_cast<int>(outputs.front().initial.total_size());
  ExperimentReport base{"Base", {}};
  for (int i = 0; i < n; ++i) {
    base.seeds.push_back({exp.seeds[i], {outputs[i].base}});
    result.initial_demos.push_back(outputs[i].initial);
  }
  result.reports.push_back(std::move(base));
  const size_t methods = result.final_round == 0 ? 0 : exp.methods.size();
  for (size_t m = 0; m < methods; ++m) {
    const std::string name(MethodName(exp.methods[m]));
    ExperimentReport report{name, {}};
    for (int i = 0; i < n; ++i) {
      MethodRun& run = outputs[i].methods[m];
      report.seeds.push_back({exp.seeds[i], run.rounds});
      result.final_stores[name].push_back(std::move(run.final_store));
      result.policies[name].push_back(std::move(run.policies));
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

std::vector<CrossCell> CrossTrain(
    const std::map<std::string, std::vector<DatasetStore>>& final_stores,
    std::span<const Method> trainers, const ProtocolConfig& config,
    const ProgressFn& progress) {
  config.Validate();
  const ExperimentConfig& exp = config.experiment;
  const int final_round = exp.effective_rounds();
  std::vector<CrossCell> cells;
  for (Method trainer : trainers) {
    for (const auto& [collector, stores] : final_stores) {
      if (stores.size() != exp.seeds.size()) {
        throw Error(ErrorKind::kInvalidArgument,
                    "collector " + collector + " has " +
                        std::to_string(stores.size()) + " stores for " +
                        std::to_string(exp.seeds.size()) + " seeds");
      }
      cells.push_back({trainer, collector, {}, {}});
    }
  }
  std::mutex log_mutex;
  ParallelFor(static_cast<int>(cells.size()), exp.jobs, [&](int c) {
    CrossCell& cell = cells[c];
    const auto& stores = final_stores.at(cell.collector);
    cell.per_seed.resize(stores.size());
    for (size_t i = 0; i < stores.size(); ++i) {
      TrainConfig tc = config.train;
      tc.method = cell.trainer;
      tc.seed = TrainSeed(exp.seeds[i], final_round);
      CheckpointSet set = Train(stores[i], tc);
      cell.per_seed[i] = BestSuccess(EvaluateCheckpoints(
          set, config.task, exp.eval_rollouts, EvalSeedBase(exp.seeds[i])));
    }
    cell.stats = Summarize(final_round, cell.per_seed);
    if (progress) {
      std::lock_guard<std::mutex> lock(log_mutex);
      progress(std::string(MethodName(cell.trainer)) + " on " +
               cell.collector + " data: " + std::to_string(cell.stats.mean));
    }
  });
  return cells;
}

}  // namespace iwr
