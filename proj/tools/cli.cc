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

#include "cli.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "iwr/config.h"
#include "iwr/datastore.h"
#include "iwr/orchestrator.h"
#include "iwr/random.h"
#include "iwr/report.h"
#include "iwr/teleop.h"
#include "iwr/trainer.h"

namespace iwr {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
};

void AddCommon(CLI::App* cmd, Common* c, bool out_required) {
  cmd->add_option("-c,--config", c->config_path, "JSON config file");
  cmd->add_option("--set", c->sets, "override, e.g. train.epochs=50")
      ->take_all();
  auto* out = cmd->add_option("-o,--out", c->out_dir, "output directory");
  if (out_required) out->required();
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

// Loads the config and, when an output directory is given, records it there.
ProtocolConfig Resolve(const Common& c) {
  ProtocolConfig config = LoadConfig(c.config_path, c.sets);
  if (!c.out_dir.empty()) {
    fs::create_directories(c.out_dir);
    WriteText(fs::path(c.out_dir) / "config.resolved", DumpConfig(config));
  }
  return config;
}

Method RequireMethod(const std::string& name) {
  auto m = ParseMethod(name);
  if (!m) {
    throw Error(ErrorKind::kConfigInvalid, "unknown method '" + name + "'");
  }
  return *m;
}

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string SeedLog(const ProtocolConfig& config) {
  std::string out = "seed,eval_seed_base";
  const int rounds = config.experiment.effective_rounds();
  for (int r = 0; r <= rounds; ++r) out += ",train_seed_round" + std::to_string(r);
  out += "\n";
  for (uint64_t s : config.experiment.seeds) {
    out += std::to_string(s) + "," + std::to_string(EvalSeedBase(s));
    for (int r = 0; r <= rounds; ++r) out += "," + std::to_string(TrainSeed(s, r));
    out += "\n";
  }
  return out;
}

void WriteExperiment(const ExperimentResult& result,
                     const ProtocolConfig& config, const fs::path& dir) {
  const auto& seeds = config.experiment.seeds;
  WriteText(dir / "reports" / "table.txt",
            FormatTable(result.reports, result.final_round));
  WriteText(dir / "reports" / "results.csv", FormatCsv(result.reports));
  WriteText(dir / "reports" / "details.json", ReportJson(result.reports) + "\n");
  WriteText(dir / "reports" / "seeds.csv", SeedLog(config));
  fs::create_directories(dir / "datasets");
  for (size_t i = 0; i < seeds.size(); ++i) {
    const std::string s = "seed" + std::to_string(seeds[i]);
    SaveDataset(result.initial_demos[i], dir / "datasets" / ("initial_" + s + ".jsonl"));
    for (const auto& [method, stores] : result.final_stores) {
      SaveDataset(stores[i], dir / "datasets" / (method + "_" + s + ".jsonl"));
    }
    for (const auto& [method, per_seed] : result.policies) {
      fs::path pdir = dir / "checkpoints" / method / s;
      fs::create_directories(pdir);
      const auto& rounds = per_seed[i];
      // FullDemos trains once, after the last round's budget
      for (size_t r = 0; r < rounds.size(); ++r) {
        int round = rounds.size() == 1 ? result.final_round
                                       : static_cast<int>(r) + 1;
        SaveCheckpoint(rounds[r],
                       pdir / ("round" + std::to_string(round) + ".ckpt"));
      }
    }
  }
}

int CmdDemos(const Common& c, int n, uint64_t seed, std::string dataset,
             std::ostream& out) {
  ProtocolConfig config = Resolve(c);
  if (n <= 0) n = config.experiment.n_initial_demos;
  DemoResult demos = CollectFullDemos(n, config.task, seed, config.expert);
  DatasetStore store;
  store.set_method("FullDemos");
  for (const Trajectory& t : demos.trajectories) {
    store.Ingest(t, IngestRule::kAllHuman);
  }
  if (dataset.empty()) dataset = (fs::path(c.out_dir) / "datasets" / "demos.jsonl").string();
  fs::path path(dataset);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  SaveDataset(store, path);
  out << "demos " << demos.trajectories.size() << " attempts "
      << demos.attempts << " samples " << store.total_size() << " -> "
      << path.string() << "\n";
  return 0;
}

int CmdTrain(const Common& c, const std::string& dataset,
             const std::string& method_name, std::optional<uint64_t> seed,
             int eval_episodes, std::ostream& out) {
  ProtocolConfig config = Resolve(c);
  TrainConfig tc = config.train;
  if (!method_name.empty()) tc.method = RequireMethod(method_name);
  if (seed) tc.seed = *seed;
  DatasetStore store = LoadDataset(dataset);
  CheckpointSet set = Train(store, tc);
  fs::path dir = fs::path(c.out_dir) / "checkpoints" / std::string(MethodName(tc.method));
  SaveCheckpointSet(set, dir);
  out << MethodName(tc.method) << " trained " << set.entries.size()
      << " checkpoints, final loss " << Fixed(set.final().training_loss, 8)
      << " -> " << dir.string() << "\n";
  if (eval_episodes > 0) {
    auto scores = EvaluateCheckpoints(set, config.task, eval_episodes,
                                      EvalSeedBase(tc.seed));
    for (const auto& s : scores) {
      out << "epoch " << s.epoch << " success " << Fixed(s.success_rate, 4) << "\n";
    }
    out << "best_success " << Fixed(BestSuccess(scores), 4) << "\n";
  }
  return 0;
}

int CmdCollect(const Common& c, const std::string& policy_path, int quota,
               uint64_t seed, int round, std::string dataset,
               std::ostream& out) {
  ProtocolConfig config = Resolve(c);
  PolicyController policy(LoadCheckpoint(policy_path));
  ThresholdGate gate(config.gate);
  RoundCollection collected =
      CollectRound(policy, gate, config.task, config.expert, quota,
                   HashKey({seed, static_cast<uint64_t>(round)}), round);
  DatasetStore store;
  for (const Trajectory& t : collected.trajectories) {
    store.Ingest(t, IngestRule::kSplit);
  }
  if (dataset.empty()) {
    dataset = (fs::path(c.out_dir) / "datasets" /
               ("collect_round" + std::to_string(round) + ".jsonl")).string();
  }
  fs::path path(dataset);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  SaveDataset(store, path);
  out << "collected " << collected.trajectories.size() << " trajectories, "
      << collected.human_samples << " intervention samples, |D_R|="
      << store.on_policy_size() << " -> " << path.string() << "\n";
  return 0;
}

int CmdEval(const Common& c, const std::string& checkpoint, bool expert,
            int episodes, uint64_t seed, std::ostream& out) {
  ProtocolConfig config = Resolve(c);
  if (episodes <= 0) episodes = config.experiment.eval_rollouts;
  double rate;
  if (expert) {
    rate = Evaluate(ExpertController(config.expert), config.task, episodes,
                    EvalSeedBase(seed));
  } else {
    if (checkpoint.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "eval needs --checkpoint or --expert");
    }
    rate = Evaluate(PolicyController(LoadCheckpoint(checkpoint)), config.task,
                    episodes, EvalSeedBase(seed));
  }
  out << Fixed(rate) << "\n";
  return 0;
}

int CmdExperiment(const Common& c, bool quiet, std::ostream& out,
                  std::ostream& err) {
  ProtocolConfig config = Resolve(c);
  ProgressFn progress;
  if (!quiet) progress = [&err](const std::string& m) { err << m << std::endl; };
  ExperimentResult result = RunExperiment(config, progress);
  WriteExperiment(result, config, c.out_dir);
  out << FormatTable(result.reports, result.final_round);
  return 0;
}

int CmdCross(const Common& c, std::string from,
             const std::vector<std::string>& trainer_names,
             const std::vector<std::string>& collectors, bool quiet,
             std::ostream& out, std::ostream& err) {
  if (from.empty()) from = c.out_dir;
  Common resolved = c;
  if (resolved.config_path.empty()) {
    resolved.config_path = (fs::path(from) / "config.resolved").string();
  }
  ProtocolConfig config = Resolve(resolved);
  std::vector<Method> trainers;
  for (const auto& t : trainer_names) trainers.push_back(RequireMethod(t));
  std::map<std::string, std::vector<DatasetStore>> stores;
  for (const auto& name : collectors) {
    RequireMethod(name);
    for (uint64_t s : config.experiment.seeds) {
      stores[name].push_back(LoadDataset(
          fs::path(from) / "datasets" /
          (name + "_seed" + std::to_string(s) + ".jsonl")));
    }
  }
  ProgressFn progress;
  if (!quiet) progress = [&err](const std::string& m) { err << m << std::endl; };
  std::vector<CrossCell> cells = CrossTrain(stores, trainers, config, progress);
  WriteText(fs::path(c.out_dir) / "reports" / "cross.txt", FormatCrossTable(cells));
  WriteText(fs::path(c.out_dir) / "reports" / "cross.csv", FormatCrossCsv(cells));
  out << FormatCrossTable(cells);
  return 0;
}

int CmdServe(const Common& c, const std::string& bind,
             const std::string& static_dir, const std::string& policy_dir,
             const std::string& dataset_out, double tick_hz,
             std::ostream& out) {
  ProtocolConfig config = Resolve(c);
  ServeOptions options;
  size_t colon = bind.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::kInvalidArgument, "--bind must be host:port");
  }
  options.address = bind.substr(0, colon);
  try {
    int port = std::stoi(bind.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    options.port = static_cast<uint16_t>(port);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kInvalidArgument, "bad port in --bind " + bind);
  }
  options.static_dir = static_dir;
  options.policy_dir = policy_dir;
  options.dataset_out = dataset_out;
  options.tick_hz = tick_hz;
  options.task = config.task;
  TeleopServer server(options);
  uint16_t port = server.Bind();
  out << "serving on " << options.address << ":" << port << std::endl;
  server.Run();
  return 0;
}

}  // namespace

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigInvalid:
      return 3;
    case ErrorKind::kIo:
      return 4;
    case ErrorKind::kSchemaViolation:
    case ErrorKind::kCorruptCheckpoint:
    case ErrorKind::kTaskMismatch:
      return 5;
    case ErrorKind::kBindFailure:
      return 6;
    case ErrorKind::kUnknownPolicy:
      return 7;
    default:
      return 1;
  }
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Intervention-weighted imitation learning toolkit"};
  app.require_subcommand(1);

  Common common;

  auto* demos = app.add_subcommand("demos", "collect full expert demonstrations");
  AddCommon(demos, &common, false);
  int demo_n = 0;
  uint64_t demo_seed = 0;
  std::string demo_dataset;
  demos->add_option("-n,--count", demo_n, "demonstrations (default: experiment.n_initial_demos)");
  demos->add_option("--seed", demo_seed, "collection seed");
  demos->add_option("--dataset", demo_dataset, "output file (default: OUT/datasets/demos.jsonl)");

  auto* train = app.add_subcommand("train", "train a policy on a dataset");
  AddCommon(train, &common, true);
  std::string train_dataset, train_method;
  std::optional<uint64_t> train_seed;
  int train_eval = 0;
  train->add_option("--dataset", train_dataset, "JSONL dataset")->required();
  train->add_option("--method", train_method, "FullDemos|HGDagger|IWR_NB|IWR|DAggerOracle");
  train->add_option("--seed", train_seed, "training seed (default: train.seed)");
  train->add_option("--eval", train_eval, "evaluate every checkpoint on this many episodes");

  auto* collect = app.add_subcommand("collect", "collect gated interventions on a policy");
  AddCommon(collect, &common, false);
  std::string collect_policy, collect_dataset;
  int collect_quota = 0, collect_round = 1;
  uint64_t collect_seed = 0;
  collect->add_option("--policy", collect_policy, "checkpoint file")->required();
  collect->add_option("--quota", collect_quota, "intervention samples to collect")->required();
  collect->add_option("--seed", collect_seed, "collection seed");
  collect->add_option("--round", collect_round, "round label stored with the data");
  collect->add_option("--dataset", collect_dataset, "output file");

  auto* eval = app.add_subcommand("eval", "success rate of a checkpoint");
  AddCommon(eval, &common, false);
  std::string eval_checkpoint;
  bool eval_expert = false;
  int eval_episodes = 0;
  uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file");
  eval->add_flag("--expert", eval_expert, "evaluate the scripted expert instead");
  eval->add_option("-n,--episodes", eval_episodes, "episodes (default: experiment.eval_rollouts)");
  eval->add_option("--seed", eval_seed, "evaluation seed set");

  auto* experiment = app.add_subcommand("experiment", "run the full round protocol");
  AddCommon(experiment, &common, true);
  bool quiet = false;
  experiment->add_flag("-q,--quiet", quiet, "no progress output");

  auto* cross = app.add_subcommand("cross", "train methods on each other's final datasets");
  AddCommon(cross, &common, true);
  std::string cross_from;
  std::vector<std::string> cross_trainers = {"HGDagger", "IWR"};
  std::vector<std::string> cross_collectors = {"HGDagger", "IWR"};
  cross->add_option("--from", cross_from, "experiment output directory (default: OUT)");
  cross->add_option("--trainers", cross_trainers, "methods to train")->delimiter(',');
  cross->add_option("--collectors", cross_collectors, "methods whose datasets to use")->delimiter(',');
  cross->add_flag("-q,--quiet", quiet, "no progress output");

  auto* serve = app.add_subcommand("serve", "teleoperation server");
  AddCommon(serve, &common, false);
  std::string serve_bind = "127.0.0.1:8080", serve_static, serve_policies,
              serve_dataset = "teleop.jsonl";
  double tick_hz = 20.0;
  serve->add_option("--bind", serve_bind, "host:port");
  serve->add_option("--static", serve_static, "directory with the browser client");
  serve->add_option("--policy-dir", serve_policies, "checkpoint directory")->required();
  serve->add_option("--dataset-out", serve_dataset, "JSONL file recorded episodes are appended to");
  serve->add_option("--tick-hz", tick_hz, "environment ticks per second");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*demos) return CmdDemos(common, demo_n, demo_seed, demo_dataset, out);
    if (*train) {
      return CmdTrain(common, train_dataset, train_method, train_seed,
                      train_eval, out);
    }
    if (*collect) {
      return CmdCollect(common, collect_policy, collect_quota, collect_seed,
                        collect_round, collect_dataset, out);
    }
    if (*eval) {
      return CmdEval(common, eval_checkpoint, eval_expert, eval_episodes,
                     eval_seed, out);
    }
    if (*experiment) return CmdExperiment(common, quiet, out, err);
    if (*cross) {
      return CmdCross(common, cross_from, cross_trainers, cross_collectors,
                      quiet, out, err);
    }
    if (*serve) {
      return CmdServe(common, serve_bind, serve_static, serve_policies,
                      serve_dataset, tick_hz, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: Io: " << e.what() << "\n";
    return ExitCodeFor(ErrorKind::kIo);
  }
  return 1;
}

}  // namespace iwr
