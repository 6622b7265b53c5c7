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

#ifndef IWR_OPERATOR_H_
#define IWR_OPERATOR_H_

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "iwr/env.h"
#include "iwr/policy.h"

namespace iwr {

struct ExpertConfig {
  double waypoint_tolerance = 0.015;
  double pd_gain = 1.0;
  // only applied by CollectFullDemos
  double demo_noise_std = 0.01;

  void Validate() const;
};

struct GateConfig {
  double deviate_on = 0.08;
  double deviate_off = 0.02;
  double bottleneck_band = 0.10;
  int stall_window = 8;
  double stall_progress_eps = 0.005;

  void Validate() const;
};

enum class Source { kPolicy, kHuman };
std::string_view SourceName(Source source);

struct Step {
  Observation obs;
  Action action;  // the executed (pre-clip) action
  Source source = Source::kPolicy;
  int t = 0;

  bool operator==(const Step&) const = default;
};

struct Trajectory {
  std::vector<Step> steps;
  bool success = false;
  uint64_t seed = 0;
  int round = 0;
  std::string operator_id;

  int CountSource(Source source) const;
};

// Horizontal offset of the pre/post gap waypoints from the wall.
inline constexpr double kGapApproach = 0.05;

// Polyline agent_start -> object_start -> pre-gap -> post-gap -> goal.
struct ExpertRoute {
  std::vector<Vec2> points;

  double DistanceTo(const Vec2& p) const;
};

ExpertRoute MakeRoute(const TaskParams& params);

// Position the expert is currently steering toward.
Vec2 ExpertWaypoint(const EnvState& state, const TaskParams& params,
                    const ExpertConfig& config);

// PD step toward the current waypoint, clipped to max_step per axis; the
// gripper closes exactly when the object is within grasp_radius or held.
Action ExpertAction(const EnvState& state, const TaskParams& params,
                    const ExpertConfig& config);

// Anything that picks an action given the live episode.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual Action Act(const EnvState& state, const TaskParams& params,
                     const Observation& obs) const = 0;
};

class PolicyController : public Controller {
 public:
  explicit PolicyController(PolicyParams params) : params_(std::move(params)) {}
  Action Act(const EnvState&, const TaskParams&,
             const Observation& obs) const override {
    return Forward(params_, obs);
  }
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
};

class ExpertController : public Controller {
 public:
  explicit ExpertController(ExpertConfig config = {}) : config_(config) {}
  Action Act(const EnvState& state, const TaskParams& params,
             const Observation&) const override {
    return ExpertAction(state, params, config_);
  }

 private:
  ExpertConfig config_;
};

// G_H: decides per step whether the operator controls the agent.
class Gate {
 public:
  virtual ~Gate() = default;
  virtual void Reset(const TaskParams& params) = 0;
  // called once per step, before the action is chosen
  virtual bool Update(const EnvState& state, const TaskParams& params) = 0;
};

class ConstantGate : public Gate {
 public:
  explicit ConstantGate(bool on) : on_(on) {}
  void Reset(const TaskParams&) override {}
  bool Update(const EnvState&, const TaskParams&) override { return on_; }

 private:
  bool on_;
};

enum class Bottleneck { kGrasp, kWall, kGoal };

// Synthetic operator's intervention rule. Turns on when the agent strays from
// the expert route inside the wall band, or when it has made no progress over
// the stall window; turns off once the agent is back near the route and the
// bottleneck that triggered the takeover is behind it.
class ThresholdGate : public Gate {
 public:
  explicit ThresholdGate(GateConfig config = {});

  void Reset(const TaskParams& params) override;
  bool Update(const EnvState& state, const TaskParams& params) override;

  bool on() const { return on_; }
  Bottleneck active_bottleneck() const { return active_; }
  const GateConfig& config() const { return config_; }

 private:
  GateConfig config_;
  ExpertRoute route_;
  bool on_ = false;
  Bottleneck active_ = Bottleneck::kGrasp;
  // agent positions since the last reset or transition
  std::deque<Vec2> history_;
};

Bottleneck CurrentBottleneck(const EnvState& state, const TaskParams& params);
bool BottleneckBehind(Bottleneck b, const EnvState& state,
                      const TaskParams& params);

// Rolls out pi(s) = G(s) expert(s) + (1 - G(s)) policy(s) on env reset to
// seed; every step records which controller acted.
Trajectory RunMixtureEpisode(const Controller& policy, Gate& gate, Env& env,
                             uint64_t seed, const ExpertConfig& expert = {},
                             int round = 0,
                             std::string operator_id = "oracle");

// Runs the controller alone until done; returns the final success flag.
bool RunEpisode(const Controller& controller, Env& env, uint64_t seed);

struct DemoResult {
  std::vector<Trajectory> trajectories;
  int attempts = 0;
};

// n successful expert demonstrations with Gaussian action noise (std
// demo_noise_std, added before clipping). Failed attempts are resampled;
// kDemoFailure once at least 10 attempts were made at under 20% success.
DemoResult CollectFullDemos(int n, const TaskConfig& task, uint64_t seed,
                            const ExpertConfig& expert, int round = 0,
                            std::string operator_id = "oracle");

// Seeds for collection episodes live below 2^62; evaluation uses the range
// above (see EvalSeedBase).
uint64_t CollectionSeed(std::initializer_list<uint64_t> key);

}  // namespace iwr

#endif  // IWR_OPERATOR_H_
