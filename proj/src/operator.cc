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

#include "iwr/operator.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iwr/errors.h"
#include "iwr/random.h"

namespace iwr {

namespace {

constexpr uint64_t kDemoStream = 0x44454D4FULL;   // "DEMO"
constexpr uint64_t kNoiseStream = 0x4E4F495345ULL;  // "NOISE"
constexpr uint64_t kCollectionMask = (uint64_t{1} << 62) - 1;

double PointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

bool LeftOfWall(double x, const TaskParams& params) {
  return x < params.wall_x;
}

}  // namespace

void ExpertConfig::Validate() const {
  if (!(waypoint_tolerance > 0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "expert.waypoint_tolerance must be positive");
  }
  if (!(pd_gain > 0)) {
    throw Error(ErrorKind::kInvalidArgument, "expert.pd_gain must be positive");
  }
  if (!(demo_noise_std >= 0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "expert.demo_noise_std must be non-negative");
  }
}

void GateConfig::Validate() const {
  if (!(deviate_off > 0 && deviate_off < deviate_on)) {
    throw Error(ErrorKind::kInvalidArgument,
                "gate: need 0 < deviate_off < deviate_on");
  }
  if (stall_window < 1) {
    throw Error(ErrorKind::kInvalidArgument, "gate.stall_window must be >= 1");
  }
  if (!(bottleneck_band > 0) || !(stall_progress_eps >= 0)) {
    throw Error(ErrorKind::kInvalidArgument, "gate: bad band or stall eps");
  }
}

std::string_view SourceName(Source source) {
  return source == Source::kHuman ? "human" : "policy";
}

int Trajectory::CountSource(Source source) const {
  return static_cast<int>(std::count_if(
      steps.begin(), steps.end(),
      [source](const Step& s) { return s.source == source; }));
}

double ExpertRoute::DistanceTo(const Vec2& p) const {
  if (points.size() == 1) return (p - points.front()).norm();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < points.size(); ++i) {
    best = std::min(best, PointSegmentDistance(p, points[i], points[i + 1]));
  }
  return best;
}

ExpertRoute MakeRoute(const TaskParams& params) {
  const double gy = params.gap_center_y;
  return ExpertRoute{{params.agent_start, params.object_start,
                      Vec2(params.wall_x - kGapApproach, gy),
                      Vec2(params.wall_x + kGapApproach, gy),
                      params.goal_center}};
}

Vec2 ExpertWaypoint(const EnvState& state, const TaskParams& params,
                    const ExpertConfig& config) {
  const Vec2& p = state.agent_pos;
  Vec2 target = state.attached ? params.goal_center : state.object_pos;
  bool agent_left = LeftOfWall(p.x(), params);
  if (agent_left == LeftOfWall(target.x(), params)) return target;

  const double gy = params.gap_center_y;
  const Vec2 pre(params.wall_x - kGapApproach, gy);
  const Vec2 post(params.wall_x + kGapApproach, gy);
  const bool centered = std::abs(p.y() - gy) <= 0.5 * params.gap_half_width;
  if (agent_left) {
    bool aligned = p.x() >= pre.x() - config.waypoint_tolerance && centered;
    return aligned ? post : pre;
  }
  bool aligned = p.x() <= post.x() + config.waypoint_tolerance && centered;
  return aligned ? pre : post;
}

Action ExpertAction(const EnvState& state, const TaskParams& params,
                    const ExpertConfig& config) {
  Vec2 delta = config.pd_gain * (ExpertWaypoint(state, params, config) -
                                 state.agent_pos);
  const double m = params.max_step;
  bool close = state.attached || (state.object_pos - state.agent_pos).norm() <=
                                     params.grasp_radius;
  Action a;
  a << std::clamp(delta.x(), -m, m), std::clamp(delta.y(), -m, m),
      close ? 1.0 : -1.0;
  return a;
}

Bottleneck CurrentBottleneck(const EnvState& state, const TaskParams& params) {
  if (!state.attached) return Bottleneck::kGrasp;
  if (state.agent_pos.x() < params.wall_x + kGapApproach) {
    return Bottleneck::kWall;
  }
  return Bottleneck::kGoal;
}

bool BottleneckBehind(Bottleneck b, const EnvState& state,
                      const TaskParams& params) {
  switch (b) {
    case Bottleneck::kGrasp:
      return state.attached;
    case Bottleneck::kWall:
      return state.attached &&
             state.agent_pos.x() >= params.wall_x + kGapApproach;
    case Bottleneck::kGoal:
      return false;
  }
  return false;
}

ThresholdGate::ThresholdGate(GateConfig config) : config_(config) {
  config_.Validate();
}

void ThresholdGate::Reset(const TaskParams& params) {
  route_ = MakeRoute(params);
  on_ = false;
  active_ = Bottleneck::kGrasp;
  history_.clear();
}

bool ThresholdGate::Update(const EnvState& state, const TaskParams& params) {
  const Vec2& p = state.agent_pos;
  history_.push_back(p);
  const size_t window = static_cast<size_t>(config_.stall_window);
  if (history_.size() > window + 1) history_.pop_front();

  const double deviation = route_.DistanceTo(p);
  if (!on_) {
    bool in_band = std::abs(p.x() - params.wall_x) < config_.bottleneck_band;
    bool deviated = deviation > config_.deviate_on && in_band;
    bool stalled = history_.size() == window + 1 &&
                   (p - history_.front()).norm() < config_.stall_progress_eps;
    if (deviated || stalled) {
      on_ = true;
      active_ = CurrentBottleneck(state, params);
      history_.assign(1, p);
    }
  } else if (deviation < config_.deviate_off &&
             BottleneckBehind(active_, state, params)) {
    on_ = false;
    history_.assign(1, p);
  }
  return on_;
}

Trajectory RunMixtureEpisode(const Controller& policy, Gate& gate, Env& env,
                             uint64_t seed, const ExpertConfig& expert,
                             int round, std::string operator_id) {
  Trajectory traj;
  traj.seed = seed;
  traj.round = round;
  traj.operator_id = std::move(operator_id);
  Observation obs = env.Reset(seed);
  gate.Reset(env.params());
  while (!env.done()) {
    const EnvState& state = env.state();
    Step step;
    step.obs = obs;
    step.t = state.t;
    if (gate.Update(state, env.params())) {
      step.source = Source::kHuman;
      step.action = ExpertAction(state, env.params(), expert);
    } else {
      step.source = Source::kPolicy;
      step.action = policy.Act(state, env.params(), obs);
    }
    traj.steps.push_back(step);
    obs = env.Step(step.action).observation;
  }
  traj.success = env.state().success;
  return traj;
}

bool RunEpisode(const Controller& controller, Env& env, uint64_t seed) {
  Observation obs = env.Reset(seed);
  while (!env.done()) {
    obs = env.Step(controller.Act(env.state(), env.params(), obs)).observation;
  }
  return env.state().success;
}

DemoResult CollectFullDemos(int n, const TaskConfig& task, uint64_t seed,
                            const ExpertConfig& expert, int round,
                            std::string operator_id) {
  if (n < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "demo count must be at least 1, got " + std::to_string(n));
  }
  expert.Validate();
  Env env(task);
  DemoResult result;
  int successes = 0;
  while (successes < n) {
    uint64_t episode_seed =
        CollectionSeed({kDemoStream, seed, static_cast<uint64_t>(result.attempts)});
    ++result.attempts;
    Rng noise({kNoiseStream, episode_seed});

    Trajectory traj;
    traj.seed = episode_seed;
    traj.round = round;
    traj.operator_id = operator_id;
    Observation obs = env.Reset(episode_seed);
    while (!env.done()) {
      Step step;
      step.obs = obs;
      step.t = env.state().t;
      step.source = Source::kHuman;
      step.action = ExpertAction(env.state(), env.params(), expert);
      if (expert.demo_noise_std > 0) {
        for (int i = 0; i < kActDim; ++i) {
          step.action(i) += expert.demo_noise_std * noise.Gaussian();
        }
      }
      traj.steps.push_back(step);
      obs = env.Step(step.action).observation;
    }
    traj.success = env.state().success;
    if (traj.success) {
      ++successes;
      result.trajectories.push_back(std::move(traj));
    }
    if (result.attempts >= 10 && successes < 0.2 * result.attempts) {
      throw Error(ErrorKind::kDemoFailure,
                  std::to_string(successes) + " successes in " +
                      std::to_string(result.attempts) + " attempts");
    }
  }
  return result;
}

uint64_t CollectionSeed(std::initializer_list<uint64_t> key) {
  return HashKey(key) & kCollectionMask;
}

}  // namespace iwr
