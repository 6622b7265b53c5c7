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

#include "iwr/env.h"

#include <algorithm>
#include <cmath>

#include "iwr/errors.h"
#include "iwr/random.h"

namespace iwr {

namespace {

constexpr uint64_t kResetStream = 0x5245534554ULL;  // "RESET"
constexpr double kGoalX = 0.9;

double Finite(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace

void TaskConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidArgument, "task config: " + what);
  };
  if (!(gap_half_width > 0) || !(goal_radius > 0) || !(max_step > 0) ||
      !(grasp_radius > 0)) {
    fail("all lengths must be positive");
  }
  if (horizon < 1) fail("horizon must be at least 1");
  if (!(wall_x > 0.2 && wall_x < 1.0)) {
    fail("wall_x must lie right of the object range and inside the workspace");
  }
  // gap centers range over [0.3, 0.7]
  if (!(0.3 - gap_half_width > 0.0 && 0.7 + gap_half_width < 1.0)) {
    fail("gap band must lie strictly inside the workspace");
  }
  if (!(kGoalX - goal_radius > wall_x) || !(kGoalX + goal_radius <= 1.0)) {
    fail("goal disk must lie between the wall and the workspace edge");
  }
}

TaskParams SampleTaskParams(const TaskConfig& config, uint64_t seed) {
  Rng rng({kResetStream, seed});
  TaskParams p;
  p.gap_center_y = rng.Uniform(0.3, 0.7);
  p.gap_half_width = config.gap_half_width;
  double ox = rng.Uniform(0.1, 0.2);
  double oy = rng.Uniform(0.2, 0.8);
  p.object_start = Vec2(ox, oy);
  double ax = rng.Uniform(0.05, 0.15);
  double ay = rng.Uniform(0.1, 0.9);
  p.agent_start = Vec2(ax, ay);
  p.goal_center = Vec2(kGoalX, p.gap_center_y);
  p.goal_radius = config.goal_radius;
  p.wall_x = config.wall_x;
  p.horizon = config.horizon;
  p.max_step = config.max_step;
  p.grasp_radius = config.grasp_radius;
  return p;
}

std::string_view PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kReach:
      return "Reach";
    case Phase::kCarry:
      return "Carry";
    case Phase::kDone:
      return "Done";
  }
  return "Unknown";
}

Observation MakeObservation(const EnvState& state, const TaskParams& params) {
  Observation obs;
  Vec2 to_object = state.object_pos - state.agent_pos;
  Vec2 to_goal = params.goal_center - state.agent_pos;
  obs << state.agent_pos.x(), state.agent_pos.y(),
      state.gripper_closed ? 1.0 : 0.0, state.object_pos.x(),
      state.object_pos.y(), to_object.x(), to_object.y(), params.gap_center_y,
      to_goal.x(), to_goal.y();
  return obs;
}

EnvState StateFromObservation(const Observation& obs, const TaskConfig& config,
                              TaskParams* params) {
  EnvState state;
  state.agent_pos = Vec2(obs(0), obs(1));
  state.gripper_closed = obs(2) > 0.5;
  state.object_pos = Vec2(obs(3), obs(4));
  state.attached = state.gripper_closed && obs(5) == 0.0 && obs(6) == 0.0;
  state.phase = state.attached ? Phase::kCarry : Phase::kReach;
  TaskParams p;
  p.gap_center_y = obs(7);
  p.gap_half_width = config.gap_half_width;
  p.goal_center = state.agent_pos + Vec2(obs(8), obs(9));
  p.goal_radius = config.goal_radius;
  p.wall_x = config.wall_x;
  p.horizon = config.horizon;
  p.max_step = config.max_step;
  p.grasp_radius = config.grasp_radius;
  // starts are not observed; the route only needs them for the first leg
  p.agent_start = state.agent_pos;
  p.object_start = state.object_pos;
  if (params != nullptr) *params = p;
  return state;
}

bool CrossesWall(const Vec2& from, const Vec2& to, const TaskParams& params) {
  const double wx = params.wall_x;
  if (from.x() == to.x()) {
    // sliding along the wall line is only legal inside the band
    return from.x() == wx &&
           !(params.InGapBand(from.y()) && params.InGapBand(to.y()));
  }
  double s0 = from.x() - wx;
  double s1 = to.x() - wx;
  if ((s0 > 0 && s1 > 0) || (s0 < 0 && s1 < 0)) return false;
  double s = (wx - from.x()) / (to.x() - from.x());
  double y = from.y() + s * (to.y() - from.y());
  return !params.InGapBand(y);
}

Env::Env(TaskConfig config) : config_(config) {
  config_.Validate();
  Reset(0);
}

Observation Env::Reset(uint64_t seed) {
  params_ = SampleTaskParams(config_, seed);
  state_ = EnvState{};
  state_.agent_pos = params_.agent_start;
  state_.object_pos = params_.object_start;
  return Observe();
}

Observation Env::ResetTo(const TaskParams& params, const EnvState& state) {
  params_ = params;
  state_ = state;
  return Observe();
}

StepResult Env::Step(const Action& action) {
  if (state_.done) {
    throw Error(ErrorKind::kStepAfterDone,
                "step called on a finished episode (t=" +
                    std::to_string(state_.t) + ")");
  }
  const double m = params_.max_step;
  Vec2 delta(std::clamp(Finite(action(0)), -m, m),
             std::clamp(Finite(action(1)), -m, m));
  Vec2 from = state_.agent_pos;
  Vec2 to = (from + delta).cwiseMax(0.0).cwiseMin(1.0);
  if (CrossesWall(from, to, params_)) {
    // blocked: keep the motion along the wall
    to.x() = from.x();
    if (CrossesWall(from, to, params_)) to = from;
  }
  state_.agent_pos = to;

  state_.gripper_closed = Finite(action(2)) >= 0.0;
  if (state_.attached && !state_.gripper_closed) {
    state_.attached = false;
    state_.phase = Phase::kReach;
  } else if (!state_.attached && state_.gripper_closed &&
             (state_.object_pos - state_.agent_pos).norm() <=
                 params_.grasp_radius) {
    state_.attached = true;
    state_.phase = Phase::kCarry;
  }
  if (state_.attached) state_.object_pos = state_.agent_pos;

  state_.t += 1;
  StepResult result;
  if (state_.attached && (state_.object_pos - params_.goal_center).norm() <=
                             params_.goal_radius) {
    state_.success = true;
    result.reward = 1.0;
  }
  if (state_.success || state_.t >= params_.horizon) {
    state_.done = true;
    state_.phase = Phase::kDone;
  }
  result.observation = Observe();
  result.done = state_.done;
  result.success = state_.success;
  result.phase = state_.phase;
  return result;
}

std::vector<Primitive> RenderPrimitives(const EnvState& state,
                                        const TaskParams& params) {
  std::vector<Primitive> out;
  const double wx = params.wall_x;
  const double lo = params.gap_center_y - params.gap_half_width;
  const double hi = params.gap_center_y + params.gap_half_width;
  out.push_back({PrimitiveKind::kSegment, "wall", Vec2(wx, 0.0), Vec2(wx, lo),
                 0.0, "", false});
  out.push_back({PrimitiveKind::kSegment, "wall", Vec2(wx, hi), Vec2(wx, 1.0),
                 0.0, "", false});
  out.push_back({PrimitiveKind::kSegment, "gap", Vec2(wx, lo), Vec2(wx, hi),
                 0.0, "", false});
  out.push_back({PrimitiveKind::kDisk, "goal", params.goal_center, Vec2::Zero(),
                 params.goal_radius, "", false});
  out.push_back({PrimitiveKind::kDisk, "object", state.object_pos, Vec2::Zero(),
                 params.grasp_radius * 0.75, "", true});
  out.push_back({PrimitiveKind::kDisk, "agent", state.agent_pos, Vec2::Zero(),
                 params.grasp_radius, "", state.gripper_closed});
  out.push_back({PrimitiveKind::kText, "phase", Vec2(0.02, 0.97), Vec2::Zero(),
                 0.0, std::string(PhaseName(state.phase)), false});
  return out;
}

}  // namespace iwr
