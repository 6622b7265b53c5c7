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

#ifndef IWR_ENV_H_
#define IWR_ENV_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace iwr {

inline constexpr int kObsDim = 10;
inline constexpr int kActDim = 3;
inline constexpr std::string_view kTaskId = "grasp-thread-2d";

using Vec2 = Eigen::Vector2d;
using Observation = Eigen::Matrix<double, kObsDim, 1>;
using Action = Eigen::Matrix<double, kActDim, 1>;

// Scalar knobs of the task family. Per-episode geometry is drawn from these
// at reset; the sampling ranges themselves are fixed:
//   gap_center_y ~ U[0.3, 0.7]
//   object_start ~ U[0.1, 0.2] x U[0.2, 0.8]
//   agent_start  ~ U[0.05, 0.15] x U[0.1, 0.9]
//   goal_center  = (0.9, gap_center_y)
struct TaskConfig {
  double gap_half_width = 0.04;
  double goal_radius = 0.05;
  double wall_x = 0.5;
  int horizon = 200;
  double max_step = 0.03;
  double grasp_radius = 0.02;

  // throws kInvalidArgument when the geometry is degenerate
  void Validate() const;
};

struct TaskParams {
  double gap_center_y = 0.5;
  double gap_half_width = 0.04;
  Vec2 object_start = Vec2(0.15, 0.5);
  Vec2 agent_start = Vec2(0.1, 0.5);
  Vec2 goal_center = Vec2(0.9, 0.5);
  double goal_radius = 0.05;
  double wall_x = 0.5;
  int horizon = 200;
  double max_step = 0.03;
  double grasp_radius = 0.02;

  bool InGapBand(double y) const {
    return y >= gap_center_y - gap_half_width &&
           y <= gap_center_y + gap_half_width;
  }
};

TaskParams SampleTaskParams(const TaskConfig& config, uint64_t seed);

enum class Phase { kReach, kCarry, kDone };
std::string_view PhaseName(Phase phase);

struct EnvState {
  Vec2 agent_pos = Vec2::Zero();
  bool gripper_closed = false;
  Vec2 object_pos = Vec2::Zero();
  bool attached = false;
  Phase phase = Phase::kReach;
  int t = 0;
  bool success = false;
  bool done = false;

  bool operator==(const EnvState&) const = default;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  bool success = false;
  Phase phase = Phase::kReach;
};

Observation MakeObservation(const EnvState& state, const TaskParams& params);

// Inverse of MakeObservation up to what the observation carries: positions,
// gripper, gap and goal geometry. Attachment is recovered from a closed
// gripper sitting exactly on the object. t, success and done are left at
// their defaults.
EnvState StateFromObservation(const Observation& obs, const TaskConfig& config,
                              TaskParams* params);

// True when the segment from -> to crosses (or runs along) the wall line
// outside the gap band.
bool CrossesWall(const Vec2& from, const Vec2& to, const TaskParams& params);

// 2D grasp-and-thread task: pick up the object, carry it through the gap in
// the wall and into the goal disk. Single-threaded; one instance per rollout.
class Env {
 public:
  explicit Env(TaskConfig config = {});

  Observation Reset(uint64_t seed);

  // Resets to explicit geometry and state; used by tests and relabeling.
  Observation ResetTo(const TaskParams& params, const EnvState& state);

  // Executes one action: displacement is clipped per axis to max_step and
  // moves that would cross the wall outside the gap lose their x component.
  // grip >= 0 closes the gripper. Throws kStepAfterDone once done.
  StepResult Step(const Action& action);

  Observation Observe() const { return MakeObservation(state_, params_); }
  const EnvState& state() const { return state_; }
  const TaskParams& params() const { return params_; }
  const TaskConfig& config() const { return config_; }
  bool done() const { return state_.done; }

 private:
  TaskConfig config_;
  TaskParams params_;
  EnvState state_;
};

enum class PrimitiveKind { kSegment, kDisk, kText };

struct Primitive {
  PrimitiveKind kind;
  std::string role;  // wall, gap, goal, object, agent, phase
  Vec2 a = Vec2::Zero();  // segment start, disk center, text anchor
  Vec2 b = Vec2::Zero();  // segment end
  double radius = 0.0;
  std::string text;
  bool filled = false;

  bool operator==(const Primitive&) const = default;
};

// Drawables in back-to-front order: wall segments, gap marker, goal, object,
// agent, phase label. Pure function of (state, params).
std::vector<Primitive> RenderPrimitives(const EnvState& state,
                                        const TaskParams& params);

}  // namespace iwr

#endif  // IWR_ENV_H_
