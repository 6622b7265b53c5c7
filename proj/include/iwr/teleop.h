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

#ifndef IWR_TELEOP_H_
#define IWR_TELEOP_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iwr/env.h"
#include "iwr/operator.h"
#include "iwr/policy.h"

namespace iwr {

// Client -> server frame. Unknown types, missing or mistyped fields and
// non-JSON text raise kMalformedMessage.
struct ClientMessage {
  enum class Type { kStart, kPause, kResume, kButton, kAction };
  Type type = Type::kPause;
  std::string policy;        // kStart
  uint64_t seed = 0;         // kStart
  bool down = false;         // kButton
  Action action = Action::Zero();  // kAction
};

ClientMessage ParseClientMessage(std::string_view text);

// {"type":"error","kind":...,"message":...}
std::string ErrorFrame(const std::string& kind, const std::string& message);

// Resolves policy names against a checkpoint directory. A name may be a
// checkpoint file (with or without ".ckpt") or a directory, in which case the
// last checkpoint in it by file name is used. Names that leave the directory
// or do not resolve raise kUnknownPolicy.
class PolicyLibrary {
 public:
  explicit PolicyLibrary(std::filesystem::path dir);

  PolicyParams Load(const std::string& name) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

// Append-only JSONL trajectory sink shared by all sessions.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::filesystem::path path,
                            std::string task = std::string(kTaskId));

  void Append(const Trajectory& trajectory);
  int count() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  mutable std::mutex mu_;
  std::filesystem::path path_;
  std::string task_;
  int count_ = 0;
};

enum class RunState { kIdle, kPaused, kRunning, kDone };
std::string_view RunStateName(RunState state);

// One operator's episode. Messages and ticks may arrive from different
// threads; all state is guarded by one mutex.
class Session {
 public:
  // writer may be null, in which case finished episodes are only kept in
  // last_recording().
  Session(std::string id, TaskConfig task, const PolicyLibrary* policies,
          TrajectoryWriter* writer, std::string operator_id = "human");

  // Applies one client frame and returns the frames to send back: the new
  // state after start/pause/resume, or an error frame. Errors never end the
  // session.
  std::vector<std::string> HandleMessage(std::string_view text);

  // Advances one step when Running and returns the state frame.
  std::optional<std::string> Tick();

  // Starts an episode directly with already loaded parameters.
  void Start(PolicyParams policy, uint64_t seed);

  std::string StateFrame() const;
  RunState run_state() const;
  int t() const;
  bool button() const;
  Trajectory recording() const;
  std::optional<Trajectory> last_recording() const;
  const std::string& id() const { return id_; }

 private:
  Step ArbitrateLocked();
  std::string StateFrameLocked() const;
  void StartLocked(PolicyParams policy, uint64_t seed);

  mutable std::mutex mu_;
  std::string id_;
  std::string operator_id_;
  const PolicyLibrary* policies_;
  TrajectoryWriter* writer_;
  Env env_;
  std::optional<PolicyController> policy_;
  RunState run_state_ = RunState::kIdle;
  bool button_ = false;
  bool last_intervening_ = false;
  Action last_action_;
  Observation obs_ = Observation::Zero();
  Trajectory recording_;
  std::optional<Trajectory> last_recording_;
};

// Default client action: no displacement, gripper open.
Action DefaultClientAction();

struct ServeOptions {
  std::string address = "127.0.0.1";
  uint16_t port = 8080;  // 0 picks a free port
  std::filesystem::path static_dir;
  std::filesystem::path policy_dir;
  std::filesystem::path dataset_out;
  double tick_hz = 20.0;
  TaskConfig task;
};

// HTTP server for the static client plus WebSocket sessions on any path.
class TeleopServer {
 public:
  explicit TeleopServer(ServeOptions options);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  // Binds and listens; kBindFailure on error. Returns the bound port.
  uint16_t Bind();
  // Serves until Stop(); call Bind() first.
  void Run();
  // Safe from any thread.
  void Stop();

  const TrajectoryWriter& writer() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace iwr

#endif  // IWR_TELEOP_H_
