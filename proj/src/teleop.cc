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

#include "iwr/teleop.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "json.hpp"

#include "iwr/datastore.h"
#include "iwr/errors.h"

namespace iwr {

namespace {

using nlohmann::json;

[[noreturn]] void Malformed(const std::string& msg) {
  throw Error(ErrorKind::kMalformedMessage, msg);
}

const json& Field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) Malformed(std::string("missing field \"") + key + "\"");
  return *it;
}

double Number(const json& j, const char* key) {
  const json& v = Field(j, key);
  if (!v.is_number()) Malformed(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

std::string_view PrimitiveKindName(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::kSegment:
      return "segment";
    case PrimitiveKind::kDisk:
      return "disk";
    case PrimitiveKind::kText:
      return "text";
  }
  return "?";
}

json PrimitiveJson(const Primitive& p) {
  json j = {{"kind", PrimitiveKindName(p.kind)}, {"role", p.role},
            {"a", {p.a.x(), p.a.y()}}};
  switch (p.kind) {
    case PrimitiveKind::kSegment:
      j["b"] = {p.b.x(), p.b.y()};
      break;
    case PrimitiveKind::kDisk:
      j["radius"] = p.radius;
      j["filled"] = p.filled;
      break;
    case PrimitiveKind::kText:
      j["text"] = p.text;
      break;
  }
  return j;
}

}  // namespace

ClientMessage ParseClientMessage(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) Malformed("frame is not valid JSON");
  if (!j.is_object()) Malformed("frame must be a JSON object");
  const json& type = Field(j, "type");
  if (!type.is_string()) Malformed("\"type\" must be a string");
  const std::string name = type.get<std::string>();

  ClientMessage m;
  if (name == "pause") {
    m.type = ClientMessage::Type::kPause;
  } else if (name == "resume") {
    m.type = ClientMessage::Type::kResume;
  } else if (name == "button") {
    m.type = ClientMessage::Type::kButton;
    const json& down = Field(j, "down");
    if (!down.is_boolean()) Malformed("\"down\" must be a boolean");
    m.down = down.get<bool>();
  } else if (name == "action") {
    m.type = ClientMessage::Type::kAction;
    m.action << Number(j, "dx"), Number(j, "dy"), Number(j, "grip");
  } else if (name == "start") {
    m.type = ClientMessage::Type::kStart;
    const json& policy = Field(j, "policy");
    if (!policy.is_string()) Malformed("\"policy\" must be a string");
    m.policy = policy.get<std::string>();
    const json& seed = Field(j, "seed");
    if (!seed.is_number_unsigned() &&
        !(seed.is_number_integer() && seed.get<int64_t>() >= 0)) {
      Malformed("\"seed\" must be a non-negative integer");
    }
    m.seed = seed.get<uint64_t>();
  } else {
    Malformed("unknown message type \"" + name + "\"");
  }
  return m;
}

std::string ErrorFrame(const std::string& kind, const std::string& message) {
  return json{{"type", "error"}, {"kind", kind}, {"message", message}}.dump();
}

PolicyLibrary::PolicyLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {}

PolicyParams PolicyLibrary::Load(const std::string& name) const {
  namespace fs = std::filesystem;
  fs::path rel(name);
  bool escapes = name.empty() || rel.is_absolute();
  for (const auto& part : rel) escapes |= part == "..";
  if (escapes) {
    throw Error(ErrorKind::kUnknownPolicy,
                "policy name \"" + name + "\" is not inside the policy dir");
  }
  fs::path path = dir_ / rel;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(path, ec)) {
      if (e.path().extension() == ".ckpt") found.push_back(e.path());
    }
    if (found.empty()) {
      throw Error(ErrorKind::kUnknownPolicy,
                  "no checkpoints in " + path.string());
    }
    path = *std::max_element(found.begin(), found.end());
  } else if (!fs::is_regular_file(path, ec)) {
    path += ".ckpt";
    if (!fs::is_regular_file(path, ec)) {
      throw Error(ErrorKind::kUnknownPolicy,
                  "no policy \"" + name + "\" in " + dir_.string());
    }
  }
  return LoadCheckpoint(path);
}

TrajectoryWriter::TrajectoryWriter(std::filesystem::path path,
                                   std::string task)
    : path_(std::move(path)), task_(std::move(task)) {}

void TrajectoryWriter::Append(const Trajectory& trajectory) {
  std::string line = EncodeTrajectoryLine(trajectory, task_) + "\n";
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::app);
  out << line;
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "cannot append to " + path_.string());
  ++count_;
}

int TrajectoryWriter::count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return count_;
}

std::string_view RunStateName(RunState state) {
  switch (state) {
    case RunState::kIdle:
      return "idle";
    case RunState::kPaused:
      return "paused";
    case RunState::kRunning:
      return "running";
    case RunState::kDone:
      return "done";
  }
  return "?";
}

Action DefaultClientAction() { return Action(0.0, 0.0, -1.0); }

Session::Session(std::string id, TaskConfig task, const PolicyLibrary* policies,
                 TrajectoryWriter* writer, std::string operator_id)
    : id_(std::move(id)),
      operator_id_(std::move(operator_id)),
      policies_(policies),
      writer_(writer),
      env_(task),
      last_action_(DefaultClientAction()) {}

void Session::StartLocked(PolicyParams policy, uint64_t seed) {
  policy_.emplace(std::move(policy));
  obs_ = env_.Reset(seed);
  run_state_ = RunState::kPaused;
  button_ = false;
  last_intervening_ = false;
  last_action_ = DefaultClientAction();
  recording_ = Trajectory();
  recording_.seed = seed;
  recording_.operator_id = operator_id_;
}

void Session::Start(PolicyParams policy, uint64_t seed) {
  std::lock_guard<std::mutex> lock(mu_);
  StartLocked(std::move(policy), seed);
}

std::vector<std::string> Session::HandleMessage(std::string_view text) {
  std::lock_guard<std::mutex> lock(mu_);
  try {
    ClientMessage m = ParseClientMessage(text);
    switch (m.type) {
      case ClientMessage::Type::kStart: {
        if (policies_ == nullptr) {
          throw Error(ErrorKind::kUnknownPolicy, "no policy directory");
        }
        StartLocked(policies_->Load(m.policy), m.seed);
        return {StateFrameLocked()};
      }
      case ClientMessage::Type::kPause:
        if (run_state_ == RunState::kRunning) run_state_ = RunState::kPaused;
        return {StateFrameLocked()};
      case ClientMessage::Type::kResume:
        if (run_state_ == RunState::kIdle) {
          return {ErrorFrame("InvalidArgument", "no episode started")};
        }
        if (run_state_ == RunState::kPaused) run_state_ = RunState::kRunning;
        return {StateFrameLocked()};
      case ClientMessage::Type::kButton:
        button_ = m.down;
        return {};
      case ClientMessage::Type::kAction:
        last_action_ = m.action;
        return {};
    }
  } catch (const Error& e) {
    return {ErrorFrame(std::string(ErrorKindName(e.kind())), e.detail())};
  }
  return {};
}

Step Session::ArbitrateLocked() {
  Step step;
  step.obs = obs_;
  step.t = env_.state().t;
  if (button_) {
    step.source = Source::kHuman;
    step.action = last_action_;
  } else {
    step.source = Source::kPolicy;
    step.action = policy_->Act(env_.state(), env_.params(), obs_);
  }
  recording_.steps.push_back(step);
  obs_ = env_.Step(step.action).observation;
  last_intervening_ = button_;
  return step;
}

std::optional<std::string> Session::Tick() {
  std::lock_guard<std::mutex> lock(mu_);
  if (run_state_ != RunState::kRunning) return std::nullopt;
  ArbitrateLocked();
  if (env_.done()) {
    run_state_ = RunState::kDone;
    recording_.success = env_.state().success;
    last_recording_ = recording_;
    if (writer_ != nullptr) writer_->Append(recording_);
  }
  return StateFrameLocked();
}

std::string Session::StateFrameLocked() const {
  json primitives = json::array();
  for (const Primitive& p : RenderPrimitives(env_.state(), env_.params())) {
    primitives.push_back(PrimitiveJson(p));
  }
  const EnvState& s = env_.state();
  return json{{"type", "state"},
              {"session", id_},
              {"t", s.t},
              {"primitives", std::move(primitives)},
              {"phase", PhaseName(s.phase)},
              {"intervening", last_intervening_},
              {"paused", run_state_ == RunState::kPaused},
              {"done", s.done},
              {"success", s.success}}
      .dump();
}

std::string Session::StateFrame() const {
  std::lock_guard<std::mutex> lock(mu_);
  return StateFrameLocked();
}

RunState Session::run_state() const {
  std::lock_guard<std::mutex> lock(mu_);
  return run_state_;
}

int Session::t() const {
  std::lock_guard<std::mutex> lock(mu_);
  return env_.state().t;
}

bool Session::button() const {
  std::lock_guard<std::mutex> lock(mu_);
  return button_;
}

Trajectory Session::recording() const {
  std::lock_guard<std::mutex> lock(mu_);
  return recording_;
}

std::optional<Trajectory> Session::last_recording() const {
  std::lock_guard<std::mutex> lock(mu_);
  return last_recording_;
}

// ---------------------------------------------------------------------------
// Server

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct Shared {
  ServeOptions options;
  PolicyLibrary policies;
  TrajectoryWriter writer;
  std::chrono::steady_clock::duration period;
  int next_session = 0;
};

std::string_view MimeType(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, Shared* shared)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        shared_(shared),
        session_("s" + std::to_string(++shared->next_session),
                 shared->options.task, &shared->policies, &shared->writer) {}

  void Start(http::request<http::string_body> request) {
    ws_.text(true);
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->Send(self->session_.StateFrame());
      self->Read();
      self->deadline_ = std::chrono::steady_clock::now();
      self->ScheduleTick();
    });
  }

 private:
  void Read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec,
                                                        size_t) {
      if (ec) {
        self->Close();
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      for (std::string& frame : self->session_.HandleMessage(text)) {
        self->Send(std::move(frame));
      }
      self->Read();
    });
  }

  void ScheduleTick() {
    auto now = std::chrono::steady_clock::now();
    deadline_ += shared_->period;
    if (deadline_ < now) deadline_ = now;
    timer_.expires_at(deadline_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      if (auto frame = self->session_.Tick()) self->Send(std::move(*frame));
      self->ScheduleTick();
    });
  }

  void Send(std::string frame) {
    if (closed_) return;
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) Write();
  }

  void Write() {
    ws_.async_write(net::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, size_t) {
                      if (ec) {
                        self->Close();
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->Write();
                    });
  }

  void Close() {
    closed_ = true;
    queue_.clear();
    timer_.cancel();
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  Shared* shared_;
  Session session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::chrono::steady_clock::time_point deadline_;
  bool closed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, Shared* shared)
      : stream_(std::move(socket)), shared_(shared) {}

  void Start() {
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, size_t) {
                       if (ec) return;
                       if (websocket::is_upgrade(self->request_)) {
                         std::make_shared<WsConnection>(
                             self->stream_.release_socket(), self->shared_)
                             ->Start(std::move(self->request_));
                         return;
                       }
                       self->Respond();
                     });
  }

 private:
  void Respond() {
    auto response = std::make_shared<http::response<http::string_body>>();
    response->version(request_.version());
    response->keep_alive(false);
    std::string target(request_.target());
    target = target.substr(0, target.find('?'));
    if (target.empty() || target.back() == '/') target += "index.html";
    std::filesystem::path rel = std::filesystem::path(target).relative_path();
    bool escapes = false;
    for (const auto& part : rel) escapes |= part == "..";

    std::string body;
    bool found = false;
    if (request_.method() == http::verb::get && !escapes &&
        !shared_->options.static_dir.empty()) {
      std::ifstream in(shared_->options.static_dir / rel, std::ios::binary);
      if (in) {
        std::stringstream ss;
        ss << in.rdbuf();
        body = ss.str();
        found = true;
      }
    }
    if (found) {
      response->result(http::status::ok);
      response->set(http::field::content_type, std::string(MimeType(rel)));
    } else {
      response->result(http::status::not_found);
      response->set(http::field::content_type, "text/plain");
      body = "not found\n";
    }
    response->body() = std::move(body);
    response->prepare_payload();
    http::async_write(stream_, *response,
                      [self = shared_from_this(), response](
                          beast::error_code, size_t) {
                        beast::error_code ignored;
                        self->stream_.socket().shutdown(
                            tcp::socket::shutdown_send, ignored);
                      });
  }

  beast::tcp_stream stream_;
  Shared* shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

}  // namespace

struct TeleopServer::Impl {
  explicit Impl(ServeOptions options)
      : shared{options, PolicyLibrary(options.policy_dir),
               TrajectoryWriter(options.dataset_out),
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   std::chrono::duration<double>(1.0 / options.tick_hz))},
        acceptor(ioc) {}

  void Accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(std::move(socket), &shared)->Start();
      Accept();
    });
  }

  Shared shared;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
};

TeleopServer::TeleopServer(ServeOptions options) {
  if (!(options.tick_hz > 0) || !std::isfinite(options.tick_hz)) {
    throw Error(ErrorKind::kInvalidArgument, "tick rate must be positive");
  }
  options.task.Validate();
  impl_ = std::make_unique<Impl>(std::move(options));
}

TeleopServer::~TeleopServer() = default;

uint16_t TeleopServer::Bind() {
  auto fail = [this](const std::string& what) {
    throw Error(ErrorKind::kBindFailure,
                impl_->shared.options.address + ":" +
                    std::to_string(impl_->shared.options.port) + ": " + what);
  };
  beast::error_code ec;
  auto address = net::ip::make_address(impl_->shared.options.address, ec);
  if (ec) fail(ec.message());
  tcp::endpoint endpoint(address, impl_->shared.options.port);
  tcp::acceptor& a = impl_->acceptor;
  a.open(endpoint.protocol(), ec);
  if (ec) fail(ec.message());
  a.set_option(net::socket_base::reuse_address(true), ec);
  a.bind(endpoint, ec);
  if (ec) fail(ec.message());
  a.listen(net::socket_base::max_listen_connections, ec);
  if (ec) fail(ec.message());
  return a.local_endpoint().port();
}

void TeleopServer::Run() {
  impl_->Accept();
  impl_->ioc.run();
}

void TeleopServer::Stop() { impl_->ioc.stop(); }

const TrajectoryWriter& TeleopServer::writer() const {
  return impl_->shared.writer;
}

}  // namespace iwr
