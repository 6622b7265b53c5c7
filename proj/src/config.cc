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

#include "iwr/config.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "iwr/errors.h"

namespace iwr {

namespace {

using nlohmann::json;

[[noreturn]] void Invalid(const std::string& msg) {
  throw Error(ErrorKind::kConfigInvalid, msg);
}

json ToJson(const ProtocolConfig& c) {
  json methods = json::array();
  for (Method m : c.experiment.methods) methods.push_back(MethodName(m));
  return {
      {"task",
       {{"gap_half_width", c.task.gap_half_width},
        {"goal_radius", c.task.goal_radius},
        {"wall_x", c.task.wall_x},
        {"horizon", c.task.horizon},
        {"max_step", c.task.max_step},
        {"grasp_radius", c.task.grasp_radius}}},
      {"expert",
       {{"waypoint_tolerance", c.expert.waypoint_tolerance},
        {"pd_gain", c.expert.pd_gain},
        {"demo_noise_std", c.expert.demo_noise_std}}},
      {"gate",
       {{"deviate_on", c.gate.deviate_on},
        {"deviate_off", c.gate.deviate_off},
        {"bottleneck_band", c.gate.bottleneck_band},
        {"stall_window", c.gate.stall_window},
        {"stall_progress_eps", c.gate.stall_progress_eps}}},
      {"train",
       {{"method", MethodName(c.train.method)},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"checkpoint_every", c.train.checkpoint_every},
        {"seed", c.train.seed},
        {"steps_per_epoch", c.train.steps_per_epoch},
        {"max_steps_per_epoch", c.train.max_steps_per_epoch},
        {"hidden1", c.train.hidden1},
        {"hidden2", c.train.hidden2},
        {"learning_rate", c.train.adam.learning_rate},
        {"beta1", c.train.adam.beta1},
        {"beta2", c.train.adam.beta2},
        {"epsilon", c.train.adam.epsilon}}},
      {"experiment",
       {{"n_initial_demos", c.experiment.n_initial_demos},
        {"rounds", c.experiment.rounds},
        {"round_quota_fraction", c.experiment.round_quota_fraction},
        {"single_round_variant", c.experiment.single_round_variant},
        {"eval_rollouts", c.experiment.eval_rollouts},
        {"seeds", c.experiment.seeds},
        {"methods", methods},
        {"jobs", c.experiment.jobs}}},
  };
}

// Rejects keys absent from the default tree and values whose JSON kind
// differs from the default's. Integers are accepted where floats are expected.
void CheckShape(const json& doc, const json& reference,
                const std::string& prefix) {
  if (!doc.is_object()) {
    Invalid(prefix.empty() ? "config must be a JSON object"
                           : "config key '" + prefix + "' must be an object");
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    auto ref = reference.find(it.key());
    if (ref == reference.end()) Invalid("unknown config key '" + path + "'");
    const json& v = it.value();
    bool ok = false;
    if (ref->is_object()) {
      CheckShape(v, *ref, path);
      ok = true;
    } else if (ref->is_boolean()) {
      ok = v.is_boolean();
    } else if (ref->is_number_float()) {
      ok = v.is_number();
    } else if (ref->is_number_unsigned()) {
      ok = v.is_number_unsigned() ||
           (v.is_number_integer() && v.get<int64_t>() >= 0);
    } else if (ref->is_number_integer()) {
      ok = v.is_number_integer();
    } else if (ref->is_string()) {
      ok = v.is_string();
    } else if (ref->is_array()) {
      ok = v.is_array();
    }
    if (!ok) {
      Invalid("config key '" + path + "' has the wrong type (" +
              std::string(v.type_name()) + ")");
    }
  }
}

Method MethodFrom(const json& v, const std::string& path) {
  if (!v.is_string()) Invalid("config key '" + path + "' must be a string");
  auto m = ParseMethod(v.get<std::string>());
  if (!m) {
    Invalid("config key '" + path + "' names unknown method '" +
            v.get<std::string>() + "'");
  }
  return *m;
}

ProtocolConfig FromJson(const json& j) {
  ProtocolConfig c;
  const json& task = j.at("task");
  c.task.gap_half_width = task.at("gap_half_width").get<double>();
  c.task.goal_radius = task.at("goal_radius").get<double>();
  c.task.wall_x = task.at("wall_x").get<double>();
  c.task.horizon = task.at("horizon").get<int>();
  c.task.max_step = task.at("max_step").get<double>();
  c.task.grasp_radius = task.at("grasp_radius").get<double>();

  const json& expert = j.at("expert");
  c.expert.waypoint_tolerance = expert.at("waypoint_tolerance").get<double>();
  c.expert.pd_gain = expert.at("pd_gain").get<double>();
  c.expert.demo_noise_std = expert.at("demo_noise_std").get<double>();

  const json& gate = j.at("gate");
  c.gate.deviate_on = gate.at("deviate_on").get<double>();
  c.gate.deviate_off = gate.at("deviate_off").get<double>();
  c.gate.bottleneck_band = gate.at("bottleneck_band").get<double>();
  c.gate.stall_window = gate.at("stall_window").get<int>();
  c.gate.stall_progress_eps = gate.at("stall_progress_eps").get<double>();

  const json& train = j.at("train");
  c.train.method = MethodFrom(train.at("method"), "train.method");
  c.train.epochs = train.at("epochs").get<int>();
  c.train.batch_size = train.at("batch_size").get<int>();
  c.train.checkpoint_every = train.at("checkpoint_every").get<int>();
  c.train.seed = train.at("seed").get<uint64_t>();
  c.train.steps_per_epoch = train.at("steps_per_epoch").get<int>();
  c.train.max_steps_per_epoch = train.at("max_steps_per_epoch").get<int>();
  c.train.hidden1 = train.at("hidden1").get<int>();
  c.train.hidden2 = train.at("hidden2").get<int>();
  c.train.adam.learning_rate = train.at("learning_rate").get<double>();
  c.train.adam.beta1 = train.at("beta1").get<double>();
  c.train.adam.beta2 = train.at("beta2").get<double>();
  c.train.adam.epsilon = train.at("epsilon").get<double>();

  const json& exp = j.at("experiment");
  c.experiment.n_initial_demos = exp.at("n_initial_demos").get<int>();
  c.experiment.rounds = exp.at("rounds").get<int>();
  c.experiment.round_quota_fraction =
      exp.at("round_quota_fraction").get<double>();
  c.experiment.single_round_variant =
      exp.at("single_round_variant").get<bool>();
  c.experiment.eval_rollouts = exp.at("eval_rollouts").get<int>();
  c.experiment.seeds.clear();
  for (const json& s : exp.at("seeds")) {
    if (!s.is_number_unsigned() &&
        !(s.is_number_integer() && s.get<int64_t>() >= 0)) {
      Invalid("config key 'experiment.seeds' must hold non-negative integers");
    }
    c.experiment.seeds.push_back(s.get<uint64_t>());
  }
  c.experiment.methods.clear();
  for (const json& m : exp.at("methods")) {
    c.experiment.methods.push_back(MethodFrom(m, "experiment.methods"));
  }
  c.experiment.jobs = exp.at("jobs").get<int>();
  return c;
}

void ApplyOverride(json* doc, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    Invalid("override '" + assignment + "' must look like section.key=value");
  }
  std::string path = assignment.substr(0, eq);
  std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) Invalid("config key '" + path + "' is not nested");
    node = &next;
  }
  (*node)[parts.back()] = std::move(value);
}

}  // namespace

ProtocolConfig ParseConfig(const std::string& text,
                           std::span<const std::string> overrides) {
  json doc = json::object();
  if (!text.empty()) {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      Invalid(std::string("config is not valid JSON: ") + e.what());
    }
  }
  for (const std::string& o : overrides) ApplyOverride(&doc, o);

  const json defaults = ToJson(ProtocolConfig{});
  CheckShape(doc, defaults, "");
  json merged = defaults;
  merged.merge_patch(doc);

  ProtocolConfig config;
  try {
    config = FromJson(merged);
  } catch (const json::exception& e) {
    Invalid(std::string("config value out of range: ") + e.what());
  }
  try {
    config.Validate();
  } catch (const Error& e) {
    Invalid(e.detail());
  }
  return config;
}

ProtocolConfig LoadConfig(const std::string& path,
                          std::span<const std::string> overrides) {
  if (path.empty()) return ParseConfig("", overrides);
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), overrides);
}

std::string DumpConfig(const ProtocolConfig& config) {
  return ToJson(config).dump(2) + "\n";
}

}  // namespace iwr
