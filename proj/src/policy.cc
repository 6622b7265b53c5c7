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

#include "iwr/policy.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "iwr/errors.h"
#include "iwr/random.h"

namespace iwr {

namespace {

constexpr uint64_t kInitStream = 0x494E4954ULL;  // "INIT"
constexpr char kMagic[] = "IWR-POLICY";
constexpr int kFormatVersion = 1;
constexpr int kMaxWidth = 1 << 16;

// tanh'(z) expressed through h = tanh(z)
RowMatrix TanhDerivative(const RowMatrix& h) {
  return (1.0 - h.array().square()).matrix();
}

uint64_t ToLittleEndian(uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xFF) << (56 - 8 * i);
    return out;
  }
  return bits;
}

[[noreturn]] void Corrupt(const std::filesystem::path& path,
                          const std::string& what) {
  throw Error(ErrorKind::kCorruptCheckpoint, path.string() + ": " + what);
}

}  // namespace

PolicyParams::PolicyParams(int hidden1, int hidden2)
    : widths_{kObsDim, hidden1, hidden2, kActDim} {
  if (hidden1 < 1 || hidden2 < 1) {
    throw Error(ErrorKind::kInvalidArgument, "hidden widths must be positive");
  }
  int n = 0;
  for (int l = 0; l < kLayers; ++l) n += (widths_[l] + 1) * widths_[l + 1];
  flat_ = Eigen::VectorXd::Zero(n);
}

int PolicyParams::weight_offset(int layer) const {
  int offset = 0;
  for (int l = 0; l < layer; ++l) offset += (widths_[l] + 1) * widths_[l + 1];
  return offset;
}

int PolicyParams::bias_offset(int layer) const {
  return weight_offset(layer) + widths_[layer] * widths_[layer + 1];
}

PolicyParams::MatrixMap PolicyParams::weight(int layer) {
  return MatrixMap(flat_.data() + weight_offset(layer), fan_in(layer),
                   fan_out(layer));
}

PolicyParams::ConstMatrixMap PolicyParams::weight(int layer) const {
  return ConstMatrixMap(flat_.data() + weight_offset(layer), fan_in(layer),
                        fan_out(layer));
}

PolicyParams::VectorMap PolicyParams::bias(int layer) {
  return VectorMap(flat_.data() + bias_offset(layer), fan_out(layer));
}

PolicyParams::ConstVectorMap PolicyParams::bias(int layer) const {
  return ConstVectorMap(flat_.data() + bias_offset(layer), fan_out(layer));
}

PolicyParams InitParams(uint64_t seed, int hidden1, int hidden2) {
  PolicyParams params(hidden1, hidden2);
  Rng rng({kInitStream, seed});
  for (int l = 0; l < PolicyParams::kLayers; ++l) {
    double limit = std::sqrt(6.0 / (params.fan_in(l) + params.fan_out(l)));
    auto w = params.weight(l);
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) w(i, j) = rng.Uniform(-limit, limit);
    }
  }
  return params;
}

Action Forward(const PolicyParams& params, const Observation& obs) {
  Eigen::VectorXd h1 =
      (params.weight(0).transpose() * obs + params.bias(0)).array().tanh();
  Eigen::VectorXd h2 =
      (params.weight(1).transpose() * h1 + params.bias(1)).array().tanh();
  return params.weight(2).transpose() * h2 + params.bias(2);
}

RowMatrix ForwardBatch(const PolicyParams& params, const RowMatrix& obs) {
  RowMatrix h1 = ((obs * params.weight(0)).rowwise() +
                  params.bias(0).transpose())
                     .array()
                     .tanh();
  RowMatrix h2 = ((h1 * params.weight(1)).rowwise() +
                  params.bias(1).transpose())
                     .array()
                     .tanh();
  return (h2 * params.weight(2)).rowwise() + params.bias(2).transpose();
}

LossAndGrad ComputeLossAndGrad(const PolicyParams& params,
                               const RowMatrix& obs, const RowMatrix& actions,
                               std::span<const double> weights) {
  const Eigen::Index rows = obs.rows();
  if (rows < 1 || actions.rows() != rows || obs.cols() != kObsDim ||
      actions.cols() != kActDim) {
    throw Error(ErrorKind::kInvalidArgument, "malformed batch");
  }
  Eigen::VectorXd w;
  if (weights.empty()) {
    w = Eigen::VectorXd::Constant(rows, 1.0 / static_cast<double>(rows));
  } else {
    if (static_cast<Eigen::Index>(weights.size()) != rows) {
      throw Error(ErrorKind::kInvalidArgument, "weight count != batch rows");
    }
    w = Eigen::Map<const Eigen::VectorXd>(weights.data(), rows);
    w /= w.sum();
  }

  RowMatrix h1 = ((obs * params.weight(0)).rowwise() +
                  params.bias(0).transpose())
                     .array()
                     .tanh();
  RowMatrix h2 = ((h1 * params.weight(1)).rowwise() +
                  params.bias(1).transpose())
                     .array()
                     .tanh();
  RowMatrix err =
      ((h2 * params.weight(2)).rowwise() + params.bias(2).transpose()) -
      actions;

  LossAndGrad out{0.0, PolicyParams(params.fan_out(0), params.fan_out(1))};
  out.loss = w.dot(err.rowwise().squaredNorm());

  RowMatrix d_out = 2.0 * (w.asDiagonal() * err);
  out.grad.weight(2) = h2.transpose() * d_out;
  out.grad.bias(2) = d_out.colwise().sum().transpose();

  RowMatrix d_z2 = ((d_out * params.weight(2).transpose()).array() *
                    TanhDerivative(h2).array())
                       .matrix();
  out.grad.weight(1) = h1.transpose() * d_z2;
  out.grad.bias(1) = d_z2.colwise().sum().transpose();

  RowMatrix d_z1 = ((d_z2 * params.weight(1).transpose()).array() *
                    TanhDerivative(h1).array())
                       .matrix();
  out.grad.weight(0) = obs.transpose() * d_z1;
  out.grad.bias(0) = d_z1.colwise().sum().transpose();
  return out;
}

double ComputeLoss(const PolicyParams& params, const RowMatrix& obs,
                   const RowMatrix& actions, std::span<const double> weights) {
  RowMatrix err = ForwardBatch(params, obs) - actions;
  Eigen::VectorXd sq = err.rowwise().squaredNorm();
  if (weights.empty()) return sq.mean();
  Eigen::Map<const Eigen::VectorXd> w(weights.data(), weights.size());
  return w.dot(sq) / w.sum();
}

OptimizerState::OptimizerState(const PolicyParams& params, AdamConfig config)
    : config(config),
      first_moment(Eigen::VectorXd::Zero(params.size())),
      second_moment(Eigen::VectorXd::Zero(params.size())) {}

void AdamStep(PolicyParams* params, OptimizerState* state,
              const PolicyParams& grad) {
  if (!params->SameShape(grad) ||
      state->first_moment.size() != params->size()) {
    throw Error(ErrorKind::kInvalidArgument, "adam: shape mismatch");
  }
  const AdamConfig& c = state->config;
  const Eigen::VectorXd& g = grad.flat();
  state->step += 1;
  state->first_moment = c.beta1 * state->first_moment + (1.0 - c.beta1) * g;
  state->second_moment =
      c.beta2 * state->second_moment + (1.0 - c.beta2) * g.cwiseProduct(g);
  const double t = static_cast<double>(state->step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  params->flat().array() -=
      c.learning_rate * (state->first_moment.array() / correction1) /
      ((state->second_moment.array() / correction2).sqrt() + c.epsilon);
}

void SaveCheckpoint(const PolicyParams& params,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  const auto& w = params.widths();
  out << kMagic << " v" << kFormatVersion << " widths=" << w[0] << ',' << w[1]
      << ',' << w[2] << ',' << w[3] << " count=" << params.size() << '\n';
  std::vector<uint64_t> payload(params.size());
  for (int i = 0; i < params.size(); ++i) {
    payload[i] = ToLittleEndian(std::bit_cast<uint64_t>(params.flat()[i]));
  }
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(uint64_t)));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

PolicyParams LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  size_t newline = bytes.find('\n');
  if (newline == std::string::npos || newline > 256) {
    Corrupt(path, "missing header");
  }
  std::istringstream header(bytes.substr(0, newline));
  std::string magic, version, widths_field, count_field, extra;
  header >> magic >> version >> widths_field >> count_field;
  if (magic != kMagic) Corrupt(path, "bad magic");
  if (version != "v" + std::to_string(kFormatVersion)) {
    Corrupt(path, "unsupported version " + version);
  }
  if (header >> extra) Corrupt(path, "trailing header fields");

  std::array<int, PolicyParams::kLayers + 1> widths{};
  long long count = -1;
  if (std::sscanf(widths_field.c_str(), "widths=%d,%d,%d,%d", &widths[0],
                  &widths[1], &widths[2], &widths[3]) != 4) {
    Corrupt(path, "bad widths field");
  }
  if (std::sscanf(count_field.c_str(), "count=%lld", &count) != 1) {
    Corrupt(path, "bad count field");
  }
  if (widths[0] != kObsDim || widths[3] != kActDim) {
    Corrupt(path, "dimension mismatch: expected input " +
                      std::to_string(kObsDim) + " and output " +
                      std::to_string(kActDim));
  }
  if (widths[1] < 1 || widths[2] < 1 || widths[1] > kMaxWidth ||
      widths[2] > kMaxWidth) {
    Corrupt(path, "bad hidden widths");
  }
  PolicyParams params(widths[1], widths[2]);
  if (count != params.size()) Corrupt(path, "parameter count mismatch");
  size_t payload_bytes = bytes.size() - newline - 1;
  if (payload_bytes != static_cast<size_t>(count) * sizeof(uint64_t)) {
    Corrupt(path, "payload is " + std::to_string(payload_bytes) +
                      " bytes, expected " +
                      std::to_string(count * sizeof(uint64_t)));
  }
  const char* data = bytes.data() + newline + 1;
  for (int i = 0; i < params.size(); ++i) {
    uint64_t bits;
    std::memcpy(&bits, data + i * sizeof(uint64_t), sizeof(bits));
    double v = std::bit_cast<double>(ToLittleEndian(bits));
    if (!std::isfinite(v)) Corrupt(path, "non-finite parameter");
    params.flat()[i] = v;
  }
  return params;
}

}  // namespace iwr
