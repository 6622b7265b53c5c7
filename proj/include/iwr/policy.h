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

#ifndef IWR_POLICY_H_
#define IWR_POLICY_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include <Eigen/Core>

#include "iwr/env.h"

namespace iwr {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Weights of a three-layer tanh MLP (obs -> h1 -> h2 -> action), stored in
// one flat vector in serialization order W1, b1, W2, b2, W3, b3. Weight
// matrices are in x out and row-major, so a batch of row observations maps
// through X * W + b.
class PolicyParams {
 public:
  static constexpr int kLayers = 3;

  explicit PolicyParams(int hidden1 = 64, int hidden2 = 64);

  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;
  using VectorMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  MatrixMap weight(int layer);
  ConstMatrixMap weight(int layer) const;
  VectorMap bias(int layer);
  ConstVectorMap bias(int layer) const;

  // widths (obs, h1, h2, act)
  const std::array<int, kLayers + 1>& widths() const { return widths_; }
  int fan_in(int layer) const { return widths_[layer]; }
  int fan_out(int layer) const { return widths_[layer + 1]; }

  Eigen::VectorXd& flat() { return flat_; }
  const Eigen::VectorXd& flat() const { return flat_; }
  int size() const { return static_cast<int>(flat_.size()); }

  bool SameShape(const PolicyParams& other) const {
    return widths_ == other.widths_;
  }
  bool operator==(const PolicyParams& other) const {
    return widths_ == other.widths_ && flat_ == other.flat_;
  }

 private:
  int weight_offset(int layer) const;
  int bias_offset(int layer) const;

  std::array<int, kLayers + 1> widths_;
  Eigen::VectorXd flat_;
};

// Xavier-uniform weights, zero biases; deterministic in seed.
PolicyParams InitParams(uint64_t seed, int hidden1 = 64, int hidden2 = 64);

Action Forward(const PolicyParams& params, const Observation& obs);

// row-wise forward pass over a B x obs_dim batch
RowMatrix ForwardBatch(const PolicyParams& params, const RowMatrix& obs);

struct LossAndGrad {
  double loss = 0.0;
  PolicyParams grad;
};

// Weighted squared error sum_i w_i |pi(s_i) - a_i|^2 / sum_i w_i and its
// exact gradient. An empty weight span means uniform weights, i.e. the mean
// over rows.
LossAndGrad ComputeLossAndGrad(const PolicyParams& params,
                               const RowMatrix& obs, const RowMatrix& actions,
                               std::span<const double> weights = {});

double ComputeLoss(const PolicyParams& params, const RowMatrix& obs,
                   const RowMatrix& actions,
                   std::span<const double> weights = {});

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  explicit OptimizerState(const PolicyParams& params, AdamConfig config = {});

  AdamConfig config;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  int64_t step = 0;
};

// one bias-corrected Adam update, in place
void AdamStep(PolicyParams* params, OptimizerState* state,
              const PolicyParams& grad);

// Checkpoint layout: one ASCII header line
//   "IWR-POLICY v1 widths=10,64,64,3 count=<n>\n"
// followed by n little-endian float64 values in serialization order.
void SaveCheckpoint(const PolicyParams& params,
                    const std::filesystem::path& path);
PolicyParams LoadCheckpoint(const std::filesystem::path& path);

}  // namespace iwr

#endif  // IWR_POLICY_H_
