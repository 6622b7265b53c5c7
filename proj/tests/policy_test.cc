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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "iwr/errors.h"
#include "iwr/random.h"
#include "test_util.h"

namespace iwr {
namespace {

RowMatrix RandomMatrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  RowMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.Uniform(-scale, scale);
  }
  return m;
}

PolicyParams RandomParams(int h1, int h2, Rng& rng, double scale) {
  PolicyParams p(h1, h2);
  for (int i = 0; i < p.size(); ++i) p.flat()(i) = rng.Uniform(-scale, scale);
  return p;
}

// Plain loops, no Eigen products.
Action NaiveForward(const PolicyParams& p, const Observation& obs) {
  std::vector<double> x(obs.data(), obs.data() + obs.size());
  for (int layer = 0; layer < PolicyParams::kLayers; ++layer) {
    auto w = p.weight(layer);
    auto b = p.bias(layer);
    std::vector<double> y(p.fan_out(layer));
    for (int j = 0; j < p.fan_out(layer); ++j) {
      double s = b(j);
      for (int i = 0; i < p.fan_in(layer); ++i) s += x[i] * w(i, j);
      y[j] = layer + 1 < PolicyParams::kLayers ? std::tanh(s) : s;
    }
    x = y;
  }
  return Action(x[0], x[1], x[2]);
}

double RelativeError(double a, double b) {
  double scale = std::max(std::abs(a), std::abs(b));
  if (scale < 1e-7) return std::abs(a - b) < 1e-10 ? 0.0 : 1.0;
  return std::abs(a - b) / scale;
}

TEST(PolicyTest, InitIsDeterministicWithZeroBiases) {
  PolicyParams a = InitParams(3);
  PolicyParams b = InitParams(3);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == InitParams(4));
  for (int l = 0; l < PolicyParams::kLayers; ++l) {
    EXPECT_TRUE((a.bias(l).array() == 0.0).all());
    double bound = std::sqrt(6.0 / (a.fan_in(l) + a.fan_out(l)));
    EXPECT_LE(a.weight(l).cwiseAbs().maxCoeff(), bound);
    // the draws should actually fill the range
    EXPECT_GT(a.weight(l).cwiseAbs().maxCoeff(), 0.9 * bound);
  }
  EXPECT_NEAR(std::sqrt(6.0 / 74.0), 0.2847, 1e-4);
  EXPECT_LE(a.weight(0).cwiseAbs().maxCoeff(), 0.28473);
}

TEST(PolicyTest, ShapesAndSerializationOrder) {
  PolicyParams p;
  EXPECT_EQ(p.size(), 10 * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
  for (int i = 0; i < p.size(); ++i) p.flat()(i) = i;
  EXPECT_EQ(p.weight(0)(0, 0), 0.0);
  EXPECT_EQ(p.weight(0)(0, 1), 1.0);  // row-major, in x out
  EXPECT_EQ(p.weight(0)(1, 0), 64.0);
  EXPECT_EQ(p.bias(0)(0), 640.0);
  EXPECT_EQ(p.weight(1)(0, 0), 704.0);
  EXPECT_EQ(p.bias(2)(2), p.size() - 1.0);
}

TEST(PolicyTest, ZeroWeightsOutputBias) {
  PolicyParams p;
  p.bias(2) << 0.25, -1.5, 3.0;
  Rng rng(1);
  Observation obs;
  for (int i = 0; i < kObsDim; ++i) obs(i) = rng.Uniform(-1, 1);
  EXPECT_EQ(Forward(p, obs), Action(0.25, -1.5, 3.0));
}

TEST(PolicyTest, OneHiddenUnitClosedForm) {
  PolicyParams p(1, 1);
  p.bias(0)(0) = 0.7;
  p.weight(1)(0, 0) = -1.3;
  p.bias(1)(0) = 0.2;
  p.weight(2) << 0.5, -2.0, 1.5;
  p.bias(2) << 0.1, 0.2, 0.3;
  const double h2 = std::tanh(-1.3 * std::tanh(0.7) + 0.2);
  Action expected(0.1 + 0.5 * h2, 0.2 - 2.0 * h2, 0.3 + 1.5 * h2);
  Action got = Forward(p, Observation::Zero());
  for (int i = 0; i < kActDim; ++i) EXPECT_DOUBLE_EQ(got(i), expected(i));
}

TEST(PolicyTest, ForwardMatchesNaiveLoopsAndBatch) {
  Rng rng(17);
  PolicyParams p = RandomParams(64, 64, rng, 0.3);
  RowMatrix obs = RandomMatrix(12, kObsDim, rng);
  RowMatrix batch = ForwardBatch(p, obs);
  ASSERT_EQ(batch.rows(), 12);
  ASSERT_EQ(batch.cols(), kActDim);
  for (int r = 0; r < 12; ++r) {
    Observation o = obs.row(r).transpose();
    Action a = Forward(p, o);
    Action n = NaiveForward(p, o);
    for (int k = 0; k < kActDim; ++k) {
      EXPECT_NEAR(a(k), n(k), 1e-12);
      EXPECT_EQ(a(k), batch(r, k));
    }
    EXPECT_EQ(a, Forward(p, o));
  }
}

TEST(PolicyTest, LossIsZeroAtTargets) {
  Rng rng(5);
  PolicyParams p = RandomParams(16, 16, rng, 0.5);
  RowMatrix obs = RandomMatrix(6, kObsDim, rng);
  RowMatrix targets = ForwardBatch(p, obs);
  LossAndGrad lg = ComputeLossAndGrad(p, obs, targets);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_TRUE((lg.grad.flat().array() == 0.0).all());
}

TEST(PolicyTest, LossIsMeanSquaredError) {
  Rng rng(6);
  PolicyParams p = RandomParams(8, 8, rng, 0.5);
  RowMatrix obs = RandomMatrix(5, kObsDim, rng);
  RowMatrix targets = RandomMatrix(5, kActDim, rng);
  double expected = 0.0;
  for (int r = 0; r < 5; ++r) {
    Action a = NaiveForward(p, obs.row(r).transpose());
    for (int k = 0; k < kActDim; ++k) {
      expected += (a(k) - targets(r, k)) * (a(k) - targets(r, k));
    }
  }
  expected /= 5;
  EXPECT_NEAR(ComputeLoss(p, obs, targets), expected, 1e-13);
}

TEST(PolicyTest, DuplicatedRowsLeaveLossAndGradUnchanged) {
  Rng rng(8);
  PolicyParams p = RandomParams(12, 10, rng, 0.5);
  RowMatrix obs = RandomMatrix(7, kObsDim, rng);
  RowMatrix targets = RandomMatrix(7, kActDim, rng);
  RowMatrix obs2(14, kObsDim), targets2(14, kActDim);
  obs2 << obs, obs;
  targets2 << targets, targets;
  LossAndGrad a = ComputeLossAndGrad(p, obs, targets);
  LossAndGrad b = ComputeLossAndGrad(p, obs2, targets2);
  EXPECT_NEAR(a.loss, b.loss, 1e-14 * a.loss);
  for (int i = 0; i < p.size(); ++i) {
    ASSERT_NEAR(a.grad.flat()(i), b.grad.flat()(i),
                1e-13 * (1 + std::abs(a.grad.flat()(i))));
  }
}

TEST(PolicyTest, WeightsScaleRowsAndNormalize) {
  Rng rng(9);
  PolicyParams p = RandomParams(6, 6, rng, 0.5);
  RowMatrix obs = RandomMatrix(3, kObsDim, rng);
  RowMatrix targets = RandomMatrix(3, kActDim, rng);
  // weight 2 on row 0 is the same as listing it twice
  RowMatrix obs2(4, kObsDim), targets2(4, kActDim);
  obs2 << obs, obs.row(0);
  targets2 << targets, targets.row(0);
  std::vector<double> w = {2.0, 1.0, 1.0};
  LossAndGrad a = ComputeLossAndGrad(p, obs, targets, w);
  LossAndGrad b = ComputeLossAndGrad(p, obs2, targets2);
  EXPECT_NEAR(a.loss, b.loss, 1e-14);
  EXPECT_LT((a.grad.flat() - b.grad.flat()).cwiseAbs().maxCoeff(), 1e-14);
}

// Central differences on the loss, one coordinate at a time.
double MaxRelativeGradientError(PolicyParams p, const RowMatrix& obs,
                                const RowMatrix& targets,
                                std::span<const double> weights,
                                const std::vector<int>& coords) {
  const double h = 1e-5;
  LossAndGrad lg = ComputeLossAndGrad(p, obs, targets, weights);
  double worst = 0.0;
  for (int i : coords) {
    const double x = p.flat()(i);
    p.flat()(i) = x + h;
    const double up = ComputeLoss(p, obs, targets, weights);
    p.flat()(i) = x - h;
    const double down = ComputeLoss(p, obs, targets, weights);
    p.flat()(i) = x;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, RelativeError(lg.grad.flat()(i), numeric));
  }
  return worst;
}

TEST(PolicyTest, GradientsMatchFiniteDifferences) {
  const double worst = testing_util::GradientCheckMaxError(100, 1);
  EXPECT_LT(worst, 1e-4);
}

TEST(PolicyTest, WeightedGradientsMatchFiniteDifferences) {
  Rng rng(77);
  for (int draw = 0; draw < 10; ++draw) {
    PolicyParams p = RandomParams(5, 7, rng, 1.0);
    const int b = 1 + static_cast<int>(rng.UniformInt(6));
    RowMatrix obs = RandomMatrix(b, kObsDim, rng);
    RowMatrix targets = RandomMatrix(b, kActDim, rng);
    std::vector<double> w(b);
    for (double& x : w) x = rng.Uniform(0.1, 3.0);
    std::vector<int> coords(p.size());
    for (int i = 0; i < p.size(); ++i) coords[i] = i;
    EXPECT_LT(MaxRelativeGradientError(p, obs, targets, w, coords), 1e-4);
  }
}

TEST(PolicyTest, AdamZeroGradientIsFixedPoint) {
  PolicyParams p = InitParams(1, 4, 4);
  PolicyParams before = p;
  OptimizerState state(p);
  AdamStep(&p, &state, PolicyParams(4, 4));
  EXPECT_EQ(p, before);
  EXPECT_TRUE((state.first_moment.array() == 0.0).all());
  EXPECT_TRUE((state.second_moment.array() == 0.0).all());
  EXPECT_EQ(state.step, 1);
}

TEST(PolicyTest, AdamFirstStepWithUnitGradient) {
  PolicyParams p(2, 2);
  PolicyParams grad(2, 2);
  grad.flat().setOnes();
  OptimizerState state(p);
  AdamStep(&p, &state, grad);
  // bias-corrected moments are exactly 1, so the step is lr / (1 + eps)
  const double expected = -1e-3 / (1.0 + 1e-8);
  for (int i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(p.flat()(i), expected);
  EXPECT_NEAR(expected, -1e-3, 1e-10);
}

TEST(PolicyTest, AdamMatchesScalarReference) {
  Rng rng(3);
  PolicyParams p = RandomParams(3, 3, rng, 1.0);
  OptimizerState state(p);
  std::vector<double> x(p.flat().data(), p.flat().data() + p.size());
  std::vector<double> m(p.size(), 0.0), v(p.size(), 0.0);
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 5; ++t) {
    PolicyParams g = RandomParams(3, 3, rng, 2.0);
    AdamStep(&p, &state, g);
    for (int i = 0; i < p.size(); ++i) {
      const double gi = g.flat()(i);
      m[i] = b1 * m[i] + (1 - b1) * gi;
      v[i] = b2 * v[i] + (1 - b2) * gi * gi;
      const double mh = m[i] / (1 - std::pow(b1, t));
      const double vh = v[i] / (1 - std::pow(b2, t));
      x[i] -= lr * mh / (std::sqrt(vh) + eps);
      ASSERT_NEAR(p.flat()(i), x[i], 1e-14);
    }
  }
  EXPECT_EQ(state.step, 5);
}

TEST(PolicyTest, AdamIsDeterministic) {
  Rng rng(4);
  PolicyParams g = RandomParams(4, 4, rng, 1.0);
  PolicyParams a = InitParams(9, 4, 4), b = InitParams(9, 4, 4);
  OptimizerState sa(a), sb(b);
  for (int i = 0; i < 2; ++i) {
    AdamStep(&a, &sa, g);
    AdamStep(&b, &sb, g);
  }
  EXPECT_EQ(a, b);
  EXPECT_EQ(sa.first_moment, sb.first_moment);
  EXPECT_EQ(sa.second_moment, sb.second_moment);
}

TEST(PolicyTest, HundredAdamStepsHalveLoss) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng({seed, 1});
    PolicyParams p = InitParams(seed);
    RowMatrix obs = RandomMatrix(32, kObsDim, rng);
    RowMatrix targets = RandomMatrix(32, kActDim, rng);
    OptimizerState state(p);
    const double initial = ComputeLoss(p, obs, targets);
    double previous = initial;
    for (int step = 0; step < 100; ++step) {
      LossAndGrad lg = ComputeLossAndGrad(p, obs, targets);
      AdamStep(&p, &state, lg.grad);
      const double now = ComputeLoss(p, obs, targets);
      EXPECT_LT(now, previous) << "seed " << seed << " step " << step;
      previous = now;
    }
    EXPECT_LE(previous, 0.5 * initial) << "seed " << seed;
  }
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing_util::TempDir("checkpoint"); }
  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  PolicyParams p = InitParams(21);
  p.flat()(0) = 1.0 / 3.0;
  p.flat()(1) = -0.0;
  p.flat()(2) = 1e-310;
  SaveCheckpoint(p, dir_ / "p.ckpt");
  PolicyParams q = LoadCheckpoint(dir_ / "p.ckpt");
  ASSERT_TRUE(p.SameShape(q));
  EXPECT_EQ(0, std::memcmp(p.flat().data(), q.flat().data(),
                           sizeof(double) * p.size()));
  std::ifstream in(dir_ / "p.ckpt");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "IWR-POLICY v1 widths=10,64,64,3 count=5059");
}

TEST_F(CheckpointTest, RoundTripKeepsCustomWidths) {
  PolicyParams p = InitParams(2, 8, 5);
  SaveCheckpoint(p, dir_ / "small.ckpt");
  EXPECT_EQ(LoadCheckpoint(dir_ / "small.ckpt"), p);
}

void ExpectCorrupt(const std::filesystem::path& path) {
  try {
    LoadCheckpoint(path);
    ADD_FAILURE() << "expected CorruptCheckpoint for " << path;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCorruptCheckpoint) << e.what();
  }
}

TEST_F(CheckpointTest, TruncatedFileIsCorrupt) {
  SaveCheckpoint(InitParams(1), dir_ / "p.ckpt");
  std::string bytes = testing_util::ReadFile(dir_ / "p.ckpt");
  testing_util::WriteFile(dir_ / "short.ckpt", bytes.substr(0, bytes.size() - 8));
  ExpectCorrupt(dir_ / "short.ckpt");
  testing_util::WriteFile(dir_ / "long.ckpt", bytes + "x");
  ExpectCorrupt(dir_ / "long.ckpt");
}

TEST_F(CheckpointTest, WrongHeaderIsCorrupt) {
  SaveCheckpoint(InitParams(1), dir_ / "p.ckpt");
  std::string bytes = testing_util::ReadFile(dir_ / "p.ckpt");
  std::string wrong = bytes;
  wrong.replace(wrong.find("widths=10"), 9, "widths=11");
  testing_util::WriteFile(dir_ / "dims.ckpt", wrong);
  ExpectCorrupt(dir_ / "dims.ckpt");
  std::string version = bytes;
  version.replace(version.find("v1"), 2, "v9");
  testing_util::WriteFile(dir_ / "version.ckpt", version);
  ExpectCorrupt(dir_ / "version.ckpt");
  testing_util::WriteFile(dir_ / "empty.ckpt", "");
  ExpectCorrupt(dir_ / "empty.ckpt");
}

TEST_F(CheckpointTest, NonFiniteValuesAreCorrupt) {
  PolicyParams p = InitParams(1, 2, 2);
  p.flat()(3) = NAN;
  SaveCheckpoint(p, dir_ / "nan.ckpt");
  ExpectCorrupt(dir_ / "nan.ckpt");
}

}  // namespace
}  // namespace iwr
