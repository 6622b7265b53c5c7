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

#include "iwr/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "gtest/gtest.h"
#include "iwr/errors.h"
#include "iwr/orchestrator.h"
#include "test_util.h"

namespace iwr {
namespace {

using testing_util::MakeTrajectory;
using testing_util::TempDir;

// 20 samples: 6 in D_I, 14 in D_R
DatasetStore TwentySampleStore() {
  DatasetStore store;
  store.Ingest(MakeTrajectory("PPPHHPPP", 11), IngestRule::kSplit);
  store.Ingest(MakeTrajectory("HHHPPPP", 12), IngestRule::kSplit);
  store.Ingest(MakeTrajectory("PPPH", 13), IngestRule::kSplit);
  store.Ingest(MakeTrajectory("P", 14), IngestRule::kSplit);
  return store;
}

double MaxAbs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

// expected loss of a balanced batch, assembled bucket by bucket
LossAndGrad BalancedExpectation(const PolicyParams& p,
                                const DatasetStore& store) {
  Batch di = BucketBatch(store, Bucket::kIntervention);
  Batch dr = BucketBatch(store, Bucket::kOnPolicy);
  LossAndGrad li = ComputeLossAndGrad(p, di.obs, di.actions);
  LossAndGrad lr = ComputeLossAndGrad(p, dr.obs, dr.actions);
  LossAndGrad out{0.5 * (li.loss + lr.loss), PolicyParams(p)};
  out.grad.flat() = 0.5 * (li.grad.flat() + lr.grad.flat());
  return out;
}

TEST(TrainerTest, WeightedLossEqualsBalancedExpectation) {
  DatasetStore store = TwentySampleStore();
  ASSERT_EQ(store.intervention_size(), 6u);
  ASSERT_EQ(store.on_policy_size(), 14u);
  const double alpha = Alpha(store);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    PolicyParams p = InitParams(seed, 16, 12);
    LossAndGrad expected = BalancedExpectation(p, store);
    LossAndGrad got = IwrWeightedLossAndGrad(p, store, alpha);
    EXPECT_NEAR(got.loss, expected.loss, 1e-10);
    EXPECT_LT(MaxAbs(got.grad.flat() - expected.grad.flat()), 1e-10);
    EXPECT_NEAR(IwrWeightedLoss(p, store, alpha), got.loss, 1e-12);
  }
}

TEST(TrainerTest, WeightedLossMatchesPerRowWeights) {
  DatasetStore store = TwentySampleStore();
  PolicyParams p = InitParams(3, 8, 8);
  for (double alpha : {0.0, 0.5, 1.0, 4.0}) {
    Batch di = BucketBatch(store, Bucket::kIntervention);
    Batch dr = BucketBatch(store, Bucket::kOnPolicy);
    RowMatrix obs(20, kObsDim), act(20, kActDim);
    obs << di.obs, dr.obs;
    act << di.actions, dr.actions;
    std::vector<double> w(20, 1.0);
    std::fill(w.begin(), w.begin() + 6, alpha);
    LossAndGrad ref = ComputeLossAndGrad(p, obs, act, w);
    LossAndGrad got = IwrWeightedLossAndGrad(p, store, alpha);
    EXPECT_NEAR(got.loss, ref.loss, 1e-12) << alpha;
    EXPECT_LT(MaxAbs(got.grad.flat() - ref.grad.flat()), 1e-12) << alpha;
  }
}

TEST(TrainerTest, AlphaOneIsPlainMean) {
  DatasetStore store = TwentySampleStore();
  PolicyParams p = InitParams(4, 8, 8);
  RowMatrix obs(20, kObsDim), act(20, kActDim);
  Batch di = BucketBatch(store, Bucket::kIntervention);
  Batch dr = BucketBatch(store, Bucket::kOnPolicy);
  obs << di.obs, dr.obs;
  act << di.actions, dr.actions;
  EXPECT_NEAR(IwrWeightedLoss(p, store, 1.0), ComputeLoss(p, obs, act), 1e-12);
}

TEST(TrainerTest, BalancedBatchGradientsConvergeToWeightedGradient) {
  DatasetStore store = TwentySampleStore();
  PolicyParams p = InitParams(5, 8, 8);
  LossAndGrad target = IwrWeightedLossAndGrad(p, store, Alpha(store));
  Rng rng(6);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.size());
  double loss = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Batch b = SampleForMethod(store, Method::kIwr, 8, rng);
    LossAndGrad lg = ComputeLossAndGrad(p, b.obs, b.actions);
    mean += lg.grad.flat();
    loss += lg.loss;
  }
  mean /= n;
  loss /= n;
  EXPECT_NEAR(loss, target.loss, 0.02 * target.loss);
  EXPECT_LT((mean - target.grad.flat()).norm(),
            0.03 * target.grad.flat().norm());
}

TEST(TrainerTest, MethodSamplers) {
  DatasetStore store = TwentySampleStore();
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    Batch hg = SampleForMethod(store, Method::kHGDagger, 16, rng);
    for (Source s : hg.sources) ASSERT_EQ(s, Source::kHuman);
    Batch iwr = SampleForMethod(store, Method::kIwr, 16, rng);
    int human = 0;
    for (Source s : iwr.sources) human += s == Source::kHuman;
    ASSERT_EQ(human, 8);
  }
  EXPECT_EQ(SamplesForMethod(store, Method::kHGDagger), 6u);
  EXPECT_EQ(SamplesForMethod(store, Method::kIwr), 20u);
  EXPECT_EQ(SamplesForMethod(store, Method::kIwrNoBalance), 20u);
}

TEST(TrainerTest, MethodNames) {
  for (Method m : {Method::kFullDemos, Method::kHGDagger, Method::kIwrNoBalance,
                   Method::kIwr, Method::kDaggerOracle}) {
    ASSERT_EQ(ParseMethod(MethodName(m)), m);
  }
  EXPECT_EQ(MethodName(Method::kIwrNoBalance), "IWR_NB");
  EXPECT_FALSE(ParseMethod("iwr").has_value());
}

TrainConfig SmallConfig(Method method) {
  TrainConfig tc;
  tc.method = method;
  tc.epochs = 25;
  tc.checkpoint_every = 10;
  tc.batch_size = 16;
  tc.hidden1 = 16;
  tc.hidden2 = 16;
  tc.seed = 3;
  return tc;
}

TEST(TrainerTest, CheckpointSchedule) {
  DatasetStore store = TwentySampleStore();
  CheckpointSet set = Train(store, SmallConfig(Method::kIwr));
  ASSERT_EQ(set.entries.size(), 3u);
  EXPECT_EQ(set.entries[0].epoch, 10);
  EXPECT_EQ(set.entries[1].epoch, 20);
  EXPECT_EQ(set.entries[2].epoch, 25);
  EXPECT_EQ(set.final().epoch, 25);
}

TEST(TrainerTest, TrainingIsDeterministic) {
  DatasetStore store = TwentySampleStore();
  for (Method m : {Method::kIwr, Method::kIwrNoBalance, Method::kHGDagger}) {
    CheckpointSet a = Train(store, SmallConfig(m));
    CheckpointSet b = Train(store, SmallConfig(m));
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (size_t i = 0; i < a.entries.size(); ++i) {
      EXPECT_EQ(a.entries[i].params, b.entries[i].params);
      EXPECT_EQ(a.entries[i].training_loss, b.entries[i].training_loss);
    }
  }
  TrainConfig other = SmallConfig(Method::kIwr);
  other.seed = 4;
  EXPECT_FALSE(Train(store, other).final().params ==
               Train(store, SmallConfig(Method::kIwr)).final().params);
}

TEST(TrainerTest, HGDaggerIgnoresOnPolicySamples) {
  DatasetStore with_r = TwentySampleStore();
  DatasetStore without_r;
  without_r.Ingest(MakeTrajectory("PPPHHPPP", 11), IngestRule::kDiscardPolicy);
  without_r.Ingest(MakeTrajectory("HHHPPPP", 12), IngestRule::kDiscardPolicy);
  without_r.Ingest(MakeTrajectory("PPPH", 13), IngestRule::kDiscardPolicy);
  ASSERT_EQ(without_r.intervention(), with_r.intervention());
  CheckpointSet a = Train(with_r, SmallConfig(Method::kHGDagger));
  CheckpointSet b = Train(without_r, SmallConfig(Method::kHGDagger));
  EXPECT_EQ(a.final().params, b.final().params);
}

TEST(TrainerTest, AutomaticStepsFollowMethodSamples) {
  // the cap binds for IWR (20 samples); HGDagger's 6 samples fit one batch
  DatasetStore store = TwentySampleStore();
  TrainConfig capped = SmallConfig(Method::kIwr);
  capped.max_steps_per_epoch = 1;
  TrainConfig explicit_one = SmallConfig(Method::kIwr);
  explicit_one.steps_per_epoch = 1;
  EXPECT_EQ(Train(store, capped).final().params,
            Train(store, explicit_one).final().params);
  TrainConfig hg = SmallConfig(Method::kHGDagger);
  hg.max_steps_per_epoch = 0;
  TrainConfig hg_one = SmallConfig(Method::kHGDagger);
  hg_one.steps_per_epoch = 1;
  EXPECT_EQ(Train(store, hg).final().params, Train(store, hg_one).final().params);
}

TEST(TrainerTest, RequirementsAndValidation) {
  DatasetStore demos;
  demos.Ingest(MakeTrajectory("HHHH", 1), IngestRule::kAllHuman);
  EXPECT_THROW(Train(demos, SmallConfig(Method::kIwr)), Error);
  DatasetStore policy_only;
  policy_only.Ingest(MakeTrajectory("PPPP", 1), IngestRule::kSplit);
  EXPECT_THROW(Train(policy_only, SmallConfig(Method::kHGDagger)), Error);
  EXPECT_NO_THROW(Train(demos, SmallConfig(Method::kFullDemos)));

  TrainConfig bad = SmallConfig(Method::kIwr);
  bad.batch_size = 15;
  EXPECT_THROW(bad.Validate(), Error);
  bad = SmallConfig(Method::kIwr);
  bad.epochs = 5;
  EXPECT_THROW(bad.Validate(), Error);
  bad = SmallConfig(Method::kIwr);
  bad.max_steps_per_epoch = -1;
  EXPECT_THROW(bad.Validate(), Error);
}

TEST(TrainerTest, FullDemosLossDropsBelowTenPercent) {
  TaskConfig task;
  ExpertConfig expert;
  expert.demo_noise_std = 0;
  DemoResult demos = CollectFullDemos(30, task, 77, expert);
  DatasetStore store;
  for (const Trajectory& t : demos.trajectories) {
    store.Ingest(t, IngestRule::kAllHuman);
  }
  TrainConfig tc;
  tc.method = Method::kFullDemos;
  tc.epochs = 200;
  tc.checkpoint_every = 50;
  tc.seed = 1;
  CheckpointSet set = Train(store, tc);
  Batch all = BucketBatch(store, Bucket::kIntervention);
  const double initial =
      ComputeLoss(InitParams(tc.seed, tc.hidden1, tc.hidden2), all.obs,
                  all.actions);
  const double final = ComputeLoss(set.final().params, all.obs, all.actions);
  EXPECT_LT(final, 0.1 * initial);
}

TEST(TrainerTest, RelabelUsesExpertAtVisitedStates) {
  TaskConfig task;
  ExpertConfig expert;
  Env env(task);
  PolicyController policy(InitParams(8, 8, 8));
  std::vector<Trajectory> rollouts;
  for (uint64_t s = 0; s < 5; ++s) {
    ConstantGate off(false);
    rollouts.push_back(RunMixtureEpisode(policy, off, env, s));
  }
  // one expert rollout so attached states show up too
  ConstantGate on(true);
  rollouts.push_back(RunMixtureEpisode(policy, on, env, 9));

  DatasetStore relabeled = DaggerRelabel(rollouts, task, expert);
  EXPECT_EQ(relabeled.on_policy_size(), 0u);
  size_t index = 0;
  for (const Trajectory& t : rollouts) {
    env.Reset(t.seed);
    for (const Step& s : t.steps) {
      const StoredStep& stored = relabeled.intervention()[index++];
      ASSERT_EQ(stored.obs, s.obs);
      Action want = ExpertAction(env.state(), env.params(), expert);
      ASSERT_LT((stored.action - want).cwiseAbs().maxCoeff(), 1e-12);
      env.Step(s.action);
    }
  }
  EXPECT_EQ(index, relabeled.intervention_size());
}

TEST(TrainerTest, SaveCheckpointSetWritesEveryEntry) {
  auto dir = TempDir("trainer_save");
  CheckpointSet set = Train(TwentySampleStore(), SmallConfig(Method::kIwr));
  SaveCheckpointSet(set, dir / "ck");
  for (const Checkpoint& c : set.entries) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", c.epoch);
    EXPECT_EQ(LoadCheckpoint(dir / "ck" / name), c.params);
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "ck" / "losses.csv"));
}

}  // namespace
}  // namespace iwr
