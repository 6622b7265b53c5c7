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

#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "iwr/errors.h"
#include "json.hpp"
#include "test_util.h"

namespace iwr {
namespace {

using json = nlohmann::json;

void ExpectConfigError(const std::string& text,
                       std::vector<std::string> overrides,
                       const std::string& fragment) {
  try {
    ParseConfig(text, overrides);
    ADD_FAILURE() << "accepted " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfigInvalid);
    EXPECT_NE(e.detail().find(fragment), std::string::npos) << e.detail();
  }
}

TEST(ConfigTest, EmptyDocumentGivesDefaults) {
  ProtocolConfig c = ParseConfig("{}");
  EXPECT_EQ(DumpConfig(c), DumpConfig(ProtocolConfig{}));
  EXPECT_EQ(c.experiment.seeds, (std::vector<uint64_t>{0, 1, 2}));
  EXPECT_EQ(c.experiment.methods.size(), 4u);
}

TEST(ConfigTest, DumpParseRoundTripIsExact) {
  ProtocolConfig c;
  c.task.gap_half_width = (0.1 + 0.2) / 4;
  c.expert.demo_noise_std = 1.0 / 3;
  c.train.adam.learning_rate = 3e-4;
  c.train.method = Method::kHGDagger;
  c.experiment.seeds = {4, 9};
  c.experiment.methods = {Method::kIwr, Method::kDaggerOracle};
  c.experiment.single_round_variant = true;
  const std::string dumped = DumpConfig(c);
  ProtocolConfig back = ParseConfig(dumped);
  EXPECT_EQ(DumpConfig(back), dumped);
  EXPECT_EQ(back.task.gap_half_width, c.task.gap_half_width);
  EXPECT_EQ(back.expert.demo_noise_std, c.expert.demo_noise_std);
  EXPECT_EQ(back.experiment.methods, c.experiment.methods);
}

TEST(ConfigTest, PartialDocumentsAndOverrides) {
  std::vector<std::string> sets = {"train.epochs=30", "experiment.seeds=[7]",
                                   "train.method=IWR_NB",
                                   "experiment.methods=[\"IWR\"]"};
  ProtocolConfig c =
      ParseConfig(R"({"train":{"epochs":20,"batch_size":32}})", sets);
  EXPECT_EQ(c.train.epochs, 30);
  EXPECT_EQ(c.train.batch_size, 32);
  EXPECT_EQ(c.train.method, Method::kIwrNoBalance);
  EXPECT_EQ(c.experiment.seeds, std::vector<uint64_t>{7});
  EXPECT_EQ(c.experiment.methods, std::vector<Method>{Method::kIwr});
  EXPECT_EQ(c.gate.stall_window, GateConfig{}.stall_window);
}

TEST(ConfigTest, RejectsBadDocuments) {
  ExpectConfigError(R"({"train":{"epochz":3}})", {}, "train.epochz");
  ExpectConfigError(R"({"trian":{}})", {}, "trian");
  ExpectConfigError(R"({"train":{"epochs":"many"}})", {}, "train.epochs");
  ExpectConfigError(R"({"train":{"method":"Magic"}})", {}, "Magic");
  ExpectConfigError(R"({"train":{"batch_size":7}})", {}, "batch_size");
  ExpectConfigError("[1]", {}, "object");
  ExpectConfigError("{", {}, "JSON");
  ExpectConfigError("{}", {"nodot=1"}, "nodot");
  ExpectConfigError("{}", {"task.nope=1"}, "task.nope");
  ExpectConfigError("{}", {"experiment.rounds=-1"}, "rounds");
}

TEST(ConfigTest, LoadFromFile) {
  auto dir = testing_util::TempDir("config_load");
  testing_util::WriteFile(dir / "c.json", R"({"experiment":{"rounds":1}})");
  EXPECT_EQ(LoadConfig((dir / "c.json").string()).experiment.rounds, 1);
  EXPECT_EQ(LoadConfig("").experiment.rounds, ExperimentConfig{}.rounds);
  try {
    LoadConfig((dir / "missing.json").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(ConfigTest, DumpListsEverySection) {
  json j = json::parse(DumpConfig(ProtocolConfig{}));
  for (const char* section : {"task", "expert", "gate", "train", "experiment"}) {
    EXPECT_TRUE(j.contains(section)) << section;
  }
  EXPECT_EQ(j.at("train").at("method"), "IWR");
}

}  // namespace
}  // namespace iwr
