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

#ifndef IWR_CONFIG_H_
#define IWR_CONFIG_H_

#include <span>
#include <string>

#include "iwr/orchestrator.h"

namespace iwr {

// Config documents are JSON objects with the sections "task", "expert",
// "gate", "train" and "experiment". Every key is optional and defaults to the
// value in ProtocolConfig{}; unknown keys and mistyped values raise
// kConfigInvalid naming the key path (e.g. "train.epochs").
//
// Overrides have the form "section.key=value", where value is parsed as JSON
// and falls back to a plain string ("experiment.seeds=[0]",
// "train.method=IWR").
ProtocolConfig ParseConfig(const std::string& text,
                           std::span<const std::string> overrides = {});

// Empty path means defaults plus overrides.
ProtocolConfig LoadConfig(const std::string& path,
                          std::span<const std::string> overrides = {});

// Full document with every key; ParseConfig(DumpConfig(c)) == c bit-exactly.
std::string DumpConfig(const ProtocolConfig& config);

}  // namespace iwr

#endif  // IWR_CONFIG_H_
