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

#ifndef IWR_TOOLS_CLI_H_
#define IWR_TOOLS_CLI_H_

#include <iosfwd>

#include "iwr/errors.h"

namespace iwr {

// Process exit status for a failed command.
int ExitCodeFor(ErrorKind kind);

// Entry point of the iwr command line tool; returns the exit status.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace iwr

#endif  // IWR_TOOLS_CLI_H_
