// Copyright 2026 The HQLM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>

namespace hqlm {

/// Exit codes of the command-line runner.
enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitUsage = 2, kExitIo = 3 };

/// Runs `hqlm <subcommand> ...`. Never throws; errors become exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hqlm
