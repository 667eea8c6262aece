// Copyright 2026 The robustec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: estimate, simulate and bench.
//
// Exit codes: 0 success, 1 estimation failure, 2 input or validation
// failure, 64 usage error.

#ifndef ROBUSTEC_TOOLS_CLI_H_
#define ROBUSTEC_TOOLS_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace robustec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitEstimation = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitUsage = 64;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// FNV-1a 64-bit digest rendered as "fnv1a64:<16 hex digits>".
std::string input_digest(std::string_view bytes);

}  // namespace robustec::cli

#endif  // ROBUSTEC_TOOLS_CLI_H_
