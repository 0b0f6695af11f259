// Copyright 2026 The wormcrawl Authors
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

#ifndef WORMCRAWL_CLI_HPP_
#define WORMCRAWL_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace wormcrawl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    ///< bad flags or invalid configuration
inline constexpr int kExitRuntime = 2;  ///< the operation itself failed

/// Runs one subcommand. `args` excludes the program name. The one-line
/// summary goes to `out`; usage text and error messages go to `err`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wormcrawl

#endif  // WORMCRAWL_CLI_HPP_
