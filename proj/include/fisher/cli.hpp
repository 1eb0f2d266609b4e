// Copyright 2026 The fisher-cpp Authors. All Rights Reserved.
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

#ifndef FISHER_CLI_HPP_
#define FISHER_CLI_HPP_

#include <exception>
#include <ostream>
#include <string>
#include <vector>

namespace fisher {

/// Exit status for an exception: 1 usage, 2 data, 3 numerical divergence.
int exit_code_for(const std::exception& error);

/// Runs one command. `args` excludes the program name. Usage text goes to
/// `out`; logs and the JSON error record go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fisher

#endif  // FISHER_CLI_HPP_
