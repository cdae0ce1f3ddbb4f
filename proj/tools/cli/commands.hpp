// Copyright 2026 The impgcn Authors.
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

#ifndef IMPGCN_TOOLS_COMMANDS_HPP_
#define IMPGCN_TOOLS_COMMANDS_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace impgcn::cli {

// Each command writes its artifacts plus config.<command>.txt into out_dir.
void cmd_prepare(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_eval(const RunConfig& config);
void cmd_coverage(const RunConfig& config);
void cmd_groups(const RunConfig& config);

/// Full command line (without the program name). Returns the exit code:
/// 0 ok, 1 usage, 2 data, 3 numerical.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace impgcn::cli

#endif  // IMPGCN_TOOLS_COMMANDS_HPP_
