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

#ifndef IMPGCN_TOOLS_RUN_CONFIG_HPP_
#define IMPGCN_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace impgcn::cli {

enum class Command { kPrepare, kTrain, kEval, kCoverage, kGroups };

std::string_view command_name(Command command);

enum class KeyKind { kString, kInt, kFloat, kBool, kChoice };

struct KeySpec {
  std::string name;
  std::string default_value;
  KeyKind kind = KeyKind::kString;
  std::vector<std::string> choices;  // kChoice only
  std::vector<Command> commands;     // commands that read the key
  std::string help;

  bool used_by(Command command) const;
  std::string env_name() const;  // IMPGCN_<UPPER_NAME>
};

/// Every recognised configuration key.
const std::vector<KeySpec>& key_table();
const KeySpec* find_key(std::string_view name);

enum class Source { kDefault, kFile, kEnv, kFlag };

/// Flat key=value settings resolved as default < file < env < flag.
class RunConfig {
 public:
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  /// `file` may be empty. Unknown keys in the file, and values that do not
  /// parse for their key, throw UsageError.
  static RunConfig resolve(Command command, const std::filesystem::path& file,
                           const std::map<std::string, std::string>& flags,
                           const EnvLookup& env = process_env);

  static std::optional<std::string> process_env(const std::string& name);

  Command command() const { return command_; }

  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  Source source(const std::string& key) const;

  /// Replaces a value after resolution (keeps its source).
  void set(const std::string& key, const std::string& value);

  /// `key=value` lines for the keys the command reads, sorted by key.
  std::string effective_text() const;
  void write_effective(const std::filesystem::path& dir) const;

 private:
  Command command_ = Command::kTrain;
  std::map<std::string, std::string> values_;
  std::map<std::string, Source> sources_;
};

/// Parses `key=value` lines; `#` starts a comment. Unknown keys throw.
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& source);

/// Throws UsageError unless `value` is valid for the key.
void check_value(const KeySpec& key, const std::string& value);

}  // namespace impgcn::cli

#endif  // IMPGCN_TOOLS_RUN_CONFIG_HPP_
