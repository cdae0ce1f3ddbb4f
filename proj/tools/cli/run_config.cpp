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

#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "impgcn/common.hpp"

namespace impgcn::cli {
namespace {

using C = Command;
const std::vector<C> kAll{C::kPrepare, C::kTrain, C::kEval, C::kCoverage, C::kGroups};
const std::vector<C> kOnSplit{C::kTrain, C::kEval, C::kCoverage, C::kGroups};
const std::vector<C> kModel{C::kTrain, C::kEval, C::kCoverage, C::kGroups};

std::vector<KeySpec> build_table() {
  const auto s = KeyKind::kString;
  const auto i = KeyKind::kInt;
  const auto f = KeyKind::kFloat;
  const auto b = KeyKind::kBool;
  const auto c = KeyKind::kChoice;
  return {
      // shared
      {"out_dir", "out", s, {}, kAll, "output directory"},
      {"threads", "1", i, {}, kAll, "worker threads (1 is bitwise deterministic)"},
      {"seed", "2020", i, {}, kAll, "random seed"},
      {"log_level", "info", c, {"trace", "debug", "info", "warn", "error", "off"}, kAll,
       "log verbosity"},
      // prepare
      {"input", "", s, {}, {C::kPrepare}, "raw interaction file"},
      {"dataset_name", "", s, {}, {C::kPrepare}, "name in stats.txt, input stem when unset"},
      {"k_core", "10", i, {}, {C::kPrepare}, "k-core threshold"},
      {"single_pass_core", "false", b, {}, {C::kPrepare}, "one filtering pass instead of peeling"},
      {"train_ratio", "0.8", f, {}, {C::kPrepare}, "training share per user"},
      {"validation_ratio", "0.1", f, {}, {C::kPrepare}, "validation share per user"},
      {"test_ratio", "0.1", f, {}, {C::kPrepare}, "test share per user"},
      // split consumers
      {"data_dir", "", s, {}, kOnSplit, "directory written by prepare"},
      // model
      {"model", "impgcn", c, {"impgcn", "lightgcn"}, {C::kTrain}, "lightgcn means one group"},
      {"layers", "3", i, {}, {C::kTrain}, "propagation layers K"},
      {"max_layers", "8", i, {}, {C::kTrain}, "upper bound on layers"},
      {"groups", "3", i, {}, {C::kTrain}, "user groups N_s"},
      {"dim", "64", i, {}, {C::kTrain}, "embedding size"},
      {"ablate", "none", c, {"none", "structure", "first-order"}, kModel,
       "grouping without graph structure, or per-group first layer"},
      {"normalization", "full", c, {"full", "subgraph"}, kModel,
       "edge weights from whole-graph or in-group item degrees"},
      {"leaky_slope", "0.2", f, {}, kModel, "LeakyReLU slope of the grouping network"},
      // training
      {"learning_rate", "0.001", f, {}, {C::kTrain}, "Adam learning rate"},
      {"batch_size", "1024", i, {}, {C::kTrain}, "triplets per mini-batch"},
      {"reg", "0.0001", f, {}, {C::kTrain}, "L2 coefficient"},
      {"max_epochs", "1000", i, {}, {C::kTrain}, "epoch limit"},
      {"eval_every", "5", i, {}, {C::kTrain}, "epochs between validations"},
      {"patience", "10", i, {}, {C::kTrain}, "validations without gain before stopping"},
      {"refresh", "epoch", c, {"epoch", "batch"}, {C::kTrain}, "when to regroup users"},
      {"precision", "float", c, {"float", "double"}, {C::kTrain, C::kEval},
       "arithmetic precision"},
      {"cutoff", "20", i, {}, {C::kTrain, C::kEval}, "top-n cutoff"},
      // eval / diagnostics
      {"checkpoint", "", s, {}, {C::kEval, C::kCoverage, C::kGroups}, "checkpoint file"},
      {"split", "test", c, {"test", "validation"}, {C::kEval}, "split to evaluate"},
      {"per_group", "false", b, {}, {C::kEval, C::kCoverage}, "also report per group"},
      {"max_k", "8", i, {}, {C::kCoverage}, "largest hop count"},
      {"users_only", "false", b, {}, {C::kCoverage}, "average over users only"},
      {"exact_node_cap", "50000", i, {}, {C::kCoverage}, "exact average up to this many nodes"},
      {"sample_size", "5000", i, {}, {C::kCoverage}, "sampled sources beyond the cap"},
  };
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<bool> parse_bool(const std::string& v) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  return std::nullopt;
}

template <typename T>
std::optional<T> parse_number(const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return out;
}

const KeySpec& require_key(const std::string& name) {
  const auto* k = find_key(name);
  if (k == nullptr) throw UsageError("unknown config key '" + name + "'");
  return *k;
}

}  // namespace

std::string_view command_name(Command command) {
  switch (command) {
    case Command::kPrepare: return "prepare";
    case Command::kTrain: return "train";
    case Command::kEval: return "eval";
    case Command::kCoverage: return "coverage";
    case Command::kGroups: return "groups";
  }
  return "?";
}

bool KeySpec::used_by(Command command) const {
  return std::find(commands.begin(), commands.end(), command) != commands.end();
}

std::string KeySpec::env_name() const {
  std::string out = "IMPGCN_";
  for (char ch : name) out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = build_table();
  return table;
}

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void check_value(const KeySpec& key, const std::string& value) {
  const auto fail = [&](const std::string& what) {
    throw UsageError("invalid value '" + value + "' for " + key.name + ": " + what);
  };
  switch (key.kind) {
    case KeyKind::kString:
      break;
    case KeyKind::kInt:
      if (!parse_number<std::int64_t>(value)) fail("expected an integer");
      break;
    case KeyKind::kFloat: {
      const auto d = parse_number<double>(value);
      if (!d || !std::isfinite(*d)) fail("expected a finite number");
      break;
    }
    case KeyKind::kBool:
      if (!parse_bool(value)) fail("expected true or false");
      break;
    case KeyKind::kChoice:
      if (std::find(key.choices.begin(), key.choices.end(), value) == key.choices.end()) {
        std::string list;
        for (const auto& c : key.choices) list += (list.empty() ? "" : ", ") + c;
        fail("expected one of " + list);
      }
      break;
  }
}

std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& source) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const auto where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) throw UsageError(where + ": expected key=value");
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (find_key(key) == nullptr) {
      throw UsageError(where + ": unknown config key '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

std::optional<std::string> RunConfig::process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

RunConfig RunConfig::resolve(Command command, const std::filesystem::path& file,
                             const std::map<std::string, std::string>& flags,
                             const EnvLookup& env) {
  RunConfig cfg;
  cfg.command_ = command;
  for (const auto& k : key_table()) {
    cfg.values_[k.name] = k.default_value;
    cfg.sources_[k.name] = Source::kDefault;
  }
  const auto apply = [&](const std::map<std::string, std::string>& layer, Source src) {
    for (const auto& [key, value] : layer) {
      check_value(require_key(key), value);
      cfg.values_[key] = value;
      cfg.sources_[key] = src;
    }
  };
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw UsageError("cannot read config file " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    apply(parse_config_text(buf.str(), file.string()), Source::kFile);
  }
  if (env) {
    std::map<std::string, std::string> from_env;
    for (const auto& k : key_table()) {
      if (auto v = env(k.env_name())) from_env[k.name] = *v;
    }
    apply(from_env, Source::kEnv);
  }
  apply(flags, Source::kFlag);
  return cfg;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  return *parse_number<std::int64_t>(get(key));
}

double RunConfig::get_double(const std::string& key) const {
  return *parse_number<double>(get(key));
}

bool RunConfig::get_bool(const std::string& key) const {
  return *parse_bool(get(key));
}

Source RunConfig::source(const std::string& key) const {
  get(key);
  return sources_.at(key);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  check_value(require_key(key), value);
  values_[key] = value;
}

std::string RunConfig::effective_text() const {
  std::ostringstream out;
  out << "# effective configuration for '" << command_name(command_) << "'\n";
  for (const auto& [key, value] : values_) {
    if (find_key(key)->used_by(command_)) out << key << '=' << value << '\n';
  }
  return out.str();
}

void RunConfig::write_effective(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const auto path = dir / ("config." + std::string(command_name(command_)) + ".txt");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << effective_text();
}

}  // namespace impgcn::cli
