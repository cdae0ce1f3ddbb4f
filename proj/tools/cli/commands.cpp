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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "impgcn/checkpoint.hpp"
#include "impgcn/dataset.hpp"
#include "impgcn/metrics.hpp"
#include "impgcn/subgraph.hpp"
#include "impgcn/training.hpp"

namespace impgcn::cli {
namespace {

namespace fs = std::filesystem;

fs::path output_dir(const RunConfig& cfg) {
  const fs::path dir = cfg.get("out_dir");
  if (dir.empty()) throw UsageError("out_dir must not be empty");
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

std::string require(const RunConfig& cfg, const std::string& key) {
  const auto& v = cfg.get(key);
  if (v.empty()) {
    throw UsageError(std::string(command_name(cfg.command())) + " needs --" + key);
  }
  return v;
}

int get_positive_int(const RunConfig& cfg, const std::string& key, int min = 1) {
  const auto v = cfg.get_int(key);
  if (v < min || v > std::numeric_limits<int>::max()) {
    throw UsageError(key + " must be at least " + std::to_string(min));
  }
  return static_cast<int>(v);
}

DatasetSplit load_split(const RunConfig& cfg) {
  const fs::path dir = require(cfg, "data_dir");
  if (!fs::is_directory(dir)) throw DataError("data_dir " + dir.string() + " does not exist");
  return read_split(dir);
}

ModelOptions model_options(const RunConfig& cfg, int layers) {
  ModelOptions m;
  m.layers = layers;
  m.max_layers = std::max(layers, get_positive_int(cfg, "max_layers", 0));
  const auto& ablate = cfg.get("ablate");
  m.ablate_structure = ablate == "structure";
  m.ablate_first_order = ablate == "first-order";
  m.normalization = cfg.get("normalization") == "subgraph"
                        ? DegreeNormalization::kSubgraph
                        : DegreeNormalization::kFullGraph;
  m.threads = get_positive_int(cfg, "threads");
  return m;
}

template <typename To, typename From>
ModelState<To> cast_state(const ModelState<From>& s) {
  ModelState<To> out;
  out.user_embeddings = s.user_embeddings.template cast<To>();
  out.item_embeddings = s.item_embeddings.template cast<To>();
  out.grouping = s.grouping.template cast<To>();
  out.reset_moments();
  return out;
}

Checkpoint load_for_split(const RunConfig& cfg, const DatasetSplit& split) {
  const fs::path path = require(cfg, "checkpoint");
  if (!fs::exists(path)) throw DataError("checkpoint " + path.string() + " not found");
  auto ck = load_checkpoint(path, split.num_users(), split.num_items());
  if (ck.user_ids != split.user_ids || ck.item_ids != split.item_ids) {
    throw DataError("checkpoint " + path.string() +
                    " was trained on a different split (id maps differ)");
  }
  ck.state.grouping.leaky_slope = cfg.get_double("leaky_slope");
  return ck;
}

std::string percent(double x) { return fmt::format("{:.2f}%", 100.0 * x); }

std::string number(double x) {
  if (std::isnan(x)) return "nan";
  return fmt::format("{:.6f}", x);
}

}  // namespace

void cmd_prepare(const RunConfig& cfg) {
  const fs::path input = require(cfg, "input");
  const auto out = output_dir(cfg);
  cfg.write_effective(out);
  const auto k = get_positive_int(cfg, "k_core");

  const auto raw = ingest(input);
  spdlog::info("read {} interactions from {}", raw.size(), input.string());
  const auto filtered = k_core_filter(raw, k, cfg.get_bool("single_pass_core"));
  spdlog::info("{}-core keeps {} interactions", k, filtered.size());
  const SplitRatios ratios{cfg.get_double("train_ratio"),
                           cfg.get_double("validation_ratio"),
                           cfg.get_double("test_ratio")};
  const auto split = split_per_user(filtered, ratios,
                                    static_cast<std::uint64_t>(cfg.get_int("seed")));
  if (split.dropped > 0) {
    spdlog::warn("dropped {} held-out interactions on items without training data",
                 split.dropped);
  }
  write_split(split, out);

  const auto stats = compute_stats(split);
  auto name = cfg.get("dataset_name");
  if (name.empty()) name = input.stem().string();
  write_file(out / "stats.txt",
             fmt::format("dataset\t#user\t#item\t#interactions\tsparsity\n"
                         "{}\t{}\t{}\t{}\t{}\n",
                         name, stats.users, stats.items, stats.interactions,
                         percent(stats.sparsity)));
  spdlog::info("{}: {} users, {} items, {} interactions, sparsity {}", name,
               stats.users, stats.items, stats.interactions, percent(stats.sparsity));
}

namespace {

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.model = model_options(cfg, get_positive_int(cfg, "layers", 0));
  t.groups = get_positive_int(cfg, "groups");
  if (cfg.get("model") == "lightgcn") {
    if (t.groups != 1 && cfg.source("groups") != Source::kDefault) {
      spdlog::warn("model=lightgcn ignores groups={}", t.groups);
    }
    t.groups = 1;
  }
  t.dim = get_positive_int(cfg, "dim");
  t.learning_rate = cfg.get_double("learning_rate");
  t.batch_size = static_cast<std::size_t>(get_positive_int(cfg, "batch_size"));
  t.reg = cfg.get_double("reg");
  t.max_epochs = get_positive_int(cfg, "max_epochs");
  t.eval_every = get_positive_int(cfg, "eval_every");
  t.patience = get_positive_int(cfg, "patience");
  t.cutoff = static_cast<std::size_t>(get_positive_int(cfg, "cutoff"));
  t.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  t.refresh = cfg.get("refresh") == "batch" ? PartitionRefresh::kBatch
                                            : PartitionRefresh::kEpoch;
  t.leaky_slope = cfg.get_double("leaky_slope");
  t.precision = cfg.get("precision") == "double" ? Precision::kDouble : Precision::kFloat;
  t.validate();
  return t;
}

template <typename Real>
void run_training(const DatasetSplit& split, const TrainConfig& tc,
                  const fs::path& out) {
  const auto graph = split.train_graph();
  const std::span<const Interaction> exclude[] = {split.train};
  const auto validation = EvalTask::from_interactions(
      split.num_users(), split.num_items(), split.validation, exclude);

  std::ofstream curve(out / "curve.tsv", std::ios::binary);
  if (!curve) throw DataError("cannot write " + (out / "curve.tsv").string());
  curve << "epoch\tloss\tval_recall\tval_ndcg\n";
  const auto result = train<Real>(graph, validation, tc, [&](const CurvePoint& p) {
    curve << p.epoch << '\t' << number(p.loss) << '\t' << number(p.val_recall) << '\t'
          << number(p.val_ndcg) << '\n';
    curve.flush();
  });

  std::string hist = "epoch\tentropy";
  for (NodeId s = 0; s < tc.groups; ++s) hist += fmt::format("\tgroup_{}", s);
  hist += '\n';
  for (const auto& snap : result.partitions) {
    hist += fmt::format("{}\t{}", snap.epoch, number(snap.entropy));
    for (auto n : snap.group_sizes) hist += fmt::format("\t{}", n);
    hist += '\n';
  }
  write_file(out / "groups_per_epoch.tsv", hist);

  Checkpoint ck;
  ck.state = cast_state<float>(result.best_state);
  ck.layers = static_cast<std::uint32_t>(tc.model.layers);
  ck.user_ids = split.user_ids;
  ck.item_ids = split.item_ids;
  save_checkpoint(ck, out / "checkpoint.bin");

  write_file(out / "summary.txt",
             fmt::format("best_epoch={}\nbest_val_recall={}\nepochs_run={}\n"
                         "early_stopped={}\n",
                         result.best_epoch, number(result.best_recall),
                         result.epochs_run, result.early_stopped));
  spdlog::info("best validation recall@{} {:.5f} at epoch {} ({} epochs run)",
               tc.cutoff, result.best_recall, result.best_epoch, result.epochs_run);
}

}  // namespace

void cmd_train(const RunConfig& cfg) {
  const auto out = output_dir(cfg);
  auto effective = cfg;
  if (cfg.get("model") == "lightgcn") effective.set("groups", "1");
  effective.write_effective(out);
  const auto tc = train_config(cfg);
  const auto split = load_split(cfg);
  if (tc.precision == Precision::kDouble) {
    run_training<double>(split, tc, out);
  } else {
    run_training<float>(split, tc, out);
  }
}

namespace {

template <typename Real>
void run_eval(const RunConfig& cfg, const DatasetSplit& split, const Checkpoint& ck,
              const fs::path& out) {
  const auto state = cast_state<Real>(ck.state);
  const auto options = model_options(cfg, static_cast<int>(ck.layers));
  const auto inference = infer(state, split.train_graph(), options);

  const bool on_test = cfg.get("split") == "test";
  std::vector<std::span<const Interaction>> exclude{split.train};
  if (on_test) exclude.emplace_back(split.validation);
  const auto task = EvalTask::from_interactions(
      split.num_users(), split.num_items(), on_test ? split.test : split.validation,
      exclude);

  EvalOptions eo;
  eo.cutoff = static_cast<std::size_t>(get_positive_int(cfg, "cutoff"));
  eo.threads = options.threads;
  const bool per_group = cfg.get_bool("per_group");
  if (per_group) {
    eo.group_of_user = &inference.partition.group_of_user();
    eo.num_groups = inference.partition.num_groups();
  }
  const auto report = evaluate(inference.stack.final_users, inference.stack.final_items,
                               task, eo);
  write_file(out / "metrics.tsv",
             fmt::format("metric\tcutoff\tvalue\nrecall\t{0}\t{1}\nndcg\t{0}\t{2}\n"
                         "users\t{0}\t{3}\n",
                         report.cutoff, number(report.recall), number(report.ndcg),
                         report.num_users));
  if (per_group) {
    std::string text = "group\tusers\trecall\tndcg\n";
    for (const auto& g : report.per_group) {
      text += fmt::format("{}\t{}\t{}\t{}\n", g.group, g.num_users, number(g.recall),
                          number(g.ndcg));
    }
    write_file(out / "metrics_by_group.tsv", text);
  }
  spdlog::info("{} recall@{} {:.5f}  ndcg@{} {:.5f}  over {} users", cfg.get("split"),
               report.cutoff, report.recall, report.cutoff, report.ndcg, report.num_users);
}

}  // namespace

void cmd_eval(const RunConfig& cfg) {
  const auto out = output_dir(cfg);
  cfg.write_effective(out);
  const auto split = load_split(cfg);
  const auto ck = load_for_split(cfg, split);
  if (cfg.get("precision") == "double") {
    run_eval<double>(cfg, split, ck, out);
  } else {
    run_eval<float>(cfg, split, ck, out);
  }
}

void cmd_coverage(const RunConfig& cfg) {
  const auto out = output_dir(cfg);
  cfg.write_effective(out);
  const auto split = load_split(cfg);
  const auto graph = split.train_graph();
  const int max_k = get_positive_int(cfg, "max_k", 0);
  CoverageOptions co;
  co.users_only = cfg.get_bool("users_only");
  co.exact_node_cap = cfg.get_int("exact_node_cap");
  co.sample_size = cfg.get_int("sample_size");
  co.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  co.threads = get_positive_int(cfg, "threads");

  const auto profile = coverage_profile(graph, max_k, co);
  std::string text = "k\tmean_coverage\n";
  for (int k = std::min(1, max_k); k <= max_k; ++k) {
    text += fmt::format("{}\t{}\n", k, number(profile[k]));
  }
  write_file(out / "coverage.tsv", text);

  if (cfg.get_bool("per_group")) {
    const auto ck = load_for_split(cfg, split);
    const auto options = model_options(cfg, static_cast<int>(ck.layers));
    const auto partition =
        build_partition(graph, ck.state.user_embeddings, ck.state.item_embeddings,
                        ck.state.grouping, options.partition_options());
    std::string groups = "group\tusers\tk\twhole_graph\twithin_group\n";
    for (const auto& g : group_coverage_profile(graph, partition, max_k, co)) {
      for (int k = std::min(1, max_k); k <= max_k; ++k) {
        groups += fmt::format("{}\t{}\t{}\t{}\t{}\n", g.group, g.num_users, k,
                              number(g.whole_graph[k]), number(g.within_group[k]));
      }
    }
    write_file(out / "coverage_by_group.tsv", groups);
  }
  spdlog::info("mean coverage at k={}: {:.4f}", max_k, profile[max_k]);
}

void cmd_groups(const RunConfig& cfg) {
  const auto out = output_dir(cfg);
  cfg.write_effective(out);
  const auto split = load_split(cfg);
  const auto ck = load_for_split(cfg, split);
  const auto options = model_options(cfg, static_cast<int>(ck.layers));
  const auto partition =
      build_partition(split.train_graph(), ck.state.user_embeddings,
                      ck.state.item_embeddings, ck.state.grouping,
                      options.partition_options());
  std::string text = "user_id\tgroup\n";
  for (NodeId u = 0; u < split.num_users(); ++u) {
    text += fmt::format("{}\t{}\n", split.user_ids[u], partition.group_of(u));
  }
  write_file(out / "groups.tsv", text);
  const auto sizes = partition.group_sizes();
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    spdlog::info("group {}: {} users", s, sizes[s]);
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("impgcn", sink);
  logger->set_pattern("[%H:%M:%S] [%l] %v");
  // `err` may not outlive this call.
  struct RestoreLogger {
    std::shared_ptr<spdlog::logger> previous = spdlog::default_logger();
    ~RestoreLogger() { spdlog::set_default_logger(previous); }
  } restore;
  spdlog::set_default_logger(logger);

  CLI::App app{"Graph convolutional recommender with interest-aware message passing",
               "impgcn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "impgcn 0.1.0");

  struct Sub {
    Command command;
    CLI::App* app;
    std::string config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  const std::vector<std::pair<Command, std::string>> commands{
      {Command::kPrepare, "split raw interactions into train/validation/test"},
      {Command::kTrain, "train a model on a prepared split"},
      {Command::kEval, "evaluate a checkpoint on a prepared split"},
      {Command::kCoverage, "report how many nodes k-hop propagation reaches"},
      {Command::kGroups, "dump the user-to-group assignment of a checkpoint"}};
  std::vector<std::unique_ptr<Sub>> subs;
  for (const auto& [command, help] : commands) {
    auto sub = std::make_unique<Sub>();
    sub->command = command;
    sub->app = app.add_subcommand(std::string(command_name(command)), help);
    sub->app->add_option("--config", sub->config_file, "key=value config file");
    for (const auto& key : key_table()) {
      if (!key.used_by(command)) continue;
      std::string names = "--" + key.name;
      auto dashed = key.name;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key.name) names += ",--" + dashed;
      const auto help_text =
          fmt::format("{} (default: {}; env {})", key.help,
                      key.default_value.empty() ? "none" : key.default_value,
                      key.env_name());
      auto& target = sub->values[key.name];
      CLI::Option* opt = nullptr;
      if (key.kind == KeyKind::kBool) {
        opt = sub->app->add_option(names, target, help_text)
                  ->expected(0, 1)
                  ->default_str("true");
        // A bare flag means true.
        opt->each([&target](const std::string& v) {
          if (v.empty()) target = "true";
        });
      } else {
        opt = sub->app->add_option(names, target, help_text);
      }
      if (key.kind == KeyKind::kChoice) opt->check(CLI::IsMember(key.choices));
      sub->options[key.name] = opt;
    }
    subs.push_back(std::move(sub));
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  for (const auto& sub : subs) {
    if (!sub->app->parsed()) continue;
    try {
      std::map<std::string, std::string> flags;
      for (const auto& [key, opt] : sub->options) {
        if (opt->count() > 0) {
          flags[key] = sub->values[key].empty() && find_key(key)->kind == KeyKind::kBool
                           ? "true"
                           : sub->values[key];
        }
      }
      const auto cfg = RunConfig::resolve(sub->command, sub->config_file, flags);
      logger->set_level(spdlog::level::from_str(cfg.get("log_level")));
      switch (sub->command) {
        case Command::kPrepare: cmd_prepare(cfg); break;
        case Command::kTrain: cmd_train(cfg); break;
        case Command::kEval: cmd_eval(cfg); break;
        case Command::kCoverage: cmd_coverage(cfg); break;
        case Command::kGroups: cmd_groups(cfg); break;
      }
      return 0;
    } catch (const UsageError& e) {
      spdlog::error("{}", e.what());
      return 1;
    } catch (const DataError& e) {
      spdlog::error("{}", e.what());
      return 2;
    } catch (const NumericalError& e) {
      spdlog::error("numerical failure: {}", e.what());
      return 3;
    } catch (const std::exception& e) {
      spdlog::error("{}", e.what());
      return 2;
    }
  }
  return 1;
}

}  // namespace impgcn::cli
