// Copyright 2026 The hpmrec Authors
// SPDX-License-Identifier: Apache-2.0
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

// hpmrec command-line driver.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hpmrec/config.hpp"
#include "hpmrec/data.hpp"
#include "hpmrec/errors.hpp"
#include "hpmrec/graphs.hpp"
#include "hpmrec/optim.hpp"
#include "hpmrec/train.hpp"

namespace {

using hpmrec::RunConfig;
namespace fs = std::filesystem;

constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw hpmrec::InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void require_dir(const fs::path& dir, const char* what) {
  if (dir.empty()) throw hpmrec::ConfigError(std::string("--") + what + " is required");
  if (!fs::is_directory(dir)) throw hpmrec::InputError(dir.string() + ": no such directory");
}

struct Inputs {
  hpmrec::PreparedData data;
  hpmrec::FeatureMatrix visual;
  hpmrec::FeatureMatrix textual;
};

Inputs load_inputs(const RunConfig& cfg) {
  require_dir(cfg.data_dir, "data-dir");
  Inputs in;
  in.data = hpmrec::read_split(cfg.data_dir);
  const auto items = in.data.split.num_items;
  in.visual = hpmrec::load_features(cfg.data_dir / "visual.hpmf", items, hpmrec::Modality::kVisual);
  in.textual = hpmrec::load_features(cfg.data_dir / "textual.hpmf", items, hpmrec::Modality::kTextual);
  return in;
}

int run_prepare(const RunConfig& cfg) {
  if (cfg.interactions.empty()) throw hpmrec::ConfigError("--interactions is required");
  const auto raw = hpmrec::load_interactions(cfg.interactions);
  const auto table = hpmrec::kcore_filter(raw, cfg.kcore);
  hpmrec::SplitOptions opts;
  opts.ratios = cfg.split_ratios;
  opts.seed = cfg.hp.seed;
  opts.global = cfg.global_split;
  const auto split = hpmrec::split_dataset(table, opts);
  fs::create_directories(cfg.out_dir);
  hpmrec::write_split(cfg.out_dir, table, split, cfg.kcore);

  // Raw feature rows follow the first-seen item order of the raw file.
  std::unordered_map<std::string, std::size_t> raw_index;
  for (std::size_t i = 0; i < raw.item_ids.size(); ++i) raw_index.emplace(raw.item_ids[i], i);
  std::vector<std::size_t> keep;
  keep.reserve(table.item_ids.size());
  for (const auto& id : table.item_ids) keep.push_back(raw_index.at(id));
  const std::pair<const fs::path*, hpmrec::Modality> feats[] = {
      {&cfg.visual, hpmrec::Modality::kVisual}, {&cfg.textual, hpmrec::Modality::kTextual}};
  for (const auto& [path, modality] : feats) {
    if (path->empty()) {
      std::cerr << "warning: no " << hpmrec::modality_name(modality)
                << " features given; train needs them\n";
      continue;
    }
    const auto f = hpmrec::load_features(*path, raw.num_items, modality);
    hpmrec::save_features(hpmrec::select_rows(f, keep),
                          cfg.out_dir / (std::string(hpmrec::modality_name(modality)) + ".hpmf"));
  }
  std::cout << "prepared " << table.num_users << " users, " << table.num_items << " items, "
            << table.pairs.size() << " interactions -> " << cfg.out_dir.string() << '\n';
  return 0;
}

int run_build_graph(const RunConfig& cfg) {
  const auto in = load_inputs(cfg);
  fs::create_directories(cfg.out_dir);
  for (const auto* f : {&in.visual, &in.textual}) {
    const auto graph = hpmrec::build_knn_graph(*f, cfg.hp.knn_k, cfg.threads);
    const auto path = cfg.out_dir / (std::string(hpmrec::modality_name(f->modality)) + ".hpms");
    hpmrec::write_sparse(graph, path);
    std::cout << "wrote " << path.string() << " (" << graph.nnz() << " edges)\n";
  }
  return 0;
}

template <typename T>
int run_train(const RunConfig& cfg) {
  const auto in = load_inputs(cfg);
  const auto& split = in.data.split;
  fs::create_directories(cfg.out_dir);
  write_json(cfg.out_dir / "config.json", hpmrec::config_to_json(cfg));
  const auto ctx = hpmrec::build_context<T>(split.train, split.num_users, split.num_items, in.visual,
                                            in.textual, cfg.hp, cfg.threads);
  hpmrec::FitOptions opts;
  opts.out_dir = cfg.out_dir;
  opts.threads = cfg.threads;
  opts.progress = &std::cerr;
  const auto res = hpmrec::fit<T>(split, ctx, cfg.hp, opts);
  const auto test =
      hpmrec::evaluate_split<T>(res.best_params, ctx, cfg.hp, split, hpmrec::EvalSplit::kTest, cfg.threads);
  nlohmann::ordered_json report;
  report["hyperparams"] = hpmrec::hyperparams_to_json(cfg.hp);
  report["epochs_run"] = res.history.size();
  report["early_stopped"] = res.early_stopped;
  report["best_epoch"] = res.best_epoch;
  report["best_valid"] = res.best_valid.to_json();
  report["test"] = test.to_json();
  report["checkpoint"] = (cfg.out_dir / "best.ckpt").string();
  write_json(cfg.out_dir / "report.json", report);
  std::cout << report.dump(2) << '\n';
  return 0;
}

template <typename T>
int run_evaluate(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw hpmrec::ConfigError("--checkpoint is required");
  const auto in = load_inputs(cfg);
  const auto& split = in.data.split;
  const auto ctx = hpmrec::build_context<T>(split.train, split.num_users, split.num_items, in.visual,
                                            in.textual, cfg.hp, cfg.threads);
  auto params = hpmrec::init_params<T>(cfg.hp, ctx, cfg.hp.seed);
  hpmrec::restore_checkpoint<T>(hpmrec::read_checkpoint(cfg.checkpoint), params, nullptr);
  const auto which = cfg.eval_split == "valid" ? hpmrec::EvalSplit::kValid : hpmrec::EvalSplit::kTest;
  const auto metrics = hpmrec::evaluate_split<T>(params, ctx, cfg.hp, split, which, cfg.threads);
  auto j = metrics.to_json();
  fs::create_directories(cfg.out_dir);
  write_json(cfg.out_dir / ("metrics_" + cfg.eval_split + ".json"), j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

template <typename T>
int run_grid(const RunConfig& cfg) {
  const auto in = load_inputs(cfg);
  fs::create_directories(cfg.out_dir);
  write_json(cfg.out_dir / "config.json", hpmrec::config_to_json(cfg));
  hpmrec::FitOptions opts;
  opts.out_dir = cfg.out_dir;
  opts.threads = cfg.threads;
  const auto report = hpmrec::grid_search<T>(in.data.split, in.visual, in.textual, cfg.hp, cfg.grid, opts);
  auto j = report.to_json();
  j["checkpoint"] = (cfg.out_dir / ("run_" + std::to_string(report.best_index)) / "best.ckpt").string();
  write_json(cfg.out_dir / "grid_report.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_gradcheck(const RunConfig& cfg, const std::map<std::string, bool>& explicit_keys) {
  // The check runs on a tiny model; shape keys apply only when given.
  hpmrec::HyperParams hp = cfg.hp;
  if (!explicit_keys.count("n_exp")) hp.n_exp = 1;
  if (!explicit_keys.count("dim")) hp.dim = hp.encoder_mode == hpmrec::EncoderMode::kFull ? 2 : hp.num_components();
  if (!explicit_keys.count("layers")) hp.layers = 1;
  if (!explicit_keys.count("reg_weight")) hp.reg_weight = 1e-2;
  if (!explicit_keys.count("ssl_weight")) hp.ssl_weight = 1e-1;
  const auto problem = hpmrec::make_gradcheck_problem(hp.seed, hp);
  const auto report = hpmrec::grad_check(problem, cfg.gradcheck_tolerance, cfg.gradcheck_step, hp.seed);
  auto j = report.to_json();
  fs::create_directories(cfg.out_dir);
  write_json(cfg.out_dir / "gradcheck.json", j);
  std::cout << j.dump(2) << '\n';
  return report.passed ? 0 : kExitFailure;
}

// Registers one flag per config key (grid keys as --grid-<key>) and returns
// a callback that turns the flags given on the command line into a JSON
// patch with the same keys.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App& app) {
    const auto defaults = hpmrec::config_to_json(RunConfig{});
    for (const auto& [key, value] : defaults.items()) {
      if (key == "grid") {
        for (const auto& [gk, gv] : value.items()) add(app, "grid_" + gk, gv, "grid", gk);
      } else {
        add(app, key, value, "", key);
      }
    }
  }

  nlohmann::json patch(std::map<std::string, bool>* given) const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& e : entries_) {
      if (e.option->count() == 0) continue;
      nlohmann::json v;
      if (e.kind == Kind::kBool) {
        v = *e.flag;
      } else if (e.kind == Kind::kString) {
        v = *e.text;
      } else if (e.kind == Kind::kNumber) {
        v = parse_number(*e.text, e.option->get_name());
      } else {
        v = nlohmann::json::array();
        std::stringstream ss(*e.text);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (e.string_items) v.push_back(item);
          else v.push_back(parse_number(item, e.option->get_name()));
        }
      }
      if (e.parent.empty()) j[e.key] = v;
      else j[e.parent][e.key] = v;
      if (given) (*given)[e.parent.empty() ? e.key : e.parent + "." + e.key] = true;
    }
    return j;
  }

 private:
  enum class Kind { kBool, kString, kNumber, kList };
  struct Entry {
    std::string parent;
    std::string key;
    Kind kind;
    bool string_items = false;
    CLI::Option* option = nullptr;
    std::shared_ptr<bool> flag = std::make_shared<bool>(false);
    std::shared_ptr<std::string> text = std::make_shared<std::string>();
  };

  static nlohmann::json parse_number(const std::string& s, const std::string& flag) {
    try {
      auto v = nlohmann::json::parse(s);
      if (v.is_number()) return v;
    } catch (const nlohmann::json::exception&) {
    }
    throw hpmrec::ConfigError(flag + ": expected a number, got '" + s + "'");
  }

  void add(CLI::App& app, const std::string& name, const nlohmann::ordered_json& def,
           const std::string& parent, const std::string& key) {
    std::string flag = "--" + name;
    for (auto& c : flag) c = c == '_' ? '-' : c;
    if (key == "eval_split") flag += ",--split";
    Entry e;
    e.parent = parent;
    e.key = key;
    const std::string help = "config key " + (parent.empty() ? key : parent + "." + key) +
                             " (default " + def.dump() + ")";
    if (def.is_boolean()) {
      e.kind = Kind::kBool;
      e.option = app.add_flag(flag, *e.flag, help);
    } else if (def.is_string()) {
      e.kind = Kind::kString;
      e.option = app.add_option(flag, *e.text, help);
    } else if (def.is_number()) {
      e.kind = Kind::kNumber;
      e.option = app.add_option(flag, *e.text, help);
    } else {
      e.kind = Kind::kList;
      e.string_items = !def.empty() && def.front().is_string();
      e.option = app.add_option(flag, *e.text, help + ", comma separated");
    }
    if (key == "threads") e.option->envname("HPMREC_THREADS");
    entries_.push_back(std::move(e));
  }

  std::vector<Entry> entries_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypercomplex prompt-aware multimodal recommender"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON config file; flags override its keys");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  ConfigFlags flags(app);

  auto* prepare = app.add_subcommand("prepare", "load interactions, apply the k-core filter, split");
  auto* build_graph = app.add_subcommand("build-graph", "export the item-item kNN graphs");
  auto* train = app.add_subcommand("train", "fit a model with early stopping");
  auto* evaluate = app.add_subcommand("evaluate", "rank with a saved checkpoint");
  auto* grid = app.add_subcommand("grid-search", "fit every point of the hyperparameter grid");
  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic and numerical gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    RunConfig cfg;
    std::map<std::string, bool> given;
    const auto patch = flags.patch(&given);
    if (!config_path.empty()) {
      cfg = hpmrec::load_config(config_path);
    } else if (*evaluate && patch.contains("checkpoint")) {
      // Default to the configuration the checkpoint was trained with.
      const auto saved = fs::path(patch["checkpoint"].get<std::string>()).parent_path() / "config.json";
      if (fs::exists(saved)) cfg = hpmrec::load_config(saved);
    }
    cfg = hpmrec::config_from_json(patch, cfg);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      const auto file = nlohmann::json::parse(in);
      for (const auto& [k, v] : file.items()) given[k] = true;
    }
    cfg.validate();
    if (print_config) {
      std::cout << hpmrec::config_to_json(cfg).dump(2) << '\n';
      return 0;
    }
    const bool f32 = cfg.precision == hpmrec::Precision::kFloat32;
    if (*prepare) return run_prepare(cfg);
    if (*build_graph) return run_build_graph(cfg);
    if (*train) return f32 ? run_train<float>(cfg) : run_train<double>(cfg);
    if (*evaluate) return f32 ? run_evaluate<float>(cfg) : run_evaluate<double>(cfg);
    if (*grid) return f32 ? run_grid<float>(cfg) : run_grid<double>(cfg);
    if (*gradcheck) return run_gradcheck(cfg, given);
  } catch (const hpmrec::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const hpmrec::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
