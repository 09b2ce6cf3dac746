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

#include "hpmrec/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "hpmrec/errors.hpp"

namespace hpmrec {
namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
             std::string_view what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  throw ConfigError("invalid " + std::string(what) + " '" + std::string(s) + "' (expected " +
                    allowed + ")");
}

template <typename E, std::size_t N>
std::string_view enum_name(E v, const std::array<std::pair<std::string_view, E>, N>& table) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<std::string_view, EncoderMode>, 3> kEncoderModes = {
    {{"full", EncoderMode::kFull}, {"split", EncoderMode::kSplit}, {"mlp", EncoderMode::kMlp}}};
constexpr std::array<std::pair<std::string_view, SignAlign>, 2> kSignAligns = {
    {{"minimize", SignAlign::kMinimize}, {"literal", SignAlign::kLiteral}}};
constexpr std::array<std::pair<std::string_view, LayerAgg>, 2> kLayerAggs = {
    {{"sum", LayerAgg::kSum}, {"mean", LayerAgg::kMean}}};
constexpr std::array<std::pair<std::string_view, SslOn>, 2> kSslOn = {
    {{"hat", SslOn::kHat}, {"bar", SslOn::kBar}}};
constexpr std::array<std::pair<std::string_view, ItemGraphNorm>, 2> kItemGraphNorms = {
    {{"sym", ItemGraphNorm::kSymmetric}, {"none", ItemGraphNorm::kNone}}};
constexpr std::array<std::pair<std::string_view, Precision>, 2> kPrecisions = {
    {{"float64", Precision::kFloat64}, {"float32", Precision::kFloat32}}};

template <typename V>
V get_as(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
  }
}

}  // namespace

std::string_view to_string(EncoderMode m) { return enum_name(m, kEncoderModes); }
std::string_view to_string(SignAlign m) { return enum_name(m, kSignAligns); }
std::string_view to_string(LayerAgg m) { return enum_name(m, kLayerAggs); }
std::string_view to_string(SslOn m) { return enum_name(m, kSslOn); }
std::string_view to_string(ItemGraphNorm m) { return enum_name(m, kItemGraphNorms); }
std::string_view to_string(Precision p) { return enum_name(p, kPrecisions); }

EncoderMode parse_encoder_mode(std::string_view s) { return parse_enum(s, kEncoderModes, "encoder_mode"); }
SignAlign parse_sign_align(std::string_view s) { return parse_enum(s, kSignAligns, "sign_align"); }
LayerAgg parse_layer_agg(std::string_view s) { return parse_enum(s, kLayerAggs, "layer_agg"); }
SslOn parse_ssl_on(std::string_view s) { return parse_enum(s, kSslOn, "ssl_on"); }
ItemGraphNorm parse_item_graph_norm(std::string_view s) {
  return parse_enum(s, kItemGraphNorms, "item_graph_norm");
}
Precision parse_precision(std::string_view s) { return parse_enum(s, kPrecisions, "precision"); }

void RunConfig::validate() const {
  hp.validate();
  grid.validate();
  if (kcore < 1) throw ConfigError("kcore must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (eval_split != "valid" && eval_split != "test") {
    throw ConfigError("eval_split must be 'valid' or 'test'");
  }
  double sum = 0.0;
  for (const double r : split_ratios) {
    if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  if (!(gradcheck_tolerance > 0.0) || !(gradcheck_step > 0.0)) {
    throw ConfigError("gradcheck tolerance and step must be positive");
  }
}

nlohmann::ordered_json hyperparams_to_json(const HyperParams& hp) {
  nlohmann::ordered_json j;
  j["n_exp"] = hp.n_exp;
  j["dim"] = hp.dim;
  j["layers"] = hp.layers;
  j["knn_k"] = hp.knn_k;
  j["reg_weight"] = hp.reg_weight;
  j["ssl_weight"] = hp.ssl_weight;
  j["learning_rate"] = hp.learning_rate;
  j["eps_init"] = hp.eps_init;
  j["batch_size"] = hp.batch_size;
  j["patience"] = hp.patience;
  j["max_epochs"] = hp.max_epochs;
  j["seed"] = hp.seed;
  j["encoder_mode"] = to_string(hp.encoder_mode);
  j["no_prompt"] = hp.no_prompt;
  j["no_mi"] = hp.no_mi;
  j["no_ssl"] = hp.no_ssl;
  j["explicit_prompt"] = hp.explicit_prompt;
  j["sign_align"] = to_string(hp.sign_align);
  j["layer_agg"] = to_string(hp.layer_agg);
  j["item_graph_norm"] = to_string(hp.item_graph_norm);
  j["freeze_alpha"] = hp.freeze_alpha;
  j["ssl_on"] = to_string(hp.ssl_on);
  j["ssl_batch_only"] = hp.ssl_batch_only;
  j["clip_norm"] = hp.clip_norm;
  return j;
}

nlohmann::ordered_json grid_to_json(const GridSpec& grid) {
  nlohmann::ordered_json j;
  j["layers"] = grid.layers;
  j["reg_weight"] = grid.reg_weight;
  j["ssl_weight"] = grid.ssl_weight;
  j["n_exp"] = grid.n_exp;
  j["knn_k"] = grid.knn_k;
  return j;
}

nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["interactions"] = cfg.interactions.string();
  j["visual"] = cfg.visual.string();
  j["textual"] = cfg.textual.string();
  j["data_dir"] = cfg.data_dir.string();
  j["out_dir"] = cfg.out_dir.string();
  j["checkpoint"] = cfg.checkpoint.string();
  j["kcore"] = cfg.kcore;
  j["split_ratios"] = cfg.split_ratios;
  j["global_split"] = cfg.global_split;
  j["eval_split"] = cfg.eval_split;
  j["precision"] = to_string(cfg.precision);
  j["threads"] = cfg.threads;
  j["gradcheck_tolerance"] = cfg.gradcheck_tolerance;
  j["gradcheck_step"] = cfg.gradcheck_step;
  const auto hp = hyperparams_to_json(cfg.hp);
  for (const auto& [k, v] : hp.items()) j[k] = v;
  j["grid"] = grid_to_json(cfg.grid);
  return j;
}

RunConfig config_from_json(const nlohmann::json& j, RunConfig base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c = std::move(base);
  auto& hp = c.hp;
  using Setter = std::function<void(const nlohmann::json&, const std::string&)>;
  auto path = [](std::filesystem::path& p) {
    return Setter([&p](const nlohmann::json& v, const std::string& k) { p = get_as<std::string>(v, k); });
  };
  auto num = [](auto& field) {
    return Setter([&field](const nlohmann::json& v, const std::string& k) {
      using F = std::decay_t<decltype(field)>;
      if constexpr (std::is_integral_v<F>) {
        if (!v.is_number_integer()) throw ConfigError("config key '" + k + "' must be an integer");
      } else {
        if (!v.is_number()) throw ConfigError("config key '" + k + "' must be a number");
      }
      field = get_as<F>(v, k);
    });
  };
  auto flag = [](bool& field) {
    return Setter([&field](const nlohmann::json& v, const std::string& k) {
      if (!v.is_boolean()) throw ConfigError("config key '" + k + "' must be true or false");
      field = v.get<bool>();
    });
  };
  auto choice = [](auto& field, auto parser) {
    return Setter([&field, parser](const nlohmann::json& v, const std::string& k) {
      field = parser(get_as<std::string>(v, k));
    });
  };
  const std::map<std::string, Setter> setters = {
      {"interactions", path(c.interactions)},
      {"visual", path(c.visual)},
      {"textual", path(c.textual)},
      {"data_dir", path(c.data_dir)},
      {"out_dir", path(c.out_dir)},
      {"checkpoint", path(c.checkpoint)},
      {"kcore", num(c.kcore)},
      {"split_ratios",
       [&c](const nlohmann::json& v, const std::string& k) {
         const auto r = get_as<std::vector<double>>(v, k);
         if (r.size() != 3) throw ConfigError("split_ratios needs three values");
         c.split_ratios = {r[0], r[1], r[2]};
       }},
      {"global_split", flag(c.global_split)},
      {"eval_split",
       [&c](const nlohmann::json& v, const std::string& k) { c.eval_split = get_as<std::string>(v, k); }},
      {"precision", choice(c.precision, parse_precision)},
      {"threads", num(c.threads)},
      {"gradcheck_tolerance", num(c.gradcheck_tolerance)},
      {"gradcheck_step", num(c.gradcheck_step)},
      {"n_exp", num(hp.n_exp)},
      {"dim", num(hp.dim)},
      {"layers", num(hp.layers)},
      {"knn_k", num(hp.knn_k)},
      {"reg_weight", num(hp.reg_weight)},
      {"ssl_weight", num(hp.ssl_weight)},
      {"learning_rate", num(hp.learning_rate)},
      {"eps_init", num(hp.eps_init)},
      {"batch_size", num(hp.batch_size)},
      {"patience", num(hp.patience)},
      {"max_epochs", num(hp.max_epochs)},
      {"seed", num(hp.seed)},
      {"encoder_mode", choice(hp.encoder_mode, parse_encoder_mode)},
      {"no_prompt", flag(hp.no_prompt)},
      {"no_mi", flag(hp.no_mi)},
      {"no_ssl", flag(hp.no_ssl)},
      {"explicit_prompt", flag(hp.explicit_prompt)},
      {"sign_align", choice(hp.sign_align, parse_sign_align)},
      {"layer_agg", choice(hp.layer_agg, parse_layer_agg)},
      {"item_graph_norm", choice(hp.item_graph_norm, parse_item_graph_norm)},
      {"freeze_alpha", flag(hp.freeze_alpha)},
      {"ssl_on", choice(hp.ssl_on, parse_ssl_on)},
      {"ssl_batch_only", flag(hp.ssl_batch_only)},
      {"clip_norm", num(hp.clip_norm)},
      {"grid",
       [&c](const nlohmann::json& v, const std::string&) {
         if (!v.is_object()) throw ConfigError("config key 'grid' must be an object");
         for (const auto& [gk, gv] : v.items()) {
           const std::string key = "grid." + gk;
           if (gk == "layers") c.grid.layers = get_as<std::vector<int>>(gv, key);
           else if (gk == "reg_weight") c.grid.reg_weight = get_as<std::vector<double>>(gv, key);
           else if (gk == "ssl_weight") c.grid.ssl_weight = get_as<std::vector<double>>(gv, key);
           else if (gk == "n_exp") c.grid.n_exp = get_as<std::vector<int>>(gv, key);
           else if (gk == "knn_k") c.grid.knn_k = get_as<std::vector<int>>(gv, key);
           else throw ConfigError("unknown config key '" + key + "'");
         }
       }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(value, key);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace hpmrec
