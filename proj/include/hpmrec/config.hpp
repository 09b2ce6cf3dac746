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


#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "hpmrec/model.hpp"
#include "hpmrec/train.hpp"

namespace hpmrec {

enum class Precision { kFloat64, kFloat32 };

// Everything a CLI run can be configured with. JSON keys match the field
// names; command-line flags use the same names with '-' for '_'.
struct RunConfig {
  std::filesystem::path interactions;  // raw TSV (prepare)
  std::filesystem::path visual;        // raw HPMF aligned with first-seen item order (prepare)
  std::filesystem::path textual;
  std::filesystem::path data_dir;      // output of prepare, input of everything else
  std::filesystem::path out_dir = "out";
  std::filesystem::path checkpoint;    // evaluate
  int kcore = 5;
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
  bool global_split = false;
  std::string eval_split = "test";     // valid | test
  Precision precision = Precision::kFloat64;
  int threads = 1;
  double gradcheck_tolerance = 1e-4;
  double gradcheck_step = 1e-5;
  HyperParams hp;
  GridSpec grid;

  void validate() const;
};

std::string_view to_string(EncoderMode m);
std::string_view to_string(SignAlign m);
std::string_view to_string(LayerAgg m);
std::string_view to_string(SslOn m);
std::string_view to_string(ItemGraphNorm m);
std::string_view to_string(Precision p);

EncoderMode parse_encoder_mode(std::string_view s);
SignAlign parse_sign_align(std::string_view s);
LayerAgg parse_layer_agg(std::string_view s);
SslOn parse_ssl_on(std::string_view s);
ItemGraphNorm parse_item_graph_norm(std::string_view s);
Precision parse_precision(std::string_view s);

nlohmann::ordered_json hyperparams_to_json(const HyperParams& hp);
nlohmann::ordered_json grid_to_json(const GridSpec& grid);

// Full configuration echo, every key included.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

// Applies the keys present in `j` on top of `base`. Unknown keys and
// wrongly typed values throw ConfigError.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace hpmrec
