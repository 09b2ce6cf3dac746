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
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "hpmrec/tensor.hpp"

namespace hpmrec {

enum class Modality { kId = 0, kVisual = 1, kTextual = 2 };

inline constexpr std::array<Modality, 3> kAllModalities = {Modality::kId, Modality::kVisual,
                                                           Modality::kTextual};
inline constexpr std::array<Modality, 2> kContentModalities = {Modality::kVisual,
                                                               Modality::kTextual};

std::string_view modality_name(Modality m);

struct Interaction {
  std::int32_t user = 0;
  std::int32_t item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// Implicit feedback with dense ids. user_ids[i] / item_ids[i] give the
// original identifier of index i.
struct InteractionTable {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Interaction> pairs;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::size_t duplicates_dropped = 0;
};

struct SplitDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<Interaction> train;
  std::vector<Interaction> valid;
  std::vector<Interaction> test;
  std::uint64_t seed = 0;
};

struct SplitOptions {
  std::array<double, 3> ratios = {0.8, 0.1, 0.1};
  std::uint64_t seed = 2026;
  // Shuffle all pairs together instead of per user.
  bool global = false;
};

// Raw per-item content features, one row per item index.
struct FeatureMatrix {
  Modality modality = Modality::kVisual;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

// TSV "user_id<TAB>item_id" per line; blank lines are skipped. Ids are
// assigned in first-seen order and duplicate pairs are dropped.
InteractionTable load_interactions(const std::filesystem::path& path);
InteractionTable parse_interactions(std::istream& in, const std::string& source);

// Builds a table from already-dense pairs (ids become the decimal indices).
InteractionTable table_from_pairs(std::size_t num_users, std::size_t num_items,
                                  const std::vector<Interaction>& pairs);

// Iteratively drops users and items with fewer than k interactions, then
// re-indexes the survivors preserving their relative order.
InteractionTable kcore_filter(const InteractionTable& table, int k);

SplitDataset split_dataset(const InteractionTable& table, const SplitOptions& options = {});

// Per-user holdout sizes used by the per-user split: train gets
// max(1, floor(r_train * deg)), valid gets floor(r_valid * deg) capped by
// what is left, test takes the remainder.
std::array<std::size_t, 3> per_user_split_sizes(std::size_t degree,
                                                const std::array<double, 3>& ratios);

// HPMF binary: "HPMF", u32 version = 1, u64 rows, u64 cols, then rows * cols
// little-endian float32 in row-major order.
FeatureMatrix load_features(const std::filesystem::path& path, std::size_t expected_rows,
                            Modality modality);
void save_features(const FeatureMatrix& matrix, const std::filesystem::path& path);

// Keeps the rows named by `rows`, in that order.
FeatureMatrix select_rows(const FeatureMatrix& matrix, const std::vector<std::size_t>& rows);

// Split manifest: train.tsv / valid.tsv / test.tsv ("user<TAB>item" dense
// indices), users.tsv / items.tsv (index<TAB>original id) and summary.json.
void write_split(const std::filesystem::path& dir, const InteractionTable& table,
                 const SplitDataset& split, int kcore);

struct PreparedData {
  SplitDataset split;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
};

PreparedData read_split(const std::filesystem::path& dir);

double sparsity(std::size_t num_users, std::size_t num_items, std::size_t num_pairs);

}  // namespace hpmrec
