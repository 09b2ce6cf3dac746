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
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpmrec/data.hpp"
#include "hpmrec/tensor.hpp"

namespace hpmrec {

inline constexpr std::array<int, 2> kDefaultTopK = {10, 20};

// Indices of the k best unmasked items, best first. Ties go to the smaller
// index. `masked` has one flag per item; may be empty (nothing masked).
// Returns fewer than k indices when fewer items are unmasked.
template <typename T>
std::vector<std::int32_t> rank_items(const Vec<T>& scores, const std::vector<char>& masked, int k);

// |topk ∩ truth| / |truth|. `truth` must be sorted and non-empty.
double recall_at_k(std::span<const std::int32_t> topk, std::span<const std::int32_t> truth);

// Binary-relevance NDCG with 1-based ranks and log base 2.
double ndcg_at_k(std::span<const std::int32_t> topk, std::span<const std::int32_t> truth, int k);

struct MetricsReport {
  std::vector<int> ks;
  std::vector<double> recall;
  std::vector<double> ndcg;
  std::size_t num_users_evaluated = 0;

  double recall_at(int k) const;
  double ndcg_at(int k) const;
  nlohmann::ordered_json to_json() const;
};

// Per-user sorted item lists.
std::vector<std::vector<std::int32_t>> items_by_user(std::span<const Interaction> pairs,
                                                     std::size_t num_users);

// Full ranking of every item for every user with non-empty truth.
// Users whose items are all masked are skipped.
template <typename T>
MetricsReport evaluate_ranking(const Eigen::Ref<const Mat<T>>& user_final, const Mat<T>& item_final,
                               const std::vector<std::vector<std::int32_t>>& truth,
                               const std::vector<std::vector<std::int32_t>>& masked,
                               std::span<const int> ks, int threads = 1);

}  // namespace hpmrec
