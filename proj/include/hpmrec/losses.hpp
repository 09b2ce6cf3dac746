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

#include "hpmrec/model.hpp"

namespace hpmrec {

struct TrainingTriple {
  std::int32_t user = 0;
  std::int32_t pos = 0;
  std::int32_t neg = 0;

  friend bool operator==(const TrainingTriple&, const TrainingTriple&) = default;
};

// rec = bpr + reg and total = rec + ssl_weight * (ssl + prompt_align).
// `reg` is the lambda-weighted regulariser already folded into rec;
// `prompt_align` is non-zero only with explicit prompt alignment.
struct LossBreakdown {
  double bpr = 0.0;
  double reg = 0.0;
  double rec = 0.0;
  double align = 0.0;
  double expand = 0.0;
  double ssl = 0.0;
  double prompt_align = 0.0;
  double total = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown& operator/=(double s);
};

nlohmann::ordered_json to_json(const LossBreakdown& b);

// -log(sigmoid(x)) without overflow.
template <typename T>
T neg_log_sigmoid(T x);

// mean_b -log sigmoid(pos_b - neg_b) + lambda * reg_term.
template <typename T>
T bpr_loss(std::span<const T> pos, std::span<const T> neg, T reg_term, T lambda);

// Sum of Manhattan distances between the (id, visual), (id, textual) and
// (visual, textual) representations, averaged over `nodes`. Negated when
// sign == kLiteral.
template <typename T>
T align_loss(const Mat<T>& id, const Mat<T>& visual, const Mat<T>& textual,
             std::span<const std::int32_t> nodes, SignAlign sign = SignAlign::kMinimize);

// -(1 / |nodes|) * sum over nodes and modalities of |real - mean(imag)|,
// with component width `reps[m].cols() / num_components`.
template <typename T>
T expand_loss(std::span<const Mat<T>> reps, int num_components,
              std::span<const std::int32_t> nodes);

// Mean Manhattan distance between each prompt and its layer-0 embedding.
template <typename T>
T prompt_align_loss(const std::array<const Mat<T>*, 3>& prompts,
                    const std::array<const Mat<T>*, 3>& layer0,
                    std::span<const std::int32_t> nodes);

// Combines already computed terms according to the ablation flags.
LossBreakdown total_loss(double bpr, double reg_term, double align, double expand,
                         double prompt_align, const HyperParams& hp);

// Node set used by the self-supervised terms: every node, or only the
// users and items touched by `batch` (sorted, unique) with ssl_batch_only.
std::vector<std::int32_t> ssl_nodes(std::span<const TrainingTriple> batch, std::size_t num_users,
                                    std::size_t num_items, bool batch_only);

// Mean over the batch of the squared L2 norms of the layer-0 embeddings of
// u, p and n summed over modalities.
template <typename T>
T reg_term(const ForwardTrace<T>& trace, std::span<const TrainingTriple> batch);

// Full objective for one mini-batch on a computed trace.
template <typename T>
LossBreakdown compute_loss(const ForwardTrace<T>& trace, const ModelParams<T>& params,
                           std::span<const TrainingTriple> batch, const HyperParams& hp,
                           std::span<const std::int32_t> nodes);

}  // namespace hpmrec
