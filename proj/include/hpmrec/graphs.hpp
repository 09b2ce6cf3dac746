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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hpmrec/data.hpp"
#include "hpmrec/tensor.hpp"

namespace hpmrec {

// Square sparse matrix in CSR form with double values, used for the frozen
// item-item graphs and the HPMS export.
struct CsrGraph {
  std::size_t rows = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> value;

  std::size_t nnz() const { return col.size(); }
  std::size_t row_nnz(std::size_t r) const { return row_ptr[r + 1] - row_ptr[r]; }
};

// Symmetric-normalized user-item adjacency over N = U + V nodes. Users take
// rows [0, U), items [U, U + V). Entry (u, v) = (v, u) =
// 1 / (sqrt(|N_u|) sqrt(|N_v|)) with degrees from `train` only.
template <typename T>
SpMat<T> build_norm_adj(const std::vector<Interaction>& train, std::size_t num_users,
                        std::size_t num_items);

// [H0, A H0, A^2 H0, ..., A^L H0].
template <typename T>
std::vector<Mat<T>> propagate(const SpMat<T>& adj, const Mat<T>& h0, int layers);

// Keeps, per item, the k largest cosine similarities to other items (ties
// to the smaller index). A zero feature row has similarity 0 to everything;
// zero-valued similarities are not stored, so rows may hold fewer than k.
CsrGraph build_knn_graph(const FeatureMatrix& features, int k, int threads = 1);

enum class ItemGraphNorm { kSymmetric, kNone };

// Per-modality fused operator for one set of fusion logits.
template <typename T>
struct FusedItemGraph {
  std::vector<T> weights;   // softmax(alpha)
  std::vector<T> raw;       // sum_m w_m S^m on the union pattern
  std::vector<T> inv_sqrt;  // per-row deg^{-1/2}, deg = sum |raw| (0 for empty rows)
  SpMat<T> op;              // operator applied to item representations
};

// Frozen kNN graphs of the content modalities sharing one union sparsity
// pattern. Only the fusion weights change during training.
class ItemGraph {
 public:
  ItemGraph() = default;
  ItemGraph(std::vector<CsrGraph> modality_graphs, ItemGraphNorm norm);

  std::size_t num_items() const { return pattern_.rows; }
  std::size_t num_modalities() const { return values_.size(); }
  std::size_t nnz() const { return pattern_.nnz(); }
  const CsrGraph& pattern() const { return pattern_; }
  ItemGraphNorm norm() const { return norm_; }
  // Modality m's values laid out on the union pattern.
  const std::vector<double>& modality_values(std::size_t m) const { return values_[m]; }
  CsrGraph modality_graph(std::size_t m) const;

  template <typename T>
  FusedItemGraph<T> fuse(const Vec<T>& alpha_logits) const;

  // Gradient with respect to the logits given dL/d(op value) for every
  // pattern entry (CSR order).
  template <typename T>
  Vec<T> logits_grad(const FusedItemGraph<T>& fused, const std::vector<T>& d_op) const;

 private:
  CsrGraph pattern_;
  std::vector<std::vector<double>> values_;
  ItemGraphNorm norm_ = ItemGraphNorm::kSymmetric;
};

template <typename T>
Vec<T> softmax(const Vec<T>& logits);

// HPMS binary: "HPMS", u32 version = 1, u64 rows, u64 nnz, then nnz records
// of (u64 row, u64 col, f32 value) sorted row-major.
void write_sparse(const CsrGraph& graph, const std::filesystem::path& path);
CsrGraph read_sparse(const std::filesystem::path& path);

}  // namespace hpmrec
