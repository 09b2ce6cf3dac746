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
#include <string>
#include <vector>

#include "hpmrec/data.hpp"
#include "hpmrec/graphs.hpp"
#include "hpmrec/tensor.hpp"

namespace hpmrec {

enum class EncoderMode { kFull, kSplit, kMlp };
enum class SignAlign { kMinimize, kLiteral };
enum class LayerAgg { kSum, kMean };
enum class SslOn { kHat, kBar };

struct HyperParams {
  int n_exp = 1;     // 2^(n_exp + 1) components
  int dim = 64;      // per-component width (full) or total width (split / mlp)
  int layers = 2;    // user-item propagation depth
  int knn_k = 10;    // item-item neighbours kept per item
  double reg_weight = 1e-3;  // lambda
  double ssl_weight = 1e-3;  // lambda_s
  double learning_rate = 1e-4;
  double eps_init = 0.1;
  int batch_size = 2048;
  int patience = 20;
  int max_epochs = 1000;
  std::uint64_t seed = 2026;
  EncoderMode encoder_mode = EncoderMode::kFull;
  bool no_prompt = false;
  bool no_mi = false;
  bool no_ssl = false;
  bool explicit_prompt = false;
  SignAlign sign_align = SignAlign::kMinimize;
  LayerAgg layer_agg = LayerAgg::kSum;
  ItemGraphNorm item_graph_norm = ItemGraphNorm::kSymmetric;
  bool freeze_alpha = false;
  SslOn ssl_on = SslOn::kHat;
  bool ssl_batch_only = false;
  double clip_norm = 0.0;  // 0 disables clipping

  // Throws ConfigError on inconsistent values.
  void validate() const;

  int num_components() const { return 1 << (n_exp + 1); }
  // Width of one component inside a modality representation.
  int component_width() const;
  // Width of a single modality representation (all components).
  int modality_width() const;
};

template <typename T>
struct ModalityParams {
  Mat<T> user_emb;  // U x width
  Mat<T> item_emb;  // V x width, ID modality only
  Mat<T> proj;      // raw x out, content modalities only
  Mat<T> compress;  // d x d / N, content modalities in mlp mode only
  Mat<T> prompt;    // (U + V) x width
};

// All trainable tensors. Scalars live in 1 x k matrices so every parameter
// can be visited uniformly by name.
template <typename T>
struct ModelParams {
  std::array<ModalityParams<T>, 3> modality;
  Mat<T> eps;    // 1 x 2: MI strength for (visual, textual)
  Mat<T> beta;   // 1 x 3: modality attention logits (id, visual, textual)
  Mat<T> alpha;  // 1 x 2: item-graph fusion logits (visual, textual)

  // fn(name, tensor) for every non-empty tensor, in a fixed order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (Modality m : kAllModalities) {
      auto& p = modality[static_cast<std::size_t>(m)];
      const std::string prefix(modality_name(m));
      visit(fn, prefix + ".user_emb", p.user_emb);
      visit(fn, prefix + ".item_emb", p.item_emb);
      visit(fn, prefix + ".proj", p.proj);
      visit(fn, prefix + ".compress", p.compress);
      visit(fn, prefix + ".prompt", p.prompt);
    }
    visit(fn, "mi.eps", eps);
    visit(fn, "fusion.beta", beta);
    visit(fn, "item_graph.alpha", alpha);
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each(
        [&fn](const std::string& name, Mat<T>& t) { fn(name, static_cast<const Mat<T>&>(t)); });
  }

  ModelParams zeros_like() const {
    ModelParams out = *this;
    out.for_each([](const std::string&, Mat<T>& t) { t.setZero(); });
    return out;
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    for (std::size_t m = 0; m < 3; ++m) {
      out.modality[m].user_emb = modality[m].user_emb.template cast<U>();
      out.modality[m].item_emb = modality[m].item_emb.template cast<U>();
      out.modality[m].proj = modality[m].proj.template cast<U>();
      out.modality[m].compress = modality[m].compress.template cast<U>();
      out.modality[m].prompt = modality[m].prompt.template cast<U>();
    }
    out.eps = eps.template cast<U>();
    out.beta = beta.template cast<U>();
    out.alpha = alpha.template cast<U>();
    return out;
  }

  std::size_t num_values() const {
    std::size_t n = 0;
    for_each([&n](const std::string&, const Mat<T>& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

 private:
  template <typename Fn>
  static void visit(Fn& fn, const std::string& name, Mat<T>& t) {
    if (t.size() > 0) fn(name, t);
  }
};

// Frozen inputs shared by every forward pass.
template <typename T>
struct ModelContext {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  SpMat<T> adj;                  // (U + V) x (U + V)
  ItemGraph item_graph;          // visual, textual kNN graphs
  std::array<Mat<T>, 2> features;  // visual, textual raw features (V x raw)

  std::size_t num_nodes() const { return num_users + num_items; }
};

template <typename T>
ModelContext<T> build_context(const std::vector<Interaction>& train, std::size_t num_users,
                              std::size_t num_items, const FeatureMatrix& visual,
                              const FeatureMatrix& textual, const HyperParams& hp,
                              int threads = 1);

// Xavier-uniform with bound sqrt(6 / (fan_in + fan_out)).
double xavier_bound(std::size_t fan_in, std::size_t fan_out);

template <typename T>
ModelParams<T> init_params(const HyperParams& hp, const ModelContext<T>& ctx, std::uint64_t seed);

template <typename T>
struct EncodedItems {
  Mat<T> hidden;  // features * proj (mlp mode keeps it for the backward pass)
  Mat<T> emb;     // V x modality width
};

// full: raw -> d * N, split: raw -> d, mlp: raw -> d * N then each
// component compressed d -> d / N by a shared matrix.
template <typename T>
EncodedItems<T> encode_item_modality(const Mat<T>& features, const Mat<T>& proj,
                                     const Mat<T>& compress, const HyperParams& hp);

// Layer aggregation plus the additive per-node prompt.
template <typename T>
Mat<T> prompt_compensate(const std::vector<Mat<T>>& layers, const Mat<T>* prompt, LayerAgg agg);

template <typename T>
struct MiOutput {
  std::array<Mat<T>, 3> hat;   // id, visual, textual
  std::array<Mat<T>, 2> prod;  // id * visual, id * textual (empty when disabled)
};

template <typename T>
MiOutput<T> mi_enhance(const Mat<T>& bar_id, const Mat<T>& bar_visual, const Mat<T>& bar_textual,
                       T eps1, T eps2, int n_exp, bool enabled);

template <typename T>
struct FusedRepresentation {
  Mat<T> fused;       // (U + V) x 3w, blocks ordered id | visual | textual
  Mat<T> item_final;  // V x 3w, items after the item-item enhancement
};

template <typename T>
FusedRepresentation<T> fuse_and_enhance(const std::array<Mat<T>, 3>& hat, const Vec<T>& weights,
                                        const SpMat<T>& item_op, std::size_t num_users);

// Score of one user against every item.
template <typename T>
Vec<T> predict_scores(const Eigen::Ref<const Mat<T>>& user_row, const Mat<T>& item_final);

template <typename T>
struct ModalityTrace {
  EncodedItems<T> items;        // content modalities only
  std::vector<Mat<T>> layers;   // H(0..L)
  Mat<T> bar;                   // after prompt compensation
};

template <typename T>
struct ForwardTrace {
  std::array<ModalityTrace<T>, 3> modality;
  MiOutput<T> mi;
  Vec<T> beta_weights;
  FusedItemGraph<T> item_graph;
  FusedRepresentation<T> out;

  std::size_t num_users = 0;
  auto user_final() const { return out.fused.topRows(static_cast<Eigen::Index>(num_users)); }
};

template <typename T>
ForwardTrace<T> forward(const ModelParams<T>& params, const ModelContext<T>& ctx,
                        const HyperParams& hp);

}  // namespace hpmrec
