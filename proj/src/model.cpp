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

#include "hpmrec/model.hpp"

#include <cmath>
#include <random>

#include "hpmrec/cdalgebra.hpp"
#include "hpmrec/errors.hpp"
#include "hpmrec/rng.hpp"

namespace hpmrec {

void HyperParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (n_exp < 0 || n_exp > cd::kMaxExponent) fail("n_exp must lie in [0, 4]");
  if (dim <= 0) fail("dim must be positive");
  if (layers < 0) fail("layers must be >= 0");
  if (knn_k < 1) fail("knn_k must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(reg_weight >= 0.0) || !(ssl_weight >= 0.0)) fail("loss weights must be >= 0");
  if (!std::isfinite(eps_init)) fail("eps_init must be finite");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (patience < 1) fail("patience must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (!(clip_norm >= 0.0)) fail("clip_norm must be >= 0");
  if (encoder_mode != EncoderMode::kFull && dim % num_components() != 0) {
    fail("split/mlp encoders need dim divisible by the component count " +
         std::to_string(num_components()));
  }
}

int HyperParams::component_width() const {
  return encoder_mode == EncoderMode::kFull ? dim : dim / num_components();
}

int HyperParams::modality_width() const {
  return encoder_mode == EncoderMode::kFull ? dim * num_components() : dim;
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
ModelContext<T> build_context(const std::vector<Interaction>& train, std::size_t num_users,
                              std::size_t num_items, const FeatureMatrix& visual,
                              const FeatureMatrix& textual, const HyperParams& hp, int threads) {
  if (train.empty()) throw InputError("training split is empty");
  if (visual.rows() != num_items || textual.rows() != num_items) {
    throw InputError("feature rows do not match the item count " + std::to_string(num_items));
  }
  ModelContext<T> ctx;
  ctx.num_users = num_users;
  ctx.num_items = num_items;
  ctx.adj = build_norm_adj<T>(train, num_users, num_items);
  ctx.item_graph = ItemGraph({build_knn_graph(visual, hp.knn_k, threads),
                              build_knn_graph(textual, hp.knn_k, threads)},
                             hp.item_graph_norm);
  ctx.features[0] = visual.values.cast<T>();
  ctx.features[1] = textual.values.cast<T>();
  return ctx;
}

template <typename T>
ModelParams<T> init_params(const HyperParams& hp, const ModelContext<T>& ctx, std::uint64_t seed) {
  hp.validate();
  auto rng = make_stream(seed, "init");
  const auto xavier = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double b = xavier_bound(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    std::uniform_real_distribution<double> dist(-b, b);
    Mat<T> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(dist(rng));
    return m;
  };
  const auto users = static_cast<Eigen::Index>(ctx.num_users);
  const auto items = static_cast<Eigen::Index>(ctx.num_items);
  const Eigen::Index width = hp.modality_width();
  const Eigen::Index comps = hp.num_components();

  ModelParams<T> p;
  for (Modality m : kAllModalities) {
    auto& mp = p.modality[static_cast<std::size_t>(m)];
    mp.user_emb = xavier(users, width);
    if (m == Modality::kId) {
      mp.item_emb = xavier(items, width);
    } else {
      const Eigen::Index raw = ctx.features[static_cast<std::size_t>(m) - 1].cols();
      switch (hp.encoder_mode) {
        case EncoderMode::kFull:
          mp.proj = xavier(raw, width);
          break;
        case EncoderMode::kSplit:
          mp.proj = xavier(raw, hp.dim);
          break;
        case EncoderMode::kMlp:
          mp.proj = xavier(raw, static_cast<Eigen::Index>(hp.dim) * comps);
          mp.compress = xavier(hp.dim, hp.dim / comps);
          break;
      }
    }
    mp.prompt = xavier(users + items, width);
  }
  p.eps = Mat<T>::Constant(1, 2, static_cast<T>(hp.eps_init));
  p.beta = Mat<T>::Zero(1, 3);
  p.alpha = Mat<T>::Zero(1, 2);
  return p;
}

template <typename T>
EncodedItems<T> encode_item_modality(const Mat<T>& features, const Mat<T>& proj,
                                     const Mat<T>& compress, const HyperParams& hp) {
  if (features.cols() != proj.rows()) throw ShapeError("projection does not match feature width");
  EncodedItems<T> out;
  out.hidden = features * proj;
  if (hp.encoder_mode != EncoderMode::kMlp) {
    out.emb = out.hidden;
    return out;
  }
  const Eigen::Index comps = hp.num_components();
  const Eigen::Index d = hp.dim;
  const Eigen::Index cw = d / comps;
  if (out.hidden.cols() != d * comps || compress.rows() != d || compress.cols() != cw) {
    throw ShapeError("mlp encoder shapes inconsistent with dim and component count");
  }
  out.emb.resize(features.rows(), d);
  for (Eigen::Index k = 0; k < comps; ++k) {
    out.emb.middleCols(k * cw, cw) = out.hidden.middleCols(k * d, d) * compress;
  }
  return out;
}

template <typename T>
Mat<T> prompt_compensate(const std::vector<Mat<T>>& layers, const Mat<T>* prompt, LayerAgg agg) {
  if (layers.empty()) throw ShapeError("prompt_compensate needs at least layer 0");
  Mat<T> out = layers.front();
  for (std::size_t l = 1; l < layers.size(); ++l) out += layers[l];
  if (agg == LayerAgg::kMean) out /= static_cast<T>(layers.size());
  if (prompt != nullptr) {
    if (prompt->rows() != out.rows() || prompt->cols() != out.cols()) {
      throw ShapeError("prompt shape does not match the representation");
    }
    out += *prompt;
  }
  return out;
}

template <typename T>
MiOutput<T> mi_enhance(const Mat<T>& bar_id, const Mat<T>& bar_visual, const Mat<T>& bar_textual,
                       T eps1, T eps2, int n_exp, bool enabled) {
  MiOutput<T> out;
  out.hat[0] = bar_id;
  if (!enabled) {
    out.hat[1] = bar_visual;
    out.hat[2] = bar_textual;
    return out;
  }
  out.prod[0] = cd::mul_rows<T>(bar_id, bar_visual, n_exp);
  out.prod[1] = cd::mul_rows<T>(bar_id, bar_textual, n_exp);
  out.hat[1] = bar_visual + eps1 * out.prod[0];
  out.hat[2] = bar_textual + eps2 * out.prod[1];
  return out;
}

template <typename T>
FusedRepresentation<T> fuse_and_enhance(const std::array<Mat<T>, 3>& hat, const Vec<T>& weights,
                                        const SpMat<T>& item_op, std::size_t num_users) {
  const Eigen::Index n = hat[0].rows();
  const Eigen::Index w = hat[0].cols();
  for (const auto& h : hat) {
    if (h.rows() != n || h.cols() != w) throw ShapeError("modality representations differ in shape");
  }
  if (weights.size() != 3) throw ShapeError("fusion expects three modality weights");
  FusedRepresentation<T> out;
  out.fused.resize(n, 3 * w);
  for (Eigen::Index m = 0; m < 3; ++m) {
    out.fused.middleCols(m * w, w) = weights(m) * hat[static_cast<std::size_t>(m)];
  }
  const auto users = static_cast<Eigen::Index>(num_users);
  const Eigen::Index items = n - users;
  if (item_op.rows() != items || item_op.cols() != items) {
    throw ShapeError("item graph operator does not match the item count");
  }
  const auto item_rows = out.fused.bottomRows(items);
  out.item_final = item_rows;
  out.item_final.noalias() += item_op * item_rows;
  return out;
}

template <typename T>
Vec<T> predict_scores(const Eigen::Ref<const Mat<T>>& user_row, const Mat<T>& item_final) {
  if (user_row.rows() != 1 || user_row.cols() != item_final.cols()) {
    throw ShapeError("predict_scores: width mismatch");
  }
  return item_final * user_row.transpose();
}

template <typename T>
ForwardTrace<T> forward(const ModelParams<T>& params, const ModelContext<T>& ctx,
                        const HyperParams& hp) {
  ForwardTrace<T> tr;
  tr.num_users = ctx.num_users;
  const auto users = static_cast<Eigen::Index>(ctx.num_users);
  const auto items = static_cast<Eigen::Index>(ctx.num_items);
  const Eigen::Index width = hp.modality_width();
  for (Modality m : kAllModalities) {
    const auto mi = static_cast<std::size_t>(m);
    const auto& mp = params.modality[mi];
    auto& mt = tr.modality[mi];
    if (mp.user_emb.rows() != users || mp.user_emb.cols() != width) {
      throw ShapeError("user embedding shape does not match the model");
    }
    Mat<T> h0(users + items, width);
    h0.topRows(users) = mp.user_emb;
    if (m == Modality::kId) {
      h0.bottomRows(items) = mp.item_emb;
    } else {
      mt.items = encode_item_modality<T>(ctx.features[mi - 1], mp.proj, mp.compress, hp);
      h0.bottomRows(items) = mt.items.emb;
    }
    mt.layers = propagate<T>(ctx.adj, h0, hp.layers);
    mt.bar = prompt_compensate<T>(mt.layers, hp.no_prompt ? nullptr : &mp.prompt, hp.layer_agg);
  }
  tr.mi = mi_enhance<T>(tr.modality[0].bar, tr.modality[1].bar, tr.modality[2].bar,
                        params.eps(0, 0), params.eps(0, 1), hp.n_exp, !hp.no_mi);
  tr.beta_weights = softmax<T>(params.beta.row(0).transpose());
  tr.item_graph = ctx.item_graph.template fuse<T>(params.alpha.row(0).transpose());
  tr.out = fuse_and_enhance<T>(tr.mi.hat, tr.beta_weights, tr.item_graph.op, ctx.num_users);
  return tr;
}

#define HPMREC_INSTANTIATE_MODEL(T)                                                             \
  template ModelContext<T> build_context<T>(const std::vector<Interaction>&, std::size_t,       \
                                            std::size_t, const FeatureMatrix&,                  \
                                            const FeatureMatrix&, const HyperParams&, int);     \
  template ModelParams<T> init_params<T>(const HyperParams&, const ModelContext<T>&,            \
                                         std::uint64_t);                                        \
  template EncodedItems<T> encode_item_modality<T>(const Mat<T>&, const Mat<T>&, const Mat<T>&, \
                                                   const HyperParams&);                         \
  template Mat<T> prompt_compensate<T>(const std::vector<Mat<T>>&, const Mat<T>*, LayerAgg);    \
  template MiOutput<T> mi_enhance<T>(const Mat<T>&, const Mat<T>&, const Mat<T>&, T, T, int,    \
                                     bool);                                                     \
  template FusedRepresentation<T> fuse_and_enhance<T>(const std::array<Mat<T>, 3>&,             \
                                                      const Vec<T>&, const SpMat<T>&,           \
                                                      std::size_t);                             \
  template Vec<T> predict_scores<T>(const Eigen::Ref<const Mat<T>>&, const Mat<T>&);            \
  template ForwardTrace<T> forward<T>(const ModelParams<T>&, const ModelContext<T>&,            \
                                      const HyperParams&);

HPMREC_INSTANTIATE_MODEL(float)
HPMREC_INSTANTIATE_MODEL(double)

}  // namespace hpmrec
