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

#include "hpmrec/losses.hpp"

#include <algorithm>
#include <cmath>

#include "hpmrec/errors.hpp"

namespace hpmrec {

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  bpr += o.bpr;
  reg += o.reg;
  rec += o.rec;
  align += o.align;
  expand += o.expand;
  ssl += o.ssl;
  prompt_align += o.prompt_align;
  total += o.total;
  return *this;
}

LossBreakdown& LossBreakdown::operator/=(double s) {
  bpr /= s;
  reg /= s;
  rec /= s;
  align /= s;
  expand /= s;
  ssl /= s;
  prompt_align /= s;
  total /= s;
  return *this;
}

nlohmann::ordered_json to_json(const LossBreakdown& b) {
  return {{"bpr", b.bpr},     {"reg", b.reg}, {"rec", b.rec},
          {"align", b.align}, {"expand", b.expand}, {"ssl", b.ssl},
          {"prompt_align", b.prompt_align}, {"total", b.total}};
}

template <typename T>
T neg_log_sigmoid(T x) {
  // -log sigmoid(x) = softplus(-x)
  return x >= T(0) ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

template <typename T>
T bpr_loss(std::span<const T> pos, std::span<const T> neg, T reg_term, T lambda) {
  if (pos.size() != neg.size()) throw ShapeError("bpr_loss: batch sizes differ");
  if (pos.empty()) return lambda * reg_term;
  T acc(0);
  for (std::size_t i = 0; i < pos.size(); ++i) acc += neg_log_sigmoid(pos[i] - neg[i]);
  return acc / static_cast<T>(pos.size()) + lambda * reg_term;
}

template <typename T>
T align_loss(const Mat<T>& id, const Mat<T>& visual, const Mat<T>& textual,
             std::span<const std::int32_t> nodes, SignAlign sign) {
  if (id.rows() != visual.rows() || id.rows() != textual.rows() || id.cols() != visual.cols() ||
      id.cols() != textual.cols()) {
    throw ShapeError("align_loss: representations differ in shape");
  }
  if (nodes.empty()) return T(0);
  T acc(0);
  for (const auto n : nodes) {
    acc += (id.row(n) - visual.row(n)).cwiseAbs().sum();
    acc += (id.row(n) - textual.row(n)).cwiseAbs().sum();
    acc += (visual.row(n) - textual.row(n)).cwiseAbs().sum();
  }
  const T mean = acc / static_cast<T>(nodes.size());
  return sign == SignAlign::kMinimize ? mean : -mean;
}

template <typename T>
T expand_loss(std::span<const Mat<T>> reps, int num_components,
              std::span<const std::int32_t> nodes) {
  if (num_components < 2) throw ConfigError("expand_loss needs at least two components");
  if (nodes.empty()) return T(0);
  T acc(0);
  for (const auto& rep : reps) {
    if (rep.cols() % num_components != 0) throw ShapeError("expand_loss: width not divisible");
    const Eigen::Index cw = rep.cols() / num_components;
    for (const auto n : nodes) {
      const auto row = rep.row(n);
      for (Eigen::Index t = 0; t < cw; ++t) {
        T imag(0);
        for (Eigen::Index k = 1; k < num_components; ++k) imag += row(k * cw + t);
        imag /= static_cast<T>(num_components - 1);
        acc += std::abs(row(t) - imag);
      }
    }
  }
  return -acc / static_cast<T>(nodes.size());
}

template <typename T>
T prompt_align_loss(const std::array<const Mat<T>*, 3>& prompts,
                    const std::array<const Mat<T>*, 3>& layer0,
                    std::span<const std::int32_t> nodes) {
  if (nodes.empty()) return T(0);
  T acc(0);
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& p = *prompts[m];
    const auto& h = *layer0[m];
    if (p.rows() != h.rows() || p.cols() != h.cols()) throw ShapeError("prompt shape mismatch");
    for (const auto n : nodes) acc += (p.row(n) - h.row(n)).cwiseAbs().sum();
  }
  return acc / static_cast<T>(nodes.size());
}

LossBreakdown total_loss(double bpr, double reg_term, double align, double expand,
                         double prompt_align, const HyperParams& hp) {
  LossBreakdown b;
  b.bpr = bpr;
  b.reg = hp.reg_weight * reg_term;
  b.rec = b.bpr + b.reg;
  if (!hp.no_ssl) {
    b.align = align;
    b.expand = expand;
  }
  b.ssl = b.align + b.expand;
  b.prompt_align = hp.explicit_prompt ? prompt_align : 0.0;
  b.total = b.rec + hp.ssl_weight * (b.ssl + b.prompt_align);
  return b;
}

std::vector<std::int32_t> ssl_nodes(std::span<const TrainingTriple> batch, std::size_t num_users,
                                    std::size_t num_items, bool batch_only) {
  std::vector<std::int32_t> nodes;
  if (!batch_only) {
    nodes.resize(num_users + num_items);
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = static_cast<std::int32_t>(i);
    return nodes;
  }
  const auto users = static_cast<std::int32_t>(num_users);
  for (const auto& t : batch) {
    nodes.push_back(t.user);
    nodes.push_back(users + t.pos);
    nodes.push_back(users + t.neg);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

template <typename T>
T reg_term(const ForwardTrace<T>& trace, std::span<const TrainingTriple> batch) {
  if (batch.empty()) return T(0);
  const auto users = static_cast<Eigen::Index>(trace.num_users);
  T acc(0);
  for (const auto& mt : trace.modality) {
    const auto& h0 = mt.layers.front();
    for (const auto& t : batch) {
      acc += h0.row(t.user).squaredNorm();
      acc += h0.row(users + t.pos).squaredNorm();
      acc += h0.row(users + t.neg).squaredNorm();
    }
  }
  return acc / static_cast<T>(batch.size());
}

template <typename T>
LossBreakdown compute_loss(const ForwardTrace<T>& trace, const ModelParams<T>& params,
                           std::span<const TrainingTriple> batch, const HyperParams& hp,
                           std::span<const std::int32_t> nodes) {
  const auto& fused = trace.out.fused;
  const auto& items = trace.out.item_final;
  std::vector<T> pos(batch.size()), neg(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    pos[b] = fused.row(batch[b].user).dot(items.row(batch[b].pos));
    neg[b] = fused.row(batch[b].user).dot(items.row(batch[b].neg));
  }
  const T bpr = bpr_loss<T>(pos, neg, T(0), T(0));
  const T reg = reg_term<T>(trace, batch);

  T align(0), expand(0), prompt(0);
  if (!hp.no_ssl) {
    std::array<Mat<T>, 3> const* reps = nullptr;
    std::array<Mat<T>, 3> bars;
    if (hp.ssl_on == SslOn::kHat) {
      reps = &trace.mi.hat;
    } else {
      for (std::size_t m = 0; m < 3; ++m) bars[m] = trace.modality[m].bar;
      reps = &bars;
    }
    align = align_loss<T>((*reps)[0], (*reps)[1], (*reps)[2], nodes, hp.sign_align);
    expand = expand_loss<T>(std::span<const Mat<T>>(reps->data(), 3), hp.num_components(), nodes);
  }
  if (hp.explicit_prompt) {
    std::array<const Mat<T>*, 3> prompts{}, layer0{};
    for (std::size_t m = 0; m < 3; ++m) {
      prompts[m] = &params.modality[m].prompt;
      layer0[m] = &trace.modality[m].layers.front();
    }
    prompt = prompt_align_loss<T>(prompts, layer0, nodes);
  }
  return total_loss(static_cast<double>(bpr), static_cast<double>(reg), static_cast<double>(align),
                    static_cast<double>(expand), static_cast<double>(prompt), hp);
}

#define HPMREC_INSTANTIATE_LOSSES(T)                                                          \
  template T neg_log_sigmoid<T>(T);                                                           \
  template T bpr_loss<T>(std::span<const T>, std::span<const T>, T, T);                       \
  template T align_loss<T>(const Mat<T>&, const Mat<T>&, const Mat<T>&,                       \
                           std::span<const std::int32_t>, SignAlign);                         \
  template T expand_loss<T>(std::span<const Mat<T>>, int, std::span<const std::int32_t>);     \
  template T prompt_align_loss<T>(const std::array<const Mat<T>*, 3>&,                        \
                                  const std::array<const Mat<T>*, 3>&,                        \
                                  std::span<const std::int32_t>);                             \
  template T reg_term<T>(const ForwardTrace<T>&, std::span<const TrainingTriple>);            \
  template LossBreakdown compute_loss<T>(const ForwardTrace<T>&, const ModelParams<T>&,       \
                                         std::span<const TrainingTriple>, const HyperParams&, \
                                         std::span<const std::int32_t>);

HPMREC_INSTANTIATE_LOSSES(float)
HPMREC_INSTANTIATE_LOSSES(double)

}  // namespace hpmrec
