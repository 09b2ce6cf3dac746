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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpmrec/losses.hpp"
#include "hpmrec/model.hpp"

namespace hpmrec {

// One gradient tensor per parameter, shape-matched with ModelParams.
template <typename T>
using GradientSet = ModelParams<T>;

// Exact gradient of compute_loss(trace, params, batch, hp, nodes).
// Manhattan terms use sign(0) = 0.
template <typename T>
GradientSet<T> backward(const ForwardTrace<T>& trace, const ModelParams<T>& params,
                        const ModelContext<T>& ctx, std::span<const TrainingTriple> batch,
                        const HyperParams& hp, std::span<const std::int32_t> nodes);

template <typename T>
struct AdamState {
  ModelParams<T> m;
  ModelParams<T> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState like(const ModelParams<T>& params) {
    AdamState s;
    s.m = params.zeros_like();
    s.v = params.zeros_like();
    return s;
  }
};

// Bias-corrected Adam. Throws NumericalError naming the first parameter
// whose gradient is non-finite; nothing is modified in that case.
// clip_norm > 0 rescales the global gradient norm first.
template <typename T>
void adam_step(ModelParams<T>& params, const GradientSet<T>& grads, AdamState<T>& state, double lr,
               double clip_norm = 0.0);

// Arguments of every |.| in the objective (plus the item-graph degree
// terms). A sign flip between two evaluations means a finite difference
// straddles a kink.
template <typename T>
std::vector<T> manhattan_arguments(const ForwardTrace<T>& trace, const ModelParams<T>& params,
                                   const HyperParams& hp, std::span<const std::int32_t> nodes);

struct GradCheckEntry {
  std::string name;
  std::size_t numel = 0;
  std::size_t checked = 0;
  std::size_t excluded = 0;  // coordinates whose stencil crosses a kink
  double max_abs_error = 0.0;
  double max_fd = 0.0;
  double rel_error = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  double tolerance = 1e-4;
  double step = 1e-5;
  std::uint64_t seed = 0;
  bool passed = true;
  std::vector<GradCheckEntry> entries;

  nlohmann::ordered_json to_json() const;
};

// Everything needed to evaluate the objective at a point.
struct GradCheckProblem {
  HyperParams hp;
  ModelContext<double> ctx;
  ModelParams<double> params;
  std::vector<TrainingTriple> batch;
};

// Tiny deterministic problem: 3 users, 4 items, two content modalities,
// defaults n_exp = 1, dim = 2, layers = 1 with every loss term active.
GradCheckProblem make_gradcheck_problem(std::uint64_t seed, const HyperParams& base);

// Compares backward() with central differences per parameter tensor.
// `corrupt`, when set, edits the analytic gradients before comparison.
GradCheckReport grad_check(const GradCheckProblem& problem, double tolerance, double step,
                           std::uint64_t seed,
                           const std::function<void(GradientSet<double>&)>& corrupt = {});

// HPMC binary: "HPMC", u32 version = 1, u64 count, then per tensor
// (u32 name length, name bytes, u64 numel, numel x f32 LE).
struct Checkpoint {
  std::vector<std::pair<std::string, std::vector<float>>> tensors;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Parameters plus Adam moments ("adam.m/<name>", "adam.v/<name>",
// "adam.step").
template <typename T>
Checkpoint make_checkpoint(const ModelParams<T>& params, const AdamState<T>* adam);

// Fills `params` (and `adam` when given) from the checkpoint. The set of
// names must match exactly, as must every tensor size.
template <typename T>
void restore_checkpoint(const Checkpoint& ckpt, ModelParams<T>& params, AdamState<T>* adam);

// Parameters rounded through float32, i.e. what a checkpoint stores.
template <typename T>
ModelParams<T> round_to_float(const ModelParams<T>& params);

}  // namespace hpmrec
