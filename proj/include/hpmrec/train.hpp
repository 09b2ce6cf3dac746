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
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpmrec/data.hpp"
#include "hpmrec/eval.hpp"
#include "hpmrec/losses.hpp"
#include "hpmrec/model.hpp"
#include "hpmrec/optim.hpp"

namespace hpmrec {

// One negative per train pair, drawn uniformly from the items the user has
// not interacted with in `user_items` (sorted per user). Users who have
// interacted with every item get no triples; `skipped_users` counts them.
std::vector<TrainingTriple> sample_triples(std::span<const Interaction> train,
                                           const std::vector<std::vector<std::int32_t>>& user_items,
                                           std::size_t num_items, std::mt19937_64& rng,
                                           std::size_t* skipped_users = nullptr);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;  // mean over the epoch's mini-batches
  MetricsReport valid;
  bool best_so_far = false;
  double wall_seconds = 0.0;

  // Deterministic fields only; wall time goes to a separate log.
  nlohmann::ordered_json to_json() const;
};

struct FitOptions {
  std::filesystem::path out_dir;  // empty: no files written
  int threads = 1;
  std::ostream* progress = nullptr;
};

template <typename T>
struct FitResult {
  ModelParams<T> best_params;  // rounded through float32, as checkpointed
  int best_epoch = 0;
  MetricsReport best_valid;
  std::vector<EpochRecord> history;
  bool early_stopped = false;
};

// Files under out_dir: train_log.jsonl, timing.jsonl, best.ckpt.
// A non-finite loss throws NumericalError; best.ckpt keeps the last
// improvement.
template <typename T>
FitResult<T> fit(const SplitDataset& data, const ModelContext<T>& ctx, const HyperParams& hp,
                 const FitOptions& options = {});

// Validation (mask train) or test (mask train + valid) metrics of `params`.
enum class EvalSplit { kValid, kTest };

template <typename T>
MetricsReport evaluate_split(const ModelParams<T>& params, const ModelContext<T>& ctx,
                             const HyperParams& hp, const SplitDataset& data, EvalSplit split,
                             int threads = 1);

struct GridSpec {
  std::vector<int> layers = {1, 2, 3};
  std::vector<double> reg_weight = {1e-2, 1e-3, 1e-4};
  std::vector<double> ssl_weight = {1e-2, 1e-3, 1e-4};
  std::vector<int> n_exp = {0, 1, 2, 3};
  std::vector<int> knn_k = {10};

  std::size_t size() const;
  // Row-major: layers varies slowest, knn_k fastest.
  HyperParams point(const HyperParams& base, std::size_t index) const;
  void validate() const;
};

struct GridRun {
  std::size_t index = 0;
  HyperParams hp;
  int best_epoch = 0;
  MetricsReport valid;
};

struct GridReport {
  std::vector<GridRun> runs;
  std::size_t best_index = 0;

  nlohmann::ordered_json to_json() const;
};

// Fits every grid point with the shared seed. Run i writes to
// out_dir/run_<i> when out_dir is set. Ties keep the earlier run.
template <typename T>
GridReport grid_search(const SplitDataset& data, const FeatureMatrix& visual,
                       const FeatureMatrix& textual, const HyperParams& base, const GridSpec& grid,
                       const FitOptions& options = {});

}  // namespace hpmrec
