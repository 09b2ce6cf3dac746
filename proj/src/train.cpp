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

#include "hpmrec/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "hpmrec/config.hpp"
#include "hpmrec/errors.hpp"
#include "hpmrec/rng.hpp"

namespace hpmrec {

std::vector<TrainingTriple> sample_triples(std::span<const Interaction> train,
                                           const std::vector<std::vector<std::int32_t>>& user_items,
                                           std::size_t num_items, std::mt19937_64& rng,
                                           std::size_t* skipped_users) {
  std::vector<TrainingTriple> out;
  out.reserve(train.size());
  std::uniform_int_distribution<std::int32_t> pick(0, static_cast<std::int32_t>(num_items) - 1);
  std::vector<char> seen_full(user_items.size(), 0);
  std::size_t skipped = 0;
  for (const auto& p : train) {
    const auto& items = user_items[static_cast<std::size_t>(p.user)];
    if (items.size() >= num_items) {
      if (!seen_full[static_cast<std::size_t>(p.user)]) {
        seen_full[static_cast<std::size_t>(p.user)] = 1;
        ++skipped;
      }
      continue;
    }
    std::int32_t neg = pick(rng);
    while (std::binary_search(items.begin(), items.end(), neg)) neg = pick(rng);
    out.push_back({p.user, p.item, neg});
  }
  if (skipped_users) *skipped_users = skipped;
  return out;
}

nlohmann::ordered_json EpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["loss"] = hpmrec::to_json(loss);
  j["valid"] = valid.to_json();
  j["best_so_far"] = best_so_far;
  return j;
}

template <typename T>
MetricsReport evaluate_split(const ModelParams<T>& params, const ModelContext<T>& ctx,
                             const HyperParams& hp, const SplitDataset& data, EvalSplit split,
                             int threads) {
  const auto trace = forward<T>(params, ctx, hp);
  const auto& truth_pairs = split == EvalSplit::kValid ? data.valid : data.test;
  auto truth = items_by_user(truth_pairs, data.num_users);
  std::vector<Interaction> seen = data.train;
  if (split == EvalSplit::kTest) seen.insert(seen.end(), data.valid.begin(), data.valid.end());
  auto masked = items_by_user(seen, data.num_users);
  return evaluate_ranking<T>(trace.user_final(), trace.out.item_final, truth, masked, kDefaultTopK,
                             threads);
}

template <typename T>
FitResult<T> fit(const SplitDataset& data, const ModelContext<T>& ctx, const HyperParams& hp,
                 const FitOptions& options) {
  hp.validate();
  if (data.train.empty()) throw InputError("fit: empty training set");
  std::ofstream log, timing;
  const bool write = !options.out_dir.empty();
  if (write) {
    std::filesystem::create_directories(options.out_dir);
    log.open(options.out_dir / "train_log.jsonl", std::ios::trunc);
    timing.open(options.out_dir / "timing.jsonl", std::ios::trunc);
    if (!log || !timing) throw InputError("cannot write logs under " + options.out_dir.string());
  }

  ModelParams<T> params = init_params<T>(hp, ctx, hp.seed);
  AdamState<T> adam = AdamState<T>::like(params);
  const auto user_items = items_by_user(data.train, data.num_users);
  auto sampling = make_stream(hp.seed, "sampling");
  auto shuffling = make_stream(hp.seed, "shuffle");

  FitResult<T> result;
  double best_recall = -1.0;
  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::size_t skipped = 0;
    auto triples = sample_triples(data.train, user_items, data.num_items, sampling, &skipped);
    if (epoch == 1 && skipped > 0 && options.progress) {
      *options.progress << "warning: " << skipped
                        << " user(s) interacted with every item and get no negatives\n";
    }
    if (triples.empty()) throw InputError("fit: no training triples could be sampled");
    std::shuffle(triples.begin(), triples.end(), shuffling);

    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batches = 0;
    const auto bs = static_cast<std::size_t>(hp.batch_size);
    for (std::size_t b0 = 0; b0 < triples.size(); b0 += bs) {
      const std::span<const TrainingTriple> batch(triples.data() + b0,
                                                  std::min(bs, triples.size() - b0));
      const auto nodes = ssl_nodes(batch, data.num_users, data.num_items, hp.ssl_batch_only);
      const auto trace = forward<T>(params, ctx, hp);
      const auto loss = compute_loss<T>(trace, params, batch, hp, nodes);
      if (!std::isfinite(loss.total)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batches + 1));
      }
      const auto grads = backward<T>(trace, params, ctx, batch, hp, nodes);
      adam_step<T>(params, grads, adam, hp.learning_rate, hp.clip_norm);
      rec.loss += loss;
      ++batches;
    }
    rec.loss /= static_cast<double>(batches);

    // Validate what a checkpoint would hold so reloading reproduces the log.
    const ModelParams<T> snapshot = round_to_float(params);
    rec.valid = evaluate_split<T>(snapshot, ctx, hp, data, EvalSplit::kValid, options.threads);
    const double recall = rec.valid.recall_at(20);
    if (recall > best_recall) {
      best_recall = recall;
      rec.best_so_far = true;
      result.best_epoch = epoch;
      result.best_params = snapshot;
      result.best_valid = rec.valid;
      if (write) write_checkpoint(make_checkpoint<T>(params, &adam), options.out_dir / "best.ckpt");
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (write) {
      log << rec.to_json().dump() << '\n';
      log.flush();
      timing << nlohmann::ordered_json{{"epoch", epoch}, {"wall_seconds", rec.wall_seconds}}.dump()
             << '\n';
    }
    if (options.progress) {
      *options.progress << "epoch " << epoch << " loss " << rec.loss.total << " bpr "
                        << rec.loss.bpr << " valid R@20 " << recall
                        << (rec.best_so_far ? " *" : "") << '\n';
    }
    result.history.push_back(std::move(rec));
    if (epoch - result.best_epoch >= hp.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

std::size_t GridSpec::size() const {
  return layers.size() * reg_weight.size() * ssl_weight.size() * n_exp.size() * knn_k.size();
}

void GridSpec::validate() const {
  if (layers.empty() || reg_weight.empty() || ssl_weight.empty() || n_exp.empty() ||
      knn_k.empty()) {
    throw ConfigError("every grid must have at least one value");
  }
}

HyperParams GridSpec::point(const HyperParams& base, std::size_t index) const {
  if (index >= size()) throw BoundsError("grid index out of range");
  HyperParams hp = base;
  std::size_t i = index;
  hp.knn_k = knn_k[i % knn_k.size()];
  i /= knn_k.size();
  hp.n_exp = n_exp[i % n_exp.size()];
  i /= n_exp.size();
  hp.ssl_weight = ssl_weight[i % ssl_weight.size()];
  i /= ssl_weight.size();
  hp.reg_weight = reg_weight[i % reg_weight.size()];
  i /= reg_weight.size();
  hp.layers = layers[i];
  return hp;
}

nlohmann::ordered_json GridReport::to_json() const {
  nlohmann::ordered_json j;
  j["num_runs"] = runs.size();
  j["best_index"] = best_index;
  if (!runs.empty()) {
    j["best_hyperparams"] = hyperparams_to_json(runs[best_index].hp);
    j["best_valid"] = runs[best_index].valid.to_json();
  }
  auto& arr = j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    arr.push_back({{"index", r.index},
                   {"layers", r.hp.layers},
                   {"reg_weight", r.hp.reg_weight},
                   {"ssl_weight", r.hp.ssl_weight},
                   {"n_exp", r.hp.n_exp},
                   {"knn_k", r.hp.knn_k},
                   {"best_epoch", r.best_epoch},
                   {"valid", r.valid.to_json()}});
  }
  return j;
}

template <typename T>
GridReport grid_search(const SplitDataset& data, const FeatureMatrix& visual,
                       const FeatureMatrix& textual, const HyperParams& base, const GridSpec& grid,
                       const FitOptions& options) {
  grid.validate();
  GridReport report;
  double best = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const HyperParams hp = grid.point(base, i);
    hp.validate();
    const auto ctx = build_context<T>(data.train, data.num_users, data.num_items, visual, textual,
                                      hp, options.threads);
    FitOptions run_opts = options;
    if (!options.out_dir.empty()) run_opts.out_dir = options.out_dir / ("run_" + std::to_string(i));
    const auto res = fit<T>(data, ctx, hp, run_opts);
    GridRun run{i, hp, res.best_epoch, res.best_valid};
    const double r20 = res.best_valid.recall_at(20);
    if (r20 > best) {
      best = r20;
      report.best_index = i;
    }
    report.runs.push_back(std::move(run));
  }
  return report;
}

#define HPMREC_INSTANTIATE_TRAIN(T)                                                             \
  template MetricsReport evaluate_split<T>(const ModelParams<T>&, const ModelContext<T>&,        \
                                           const HyperParams&, const SplitDataset&, EvalSplit,   \
                                           int);                                                 \
  template FitResult<T> fit<T>(const SplitDataset&, const ModelContext<T>&, const HyperParams&,  \
                               const FitOptions&);                                               \
  template GridReport grid_search<T>(const SplitDataset&, const FeatureMatrix&,                  \
                                     const FeatureMatrix&, const HyperParams&, const GridSpec&,  \
                                     const FitOptions&);

HPMREC_INSTANTIATE_TRAIN(float)
HPMREC_INSTANTIATE_TRAIN(double)

}  // namespace hpmrec
