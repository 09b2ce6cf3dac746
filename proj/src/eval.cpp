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

#include "hpmrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hpmrec/errors.hpp"

namespace hpmrec {
namespace {

// Users scored per GEMM call. Fixed so results never depend on threads.
constexpr Eigen::Index kUserBlock = 128;

struct UserMetrics {
  bool evaluated = false;
  std::vector<double> recall;
  std::vector<double> ndcg;
};

}  // namespace

template <typename T>
std::vector<std::int32_t> rank_items(const Vec<T>& scores, const std::vector<char>& masked, int k) {
  if (k < 1) throw BoundsError("rank_items: k must be positive");
  if (!masked.empty() && masked.size() != static_cast<std::size_t>(scores.size())) {
    throw ShapeError("rank_items: mask length differs from score length");
  }
  std::vector<std::int32_t> cand;
  cand.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (masked.empty() || !masked[static_cast<std::size_t>(i)]) cand.push_back(static_cast<std::int32_t>(i));
  }
  const auto take = std::min(cand.size(), static_cast<std::size_t>(k));
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                    [&scores](std::int32_t a, std::int32_t b) {
                      if (scores(a) != scores(b)) return scores(a) > scores(b);
                      return a < b;
                    });
  cand.resize(take);
  return cand;
}

double recall_at_k(std::span<const std::int32_t> topk, std::span<const std::int32_t> truth) {
  if (truth.empty()) throw InputError("recall_at_k: empty ground truth");
  std::size_t hits = 0;
  for (const auto i : topk) hits += std::binary_search(truth.begin(), truth.end(), i);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double ndcg_at_k(std::span<const std::int32_t> topk, std::span<const std::int32_t> truth, int k) {
  if (truth.empty()) throw InputError("ndcg_at_k: empty ground truth");
  const auto n = std::min(topk.size(), static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(truth.begin(), truth.end(), topk[r])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const auto ideal = std::min(truth.size(), static_cast<std::size_t>(k));
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

double MetricsReport::recall_at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return recall[i];
  }
  throw BoundsError("no recall computed at K=" + std::to_string(k));
}

double MetricsReport::ndcg_at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return ndcg[i];
  }
  throw BoundsError("no NDCG computed at K=" + std::to_string(k));
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < ks.size(); ++i) j["recall@" + std::to_string(ks[i])] = recall[i];
  for (std::size_t i = 0; i < ks.size(); ++i) j["ndcg@" + std::to_string(ks[i])] = ndcg[i];
  j["num_users_evaluated"] = num_users_evaluated;
  return j;
}

std::vector<std::vector<std::int32_t>> items_by_user(std::span<const Interaction> pairs,
                                                     std::size_t num_users) {
  std::vector<std::vector<std::int32_t>> out(num_users);
  for (const auto& p : pairs) {
    if (p.user < 0 || static_cast<std::size_t>(p.user) >= num_users) {
      throw BoundsError("items_by_user: user index out of range");
    }
    out[static_cast<std::size_t>(p.user)].push_back(p.item);
  }
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

template <typename T>
MetricsReport evaluate_ranking(const Eigen::Ref<const Mat<T>>& user_final, const Mat<T>& item_final,
                               const std::vector<std::vector<std::int32_t>>& truth,
                               const std::vector<std::vector<std::int32_t>>& masked,
                               std::span<const int> ks, int threads) {
  const auto users = user_final.rows();
  if (static_cast<std::size_t>(users) != truth.size() || (!masked.empty() && masked.size() != truth.size())) {
    throw ShapeError("evaluate_ranking: per-user lists do not match the user count");
  }
  if (user_final.cols() != item_final.cols()) throw ShapeError("evaluate_ranking: width mismatch");
  if (ks.empty()) throw ConfigError("evaluate_ranking: no K values");
  const int max_k = *std::max_element(ks.begin(), ks.end());
  const auto items = item_final.rows();

  std::vector<UserMetrics> per_user(static_cast<std::size_t>(users));
  const auto blocks = static_cast<std::size_t>((users + kUserBlock - 1) / kUserBlock);
  parallel_for(blocks, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<char> mask(static_cast<std::size_t>(items));
    for (std::size_t b = begin; b < end; ++b) {
      const Eigen::Index u0 = static_cast<Eigen::Index>(b) * kUserBlock;
      const Eigen::Index nu = std::min(kUserBlock, users - u0);
      const Mat<T> scores = user_final.middleRows(u0, nu) * item_final.transpose();
      for (Eigen::Index r = 0; r < nu; ++r) {
        const auto u = static_cast<std::size_t>(u0 + r);
        if (truth[u].empty()) continue;
        std::fill(mask.begin(), mask.end(), 0);
        if (!masked.empty()) {
          for (const auto i : masked[u]) mask[static_cast<std::size_t>(i)] = 1;
        }
        if (std::find(mask.begin(), mask.end(), 0) == mask.end()) continue;
        const Vec<T> row = scores.row(r).transpose();
        const auto top = rank_items<T>(row, mask, max_k);
        auto& m = per_user[u];
        m.evaluated = true;
        for (const int k : ks) {
          const auto n = std::min(top.size(), static_cast<std::size_t>(k));
          const std::span<const std::int32_t> head(top.data(), n);
          m.recall.push_back(recall_at_k(head, truth[u]));
          m.ndcg.push_back(ndcg_at_k(head, truth[u], k));
        }
      }
    }
  });

  MetricsReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.recall.assign(ks.size(), 0.0);
  report.ndcg.assign(ks.size(), 0.0);
  for (const auto& m : per_user) {
    if (!m.evaluated) continue;
    ++report.num_users_evaluated;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      report.recall[i] += m.recall[i];
      report.ndcg[i] += m.ndcg[i];
    }
  }
  if (report.num_users_evaluated > 0) {
    const double inv = 1.0 / static_cast<double>(report.num_users_evaluated);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      report.recall[i] *= inv;
      report.ndcg[i] *= inv;
    }
  }
  return report;
}

template std::vector<std::int32_t> rank_items<float>(const Vec<float>&, const std::vector<char>&, int);
template std::vector<std::int32_t> rank_items<double>(const Vec<double>&, const std::vector<char>&, int);
template MetricsReport evaluate_ranking<float>(const Eigen::Ref<const Mat<float>>&, const Mat<float>&,
                                               const std::vector<std::vector<std::int32_t>>&,
                                               const std::vector<std::vector<std::int32_t>>&,
                                               std::span<const int>, int);
template MetricsReport evaluate_ranking<double>(const Eigen::Ref<const Mat<double>>&, const Mat<double>&,
                                                const std::vector<std::vector<std::int32_t>>&,
                                                const std::vector<std::vector<std::int32_t>>&,
                                                std::span<const int>, int);

}  // namespace hpmrec
