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

#include "hpmrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hpmrec/errors.hpp"
#include "hpmrec/rng.hpp"

namespace hpmrec {
namespace {

FeatureMatrix block_features(Modality modality, std::size_t dim, const std::vector<int>& item_block,
                             double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat<double> base(2, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < base.size(); ++i) base.data()[i] = normal(rng);
  base.rowwise().normalize();
  const double scale = noise / std::sqrt(static_cast<double>(dim));
  FeatureMatrix f;
  f.modality = modality;
  f.values.resize(static_cast<Eigen::Index>(item_block.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < item_block.size(); ++i) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double v = base(item_block[i], static_cast<Eigen::Index>(c)) + scale * normal(rng);
      f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = static_cast<float>(v);
    }
  }
  return f;
}

}  // namespace

SyntheticData make_planted_dataset(const SyntheticOptions& options) {
  const auto half_items = options.num_items / 2;
  if (options.num_users < 2 || half_items < 1 || options.per_user > half_items * 2) {
    throw ConfigError("synthetic dataset too small for the requested interactions");
  }
  SyntheticData out;
  out.user_block.resize(options.num_users);
  out.item_block.resize(options.num_items);
  for (std::size_t u = 0; u < options.num_users; ++u) out.user_block[u] = u < options.num_users / 2 ? 0 : 1;
  for (std::size_t i = 0; i < options.num_items; ++i) out.item_block[i] = i < half_items ? 0 : 1;

  auto rng = make_stream(options.seed, "synthetic");
  std::bernoulli_distribution leave(options.cross_block);
  std::vector<std::vector<std::int32_t>> pools(2);
  for (std::size_t i = 0; i < options.num_items; ++i) {
    pools[static_cast<std::size_t>(out.item_block[i])].push_back(static_cast<std::int32_t>(i));
  }
  std::vector<Interaction> pairs;
  for (std::size_t u = 0; u < options.num_users; ++u) {
    const int home = out.user_block[u];
    std::array<std::vector<std::int32_t>, 2> left = {pools[0], pools[1]};
    for (auto& p : left) std::shuffle(p.begin(), p.end(), rng);
    for (std::size_t n = 0; n < options.per_user; ++n) {
      int b = leave(rng) ? 1 - home : home;
      if (left[static_cast<std::size_t>(b)].empty()) b = 1 - b;
      auto& pool = left[static_cast<std::size_t>(b)];
      pairs.push_back({static_cast<std::int32_t>(u), pool.back()});
      pool.pop_back();
    }
  }
  std::sort(pairs.begin(), pairs.end());
  out.table = table_from_pairs(options.num_users, options.num_items, pairs);
  out.visual = block_features(Modality::kVisual, options.visual_dim, out.item_block, options.noise, rng);
  out.textual = block_features(Modality::kTextual, options.textual_dim, out.item_block, options.noise, rng);
  return out;
}

}  // namespace hpmrec
