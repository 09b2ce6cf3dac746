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
#include <vector>

#include "hpmrec/data.hpp"

namespace hpmrec {

// Two-block dataset with a planted community structure. The first half of
// the users and items form block 0, the rest block 1.
struct SyntheticOptions {
  std::size_t num_users = 60;
  std::size_t num_items = 40;
  std::size_t per_user = 16;
  double cross_block = 0.1;  // chance an interaction leaves the user's block
  double noise = 0.1;        // feature noise norm relative to the block vector
  std::size_t visual_dim = 32;
  std::size_t textual_dim = 16;
  std::uint64_t seed = 2026;
};

struct SyntheticData {
  InteractionTable table;
  FeatureMatrix visual;
  FeatureMatrix textual;
  std::vector<int> user_block;
  std::vector<int> item_block;
};

SyntheticData make_planted_dataset(const SyntheticOptions& options = {});

}  // namespace hpmrec
