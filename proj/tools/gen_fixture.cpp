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

// Writes the bundled tiny fixture: a planted two-block dataset in raw form
// (string ids, a duplicate line, a few users and items below the 5-core)
// with feature rows in first-seen item order.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <unordered_map>

#include "hpmrec/data.hpp"
#include "hpmrec/rng.hpp"
#include "hpmrec/synthetic.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data/tiny";
  std::filesystem::create_directories(dir);
  const auto data = hpmrec::make_planted_dataset();
  const auto& pairs = data.table.pairs;

  // Sparse extras the 5-core filter must remove: item 40 is rare and the
  // extra users interact with it and two block items.
  std::vector<std::pair<std::string, std::string>> lines;
  for (const auto& p : pairs) {
    lines.emplace_back("u" + std::to_string(p.user), "i" + std::to_string(p.item));
  }
  auto rng = hpmrec::make_stream(7, "fixture");
  std::shuffle(lines.begin(), lines.end(), rng);
  lines.emplace_back("u60", "i40");
  lines.emplace_back("u60", "i0");
  lines.emplace_back("u61", "i40");
  lines.emplace_back("u61", "i21");
  lines.push_back(lines.front());

  std::ofstream out(dir / "interactions.tsv");
  std::unordered_map<std::string, std::size_t> first_seen;
  std::vector<std::size_t> order;
  for (const auto& [u, i] : lines) {
    out << u << '\t' << i << '\n';
    if (first_seen.emplace(i, order.size()).second) order.push_back(std::stoul(i.substr(1)));
  }

  auto write = [&](const hpmrec::FeatureMatrix& f, const char* name) {
    hpmrec::FeatureMatrix rows;
    rows.modality = f.modality;
    rows.values.resize(static_cast<Eigen::Index>(order.size()), f.values.cols());
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (std::size_t r = 0; r < order.size(); ++r) {
      const auto src = order[r];
      if (src < f.rows()) {
        rows.values.row(static_cast<Eigen::Index>(r)) = f.values.row(static_cast<Eigen::Index>(src));
      } else {
        for (Eigen::Index c = 0; c < rows.values.cols(); ++c) rows.values(static_cast<Eigen::Index>(r), c) = normal(rng);
      }
    }
    hpmrec::save_features(rows, dir / name);
  };
  write(data.visual, "visual.hpmf");
  write(data.textual, "textual.hpmf");
  std::cout << "wrote " << lines.size() << " lines and " << order.size() << " feature rows to "
            << dir.string() << '\n';
  return 0;
}
