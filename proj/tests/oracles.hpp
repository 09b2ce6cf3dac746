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

// Brute-force reference implementations used by the unit and acceptance
// tests. They share no code with the library beyond plain data types.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

// Cayley-Dickson product on flat component vectors, straight from the
// doubling rule (a, b)(c, d) = (ac - d* b, d a + b c*).
inline std::vector<double> cd_conj(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  out[0] = x[0];
  for (std::size_t i = 1; i < x.size(); ++i) out[i] = -x[i];
  return out;
}

inline std::vector<double> cd_mul(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n == 1) return {x[0] * y[0]};
  const std::size_t h = n / 2;
  const std::vector<double> a(x.begin(), x.begin() + h), b(x.begin() + h, x.end());
  const std::vector<double> c(y.begin(), y.begin() + h), d(y.begin() + h, y.end());
  const auto ac = cd_mul(a, c);
  const auto db = cd_mul(cd_conj(d), b);
  const auto da = cd_mul(d, a);
  const auto bc = cd_mul(b, cd_conj(c));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < h; ++i) {
    out[i] = ac[i] - db[i];
    out[h + i] = da[i] + bc[i];
  }
  return out;
}

// Hamilton's quaternion product with i^2 = j^2 = k^2 = ijk = -1.
inline std::vector<double> hamilton(const std::vector<double>& p, const std::vector<double>& q) {
  return {p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
          p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
          p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
          p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]};
}

inline double norm(const std::vector<double>& x) {
  double s = 0.0;
  for (const double v : x) s += v * v;
  return std::sqrt(s);
}

// D^-1/2 A D^-1/2 of the bipartite graph, users first.
inline Dense norm_adj(const std::vector<std::pair<int, int>>& edges, int users, int items) {
  const int n = users + items;
  Dense a(n, std::vector<double>(n, 0.0));
  for (const auto& [u, i] : edges) {
    a[u][users + i] = 1.0;
    a[users + i][u] = 1.0;
  }
  std::vector<double> deg(n, 0.0);
  for (int r = 0; r < n; ++r) deg[r] = std::accumulate(a[r].begin(), a[r].end(), 0.0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (a[r][c] != 0.0) a[r][c] /= std::sqrt(deg[r]) * std::sqrt(deg[c]);
    }
  }
  return a;
}

inline Dense matmul(const Dense& a, const Dense& b) {
  Dense out(a.size(), std::vector<double>(b.front().size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      for (std::size_t j = 0; j < b.front().size(); ++j) out[i][j] += a[i][k] * b[k][j];
    }
  }
  return out;
}

// Top-k cosine neighbours per row, excluding self, ordered by (sim desc,
// index asc); zero similarities dropped; result sorted by column.
inline std::vector<std::vector<std::pair<int, double>>> knn(const Dense& f, int k) {
  const int n = static_cast<int>(f.size());
  std::vector<std::vector<std::pair<int, double>>> out(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> all;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (std::size_t c = 0; c < f[i].size(); ++c) {
        dot += f[i][c] * f[j][c];
        ni += f[i][c] * f[i][c];
        nj += f[j][c] * f[j][c];
      }
      const double sim = (ni == 0.0 || nj == 0.0) ? 0.0 : dot / (std::sqrt(ni) * std::sqrt(nj));
      all.emplace_back(-sim, j);
    }
    std::sort(all.begin(), all.end());
    for (int t = 0; t < k; ++t) {
      if (all[t].first != 0.0) out[i].emplace_back(all[t].second, -all[t].first);
    }
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

// Stable full sort of the unmasked items, truncated to k.
inline std::vector<int> rank(const std::vector<double>& scores, const std::set<int>& masked, int k) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (!masked.count(i)) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  if (static_cast<int>(idx.size()) > k) idx.resize(k);
  return idx;
}

inline double recall(const std::vector<int>& top, const std::set<int>& truth) {
  int hits = 0;
  for (const int t : truth) hits += std::count(top.begin(), top.end(), t) > 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// NDCG computed truth-first: locate each relevant item in the list.
inline double ndcg(const std::vector<int>& top, const std::set<int>& truth, int k) {
  double dcg = 0.0;
  for (const int t : truth) {
    const auto it = std::find(top.begin(), top.end(), t);
    const auto pos = it - top.begin();
    if (it != top.end() && pos < k) dcg += std::log(2.0) / std::log(static_cast<double>(pos) + 2.0);
  }
  double idcg = 0.0;
  for (int r = 1; r <= std::min<int>(k, static_cast<int>(truth.size())); ++r) {
    idcg += std::log(2.0) / std::log(static_cast<double>(r) + 1.0);
  }
  return dcg / idcg;
}

}  // namespace oracle
