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

#include "hpmrec/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hpmrec/binio.hpp"
#include "hpmrec/errors.hpp"

namespace hpmrec {
namespace {

constexpr std::uint32_t kSparseVersion = 1;
constexpr Eigen::Index kKnnBlockRows = 256;

}  // namespace

template <typename T>
SpMat<T> build_norm_adj(const std::vector<Interaction>& train, std::size_t num_users,
                        std::size_t num_items) {
  const std::size_t n = num_users + num_items;
  std::vector<double> deg(n, 0.0);
  for (const auto& p : train) {
    if (p.user < 0 || static_cast<std::size_t>(p.user) >= num_users || p.item < 0 ||
        static_cast<std::size_t>(p.item) >= num_items) {
      throw BoundsError("train interaction index out of range");
    }
    deg[static_cast<std::size_t>(p.user)] += 1.0;
    deg[num_users + static_cast<std::size_t>(p.item)] += 1.0;
  }
  std::vector<Eigen::Triplet<T>> triplets;
  triplets.reserve(train.size() * 2);
  for (const auto& p : train) {
    const auto u = static_cast<std::size_t>(p.user);
    const auto v = num_users + static_cast<std::size_t>(p.item);
    const T w = static_cast<T>(1.0 / (std::sqrt(deg[u]) * std::sqrt(deg[v])));
    triplets.emplace_back(static_cast<int>(u), static_cast<int>(v), w);
    triplets.emplace_back(static_cast<int>(v), static_cast<int>(u), w);
  }
  SpMat<T> adj(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  // Duplicate edges would be summed; callers pass de-duplicated pairs.
  adj.setFromTriplets(triplets.begin(), triplets.end());
  adj.makeCompressed();
  return adj;
}

template <typename T>
std::vector<Mat<T>> propagate(const SpMat<T>& adj, const Mat<T>& h0, int layers) {
  if (layers < 0) throw BoundsError("layer count must be >= 0");
  if (h0.rows() != adj.rows()) {
    throw ShapeError("propagate: embedding rows " + std::to_string(h0.rows()) +
                     " != graph nodes " + std::to_string(adj.rows()));
  }
  std::vector<Mat<T>> out;
  out.reserve(static_cast<std::size_t>(layers) + 1);
  out.push_back(h0);
  for (int l = 1; l <= layers; ++l) out.push_back(adj * out.back());
  return out;
}

CsrGraph build_knn_graph(const FeatureMatrix& features, int k, int threads) {
  const auto n = static_cast<Eigen::Index>(features.rows());
  if (k < 1) throw BoundsError("kNN k must be >= 1");
  if (n < k + 1) {
    throw BoundsError("kNN graph needs at least k + 1 = " + std::to_string(k + 1) +
                      " items, got " + std::to_string(n));
  }
  Mat<double> unit = features.values.cast<double>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = unit.row(i).norm();
    if (norm > 0.0) {
      unit.row(i) /= norm;
    } else {
      unit.row(i).setZero();
    }
  }

  std::vector<std::vector<std::pair<std::int32_t, double>>> rows(static_cast<std::size_t>(n));
  const Eigen::Index blocks = (n + kKnnBlockRows - 1) / kKnnBlockRows;
  parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b0, std::size_t b1) {
    std::vector<std::int32_t> order(static_cast<std::size_t>(n));
    for (std::size_t b = b0; b < b1; ++b) {
      const Eigen::Index start = static_cast<Eigen::Index>(b) * kKnnBlockRows;
      const Eigen::Index len = std::min(kKnnBlockRows, n - start);
      const Mat<double> sims = unit.middleRows(start, len) * unit.transpose();
      for (Eigen::Index r = 0; r < len; ++r) {
        const Eigen::Index i = start + r;
        order.clear();
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j != i) order.push_back(static_cast<std::int32_t>(j));
        }
        const auto better = [&](std::int32_t a, std::int32_t c) {
          const double sa = sims(r, a), sc = sims(r, c);
          return sa != sc ? sa > sc : a < c;
        };
        std::partial_sort(order.begin(), order.begin() + k, order.end(), better);
        auto& row = rows[static_cast<std::size_t>(i)];
        for (int t = 0; t < k; ++t) {
          const double s = sims(r, order[static_cast<std::size_t>(t)]);
          if (s != 0.0) row.emplace_back(order[static_cast<std::size_t>(t)], s);
        }
        std::sort(row.begin(), row.end());
      }
    }
  });

  CsrGraph g;
  g.rows = static_cast<std::size_t>(n);
  for (const auto& row : rows) {
    for (const auto& [c, v] : row) {
      g.col.push_back(c);
      g.value.push_back(v);
    }
    g.row_ptr.push_back(g.col.size());
  }
  return g;
}

ItemGraph::ItemGraph(std::vector<CsrGraph> modality_graphs, ItemGraphNorm norm) : norm_(norm) {
  if (modality_graphs.empty()) throw ShapeError("ItemGraph needs at least one modality graph");
  const std::size_t n = modality_graphs.front().rows;
  for (const auto& g : modality_graphs) {
    if (g.rows != n) throw ShapeError("item graphs disagree on item count");
  }
  pattern_.rows = n;
  values_.assign(modality_graphs.size(), {});
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<std::int32_t> cols;
    for (const auto& g : modality_graphs) {
      for (std::size_t e = g.row_ptr[r]; e < g.row_ptr[r + 1]; ++e) cols.push_back(g.col[e]);
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    for (const auto c : cols) pattern_.col.push_back(c);
    pattern_.row_ptr.push_back(pattern_.col.size());
    for (std::size_t m = 0; m < modality_graphs.size(); ++m) {
      const auto& g = modality_graphs[m];
      std::size_t e = g.row_ptr[r];
      for (const auto c : cols) {
        while (e < g.row_ptr[r + 1] && g.col[e] < c) ++e;
        values_[m].push_back(e < g.row_ptr[r + 1] && g.col[e] == c ? g.value[e] : 0.0);
      }
    }
  }
  pattern_.value.assign(pattern_.col.size(), 0.0);
}

CsrGraph ItemGraph::modality_graph(std::size_t m) const {
  CsrGraph g;
  g.rows = pattern_.rows;
  for (std::size_t r = 0; r < pattern_.rows; ++r) {
    for (std::size_t e = pattern_.row_ptr[r]; e < pattern_.row_ptr[r + 1]; ++e) {
      if (values_[m][e] != 0.0) {
        g.col.push_back(pattern_.col[e]);
        g.value.push_back(values_[m][e]);
      }
    }
    g.row_ptr.push_back(g.col.size());
  }
  return g;
}

template <typename T>
Vec<T> softmax(const Vec<T>& logits) {
  const T mx = logits.maxCoeff();
  Vec<T> e = (logits.array() - mx).exp();
  return e / e.sum();
}

template <typename T>
FusedItemGraph<T> ItemGraph::fuse(const Vec<T>& alpha_logits) const {
  if (static_cast<std::size_t>(alpha_logits.size()) != values_.size()) {
    throw ShapeError("fusion logits do not match the number of item graphs");
  }
  FusedItemGraph<T> f;
  const Vec<T> w = softmax<T>(alpha_logits);
  f.weights.assign(w.data(), w.data() + w.size());
  const std::size_t nnz = pattern_.nnz();
  f.raw.assign(nnz, T(0));
  for (std::size_t e = 0; e < nnz; ++e) {
    T s(0);
    for (std::size_t m = 0; m < values_.size(); ++m) s += f.weights[m] * static_cast<T>(values_[m][e]);
    f.raw[e] = s;
  }
  const std::size_t n = pattern_.rows;
  f.inv_sqrt.assign(n, T(1));
  if (norm_ == ItemGraphNorm::kSymmetric) {
    for (std::size_t r = 0; r < n; ++r) {
      T deg(0);
      for (std::size_t e = pattern_.row_ptr[r]; e < pattern_.row_ptr[r + 1]; ++e) deg += std::abs(f.raw[e]);
      f.inv_sqrt[r] = deg > T(0) ? T(1) / std::sqrt(deg) : T(0);
    }
  }
  f.op.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<Eigen::Triplet<T>> trip;
  trip.reserve(nnz);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t e = pattern_.row_ptr[r]; e < pattern_.row_ptr[r + 1]; ++e) {
      const auto c = static_cast<std::size_t>(pattern_.col[e]);
      const T v = norm_ == ItemGraphNorm::kSymmetric ? f.raw[e] * f.inv_sqrt[r] * f.inv_sqrt[c]
                                                     : f.raw[e];
      trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    }
  }
  f.op.setFromTriplets(trip.begin(), trip.end());
  f.op.makeCompressed();
  return f;
}

template <typename T>
Vec<T> ItemGraph::logits_grad(const FusedItemGraph<T>& fused, const std::vector<T>& d_op) const {
  const std::size_t n = pattern_.rows;
  const std::size_t nnz = pattern_.nnz();
  if (d_op.size() != nnz) throw ShapeError("logits_grad: cotangent size mismatch");
  std::vector<T> d_raw(nnz, T(0));
  if (norm_ == ItemGraphNorm::kNone) {
    d_raw = d_op;
  } else {
    std::vector<T> d_inv(n, T(0));
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t e = pattern_.row_ptr[r]; e < pattern_.row_ptr[r + 1]; ++e) {
        const auto c = static_cast<std::size_t>(pattern_.col[e]);
        d_raw[e] += d_op[e] * fused.inv_sqrt[r] * fused.inv_sqrt[c];
        d_inv[r] += d_op[e] * fused.raw[e] * fused.inv_sqrt[c];
        d_inv[c] += d_op[e] * fused.raw[e] * fused.inv_sqrt[r];
      }
    }
    for (std::size_t r = 0; r < n; ++r) {
      const T s = fused.inv_sqrt[r];
      if (s == T(0)) continue;
      // d(deg^{-1/2}) / d deg = -deg^{-3/2} / 2 = -s^3 / 2
      const T d_deg = d_inv[r] * T(-0.5) * s * s * s;
      for (std::size_t e = pattern_.row_ptr[r]; e < pattern_.row_ptr[r + 1]; ++e) {
        const T v = fused.raw[e];
        d_raw[e] += d_deg * static_cast<T>((v > T(0)) - (v < T(0)));
      }
    }
  }
  const std::size_t mods = values_.size();
  Vec<T> d_w = Vec<T>::Zero(static_cast<Eigen::Index>(mods));
  for (std::size_t m = 0; m < mods; ++m) {
    T acc(0);
    for (std::size_t e = 0; e < nnz; ++e) acc += d_raw[e] * static_cast<T>(values_[m][e]);
    d_w(static_cast<Eigen::Index>(m)) = acc;
  }
  Vec<T> w = Eigen::Map<const Vec<T>>(fused.weights.data(), static_cast<Eigen::Index>(mods));
  const T dot = w.dot(d_w);
  return (w.array() * (d_w.array() - dot)).matrix();
}

void write_sparse(const CsrGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  binio::write_magic(out, "HPMS");
  binio::write_u32(out, kSparseVersion);
  binio::write_u64(out, graph.rows);
  binio::write_u64(out, graph.nnz());
  for (std::size_t r = 0; r < graph.rows; ++r) {
    for (std::size_t e = graph.row_ptr[r]; e < graph.row_ptr[r + 1]; ++e) {
      binio::write_u64(out, r);
      binio::write_u64(out, static_cast<std::uint64_t>(graph.col[e]));
      binio::write_f32(out, static_cast<float>(graph.value[e]));
    }
  }
  if (!out) throw InputError("failed writing " + path.string());
}

CsrGraph read_sparse(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::in | std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  binio::Reader r(in, path.string());
  r.expect_magic("HPMS");
  if (const auto v = r.u32(); v != kSparseVersion) {
    throw InputError(path.string() + ": unsupported sparse version " + std::to_string(v));
  }
  CsrGraph g;
  g.rows = r.u64();
  const auto nnz = r.u64();
  g.row_ptr.assign(g.rows + 1, 0);
  std::uint64_t prev_row = 0, prev_col = 0;
  for (std::uint64_t e = 0; e < nnz; ++e) {
    const auto row = r.u64();
    const auto col = r.u64();
    const float v = r.f32();
    if (row >= g.rows || col >= g.rows) throw InputError(path.string() + ": entry out of range");
    if (e > 0 && (row < prev_row || (row == prev_row && col <= prev_col))) {
      throw InputError(path.string() + ": entries not sorted row-major");
    }
    prev_row = row;
    prev_col = col;
    ++g.row_ptr[row + 1];
    g.col.push_back(static_cast<std::int32_t>(col));
    g.value.push_back(v);
  }
  std::partial_sum(g.row_ptr.begin(), g.row_ptr.end(), g.row_ptr.begin());
  return g;
}

#define HPMREC_INSTANTIATE_GRAPHS(T)                                                          \
  template SpMat<T> build_norm_adj<T>(const std::vector<Interaction>&, std::size_t,           \
                                      std::size_t);                                           \
  template std::vector<Mat<T>> propagate<T>(const SpMat<T>&, const Mat<T>&, int);             \
  template Vec<T> softmax<T>(const Vec<T>&);                                                  \
  template FusedItemGraph<T> ItemGraph::fuse<T>(const Vec<T>&) const;                         \
  template Vec<T> ItemGraph::logits_grad<T>(const FusedItemGraph<T>&, const std::vector<T>&) \
      const;

HPMREC_INSTANTIATE_GRAPHS(float)
HPMREC_INSTANTIATE_GRAPHS(double)

}  // namespace hpmrec
