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

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hpmrec/errors.hpp"
#include "hpmrec/graphs.hpp"
#include "oracles.hpp"

namespace hpmrec {
namespace {

struct RandomBipartite {
  int users;
  int items;
  std::vector<Interaction> train;
  std::vector<std::pair<int, int>> edges;
};

RandomBipartite random_bipartite(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 9);
  RandomBipartite g{size(rng), size(rng), {}, {}};
  std::bernoulli_distribution keep(0.4);
  for (int u = 0; u < g.users; ++u) {
    for (int i = 0; i < g.items; ++i) {
      if (keep(rng)) {
        g.train.push_back({u, i});
        g.edges.emplace_back(u, i);
      }
    }
  }
  return g;
}

FeatureMatrix random_features(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<float> normal;
  FeatureMatrix f;
  f.values.resize(rows, cols);
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = normal(rng);
  return f;
}

oracle::Dense to_dense(const FeatureMatrix& f) {
  oracle::Dense d(f.rows(), std::vector<double>(f.cols()));
  for (std::size_t r = 0; r < f.rows(); ++r) {
    for (std::size_t c = 0; c < f.cols(); ++c) d[r][c] = f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return d;
}

CsrGraph csr(std::size_t rows, const std::vector<std::vector<std::pair<int, double>>>& entries) {
  CsrGraph g;
  g.rows = rows;
  for (const auto& row : entries) {
    for (const auto& [c, v] : row) {
      g.col.push_back(c);
      g.value.push_back(v);
    }
    g.row_ptr.push_back(g.col.size());
  }
  return g;
}

TEST(NormAdj, MatchesDenseOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_bipartite(rng);
    const Mat<double> a = build_norm_adj<double>(g.train, g.users, g.items);
    const auto ref = oracle::norm_adj(g.edges, g.users, g.items);
    for (int r = 0; r < g.users + g.items; ++r) {
      for (int c = 0; c < g.users + g.items; ++c) ASSERT_NEAR(a(r, c), ref[r][c], 1e-12);
    }
    EXPECT_EQ(a, a.transpose());
  }
}

TEST(NormAdj, IsolatedNodesAndBounds) {
  const std::vector<Interaction> train = {{0, 0}};
  const Mat<double> a = build_norm_adj<double>(train, 2, 2);
  EXPECT_DOUBLE_EQ(a(0, 2), 1.0);
  EXPECT_EQ(a.row(1).cwiseAbs().sum(), 0.0);
  const std::vector<Interaction> bad = {{0, 5}};
  EXPECT_THROW(build_norm_adj<double>(bad, 2, 2), BoundsError);
}

TEST(Propagate, MatchesDensePowers) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_bipartite(rng);
    const int n = g.users + g.items;
    Mat<double> h0(n, 3);
    for (Eigen::Index i = 0; i < h0.size(); ++i) h0.data()[i] = normal(rng);
    const auto layers = propagate<double>(build_norm_adj<double>(g.train, g.users, g.items), h0, 3);
    ASSERT_EQ(layers.size(), 4u);
    const auto a = oracle::norm_adj(g.edges, g.users, g.items);
    oracle::Dense cur(n, std::vector<double>(3));
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < 3; ++c) cur[r][c] = h0(r, c);
    }
    for (int l = 0; l <= 3; ++l) {
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < 3; ++c) ASSERT_NEAR(layers[static_cast<std::size_t>(l)](r, c), cur[r][c], 1e-10);
      }
      cur = oracle::matmul(a, cur);
    }
  }
}

TEST(Propagate, ZeroLayersAndErrors) {
  const std::vector<Interaction> train = {{0, 0}};
  const auto adj = build_norm_adj<double>(train, 1, 1);
  const Mat<double> h0 = Mat<double>::Ones(2, 2);
  EXPECT_EQ(propagate<double>(adj, h0, 0).size(), 1u);
  EXPECT_THROW(propagate<double>(adj, h0, -1), BoundsError);
  EXPECT_THROW(propagate<double>(adj, Mat<double>(Mat<double>::Ones(3, 2)), 1), ShapeError);
}

TEST(KnnGraph, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> rows(3, 40), cols(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rows(rng);
    const auto f = random_features(n, cols(rng), rng);
    const int k = std::uniform_int_distribution<int>(1, n - 1)(rng);
    const auto g = build_knn_graph(f, k, 1 + trial % 3);
    const auto ref = oracle::knn(to_dense(f), k);
    ASSERT_EQ(g.rows, static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
      ASSERT_EQ(g.row_nnz(static_cast<std::size_t>(r)), ref[r].size());
      for (std::size_t t = 0; t < ref[r].size(); ++t) {
        const auto e = g.row_ptr[static_cast<std::size_t>(r)] + t;
        EXPECT_EQ(g.col[e], ref[r][t].first);
        EXPECT_NEAR(g.value[e], ref[r][t].second, 1e-10);
      }
    }
  }
}

TEST(KnnGraph, KOneToyCase) {
  FeatureMatrix f;
  f.values.resize(3, 2);
  f.values << 1, 0, 0.9f, 0.1f, 0, 1;
  const auto g = build_knn_graph(f, 1);
  EXPECT_EQ(g.col, (std::vector<std::int32_t>{1, 0, 1}));
}

TEST(KnnGraph, TiesGoToSmallerIndexAndZeroRowsAreEmpty) {
  FeatureMatrix f;
  f.values.resize(4, 2);
  f.values << 1, 0, 1, 0, 1, 0, 0, 0;
  const auto g = build_knn_graph(f, 1);
  EXPECT_EQ(g.col[0], 1);
  EXPECT_EQ(g.col[1], 0);
  EXPECT_EQ(g.col[2], 0);
  EXPECT_EQ(g.row_nnz(3), 0u);
}

TEST(KnnGraph, Errors) {
  FeatureMatrix f;
  f.values = decltype(f.values)::Ones(3, 2);
  EXPECT_THROW(build_knn_graph(f, 0), BoundsError);
  EXPECT_THROW(build_knn_graph(f, 3), BoundsError);
}

TEST(KnnGraph, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(4);
  const auto f = random_features(600, 5, rng);
  const auto a = build_knn_graph(f, 10, 1);
  const auto b = build_knn_graph(f, 10, 4);
  EXPECT_EQ(a.col, b.col);
  EXPECT_EQ(a.value, b.value);
}

TEST(SparseIo, RoundTripAndValidation) {
  const auto dir = std::filesystem::temp_directory_path() / "hpmrec_test_graphs";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(5);
  const auto g = build_knn_graph(random_features(12, 3, rng), 4);
  write_sparse(g, dir / "g.hpms");
  const auto h = read_sparse(dir / "g.hpms");
  EXPECT_EQ(h.rows, g.rows);
  EXPECT_EQ(h.row_ptr, g.row_ptr);
  EXPECT_EQ(h.col, g.col);
  ASSERT_EQ(h.value.size(), g.value.size());
  for (std::size_t e = 0; e < g.value.size(); ++e) {
    EXPECT_EQ(h.value[e], static_cast<double>(static_cast<float>(g.value[e])));
  }
  {
    std::ofstream out(dir / "bad.hpms", std::ios::binary);
    out << "HPMX";
  }
  EXPECT_THROW(read_sparse(dir / "bad.hpms"), InputError);
  EXPECT_THROW(read_sparse(dir / "none.hpms"), InputError);
}

TEST(Softmax, EqualLogitsGiveEqualWeights) {
  Vec<double> z = Vec<double>::Zero(3);
  const auto w = softmax<double>(z);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(w(i), 1.0 / 3.0);
  Vec<double> big(2);
  big << 1000.0, 0.0;
  EXPECT_NEAR(softmax<double>(big)(0), 1.0, 1e-15);
}

// Dense reference of the fused item operator.
oracle::Dense fused_dense(const std::vector<CsrGraph>& graphs, const std::vector<double>& w, bool sym) {
  const std::size_t n = graphs.front().rows;
  oracle::Dense s(n, std::vector<double>(n, 0.0));
  for (std::size_t m = 0; m < graphs.size(); ++m) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t e = graphs[m].row_ptr[r]; e < graphs[m].row_ptr[r + 1]; ++e) {
        s[r][static_cast<std::size_t>(graphs[m].col[e])] += w[m] * graphs[m].value[e];
      }
    }
  }
  if (!sym) return s;
  std::vector<double> d(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (const double v : s[r]) d[r] += std::abs(v);
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (s[r][c] != 0.0) s[r][c] /= std::sqrt(d[r]) * std::sqrt(d[c]);
    }
  }
  return s;
}

TEST(ItemGraph, FuseMatchesDenseOracle) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 15)(rng);
    std::vector<CsrGraph> graphs = {build_knn_graph(random_features(n, 4, rng), 2),
                                    build_knn_graph(random_features(n, 3, rng), 2)};
    for (const bool sym : {true, false}) {
      const ItemGraph ig(graphs, sym ? ItemGraphNorm::kSymmetric : ItemGraphNorm::kNone);
      Vec<double> logits(2);
      logits << std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng);
      const auto fused = ig.fuse<double>(logits);
      const double e0 = std::exp(logits(0)), e1 = std::exp(logits(1));
      const auto ref = fused_dense(graphs, {e0 / (e0 + e1), e1 / (e0 + e1)}, sym);
      const Mat<double> op(fused.op);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) ASSERT_NEAR(op(r, c), ref[r][c], 1e-12);
      }
    }
  }
}

TEST(ItemGraph, LogitsGradMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const int n = 9;
  std::vector<CsrGraph> graphs = {build_knn_graph(random_features(n, 4, rng), 3),
                                  build_knn_graph(random_features(n, 4, rng), 3)};
  for (const auto norm : {ItemGraphNorm::kSymmetric, ItemGraphNorm::kNone}) {
    const ItemGraph ig(graphs, norm);
    std::vector<double> cot(ig.nnz());
    for (auto& c : cot) c = normal(rng);
    auto objective = [&](const Vec<double>& z) {
      const auto f = ig.fuse<double>(z);
      double s = 0.0;
      const auto& p = ig.pattern();
      for (std::size_t r = 0; r < p.rows; ++r) {
        for (std::size_t e = p.row_ptr[r]; e < p.row_ptr[r + 1]; ++e) {
          s += cot[e] * f.op.coeff(static_cast<Eigen::Index>(r), p.col[e]);
        }
      }
      return s;
    };
    Vec<double> z(2);
    z << 0.3, -0.4;
    const auto grad = ig.logits_grad<double>(ig.fuse<double>(z), cot);
    for (int i = 0; i < 2; ++i) {
      Vec<double> zp = z, zm = z;
      zp(i) += 1e-6;
      zm(i) -= 1e-6;
      EXPECT_NEAR(grad(i), (objective(zp) - objective(zm)) / 2e-6, 1e-7);
    }
  }
}

TEST(ItemGraph, UnionPatternKeepsModalityValues) {
  const auto a = csr(3, {{{1, 0.5}}, {{2, 0.25}}, {}});
  const auto b = csr(3, {{{2, 0.75}}, {{2, 0.1}}, {{0, 1.0}}});
  const ItemGraph ig({a, b}, ItemGraphNorm::kNone);
  EXPECT_EQ(ig.nnz(), 4u);
  const auto back = ig.modality_graph(0);
  EXPECT_EQ(back.col, a.col);
  EXPECT_EQ(back.value, a.value);
  EXPECT_THROW(ItemGraph({a, csr(2, {{}, {}})}, ItemGraphNorm::kNone), ShapeError);
}

}  // namespace
}  // namespace hpmrec
