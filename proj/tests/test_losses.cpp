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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hpmrec/errors.hpp"
#include "hpmrec/losses.hpp"
#include "testutil.hpp"

namespace hpmrec {
namespace {

TEST(NegLogSigmoid, ValuesAndStability) {
  EXPECT_NEAR(neg_log_sigmoid(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(neg_log_sigmoid(2.0), std::log1p(std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(neg_log_sigmoid(-800.0), 800.0, 1e-12);
  EXPECT_EQ(neg_log_sigmoid(800.0), 0.0);
  EXPECT_TRUE(std::isfinite(neg_log_sigmoid(-1e6f)));
}

TEST(BprLoss, HandComputed) {
  const std::vector<double> pos = {1.0, 0.0}, neg = {0.0, 0.0};
  const double expected = 0.5 * (std::log1p(std::exp(-1.0)) + std::log(2.0)) + 0.1 * 3.0;
  EXPECT_NEAR(bpr_loss<double>(pos, neg, 3.0, 0.1), expected, 1e-15);
  // Equal scores give log 2 regardless of batch.
  const std::vector<double> same = {0.7, 0.7, 0.7};
  EXPECT_NEAR(bpr_loss<double>(same, same, 0.0, 0.0), std::log(2.0), 1e-15);
  const std::vector<double> one = {1.0};
  EXPECT_THROW(bpr_loss<double>(one, same, 0.0, 0.0), ShapeError);
}

TEST(AlignLoss, HandComputedAndSign) {
  Mat<double> id(2, 2), v(2, 2), t(2, 2);
  id << 1, 2, 0, 0;
  v << 0, 2, 0, 0;
  t << 1, 0, 0, 1;
  const std::vector<std::int32_t> nodes = {0, 1};
  // node 0: |id-v| = 1, |id-t| = 2, |v-t| = 3; node 1: 0, 1, 1.
  EXPECT_NEAR(align_loss<double>(id, v, t, nodes), 8.0 / 2.0, 1e-15);
  EXPECT_NEAR(align_loss<double>(id, v, t, nodes, SignAlign::kLiteral), -4.0, 1e-15);
  EXPECT_EQ(align_loss<double>(id, id, id, nodes), 0.0);
  const std::vector<std::int32_t> first = {0};
  EXPECT_NEAR(align_loss<double>(id, v, t, first), 6.0, 1e-15);
}

TEST(ExpandLoss, HandComputed) {
  // Two components of width 1: |real - imag|.
  Mat<double> a(1, 2), b(1, 2), c(1, 2);
  a << 3, 1;
  b << 0, 0;
  c << -1, 1;
  const std::vector<Mat<double>> reps = {a, b, c};
  const std::vector<std::int32_t> nodes = {0};
  EXPECT_NEAR(expand_loss<double>(reps, 2, nodes), -(2.0 + 0.0 + 2.0), 1e-15);
  // Four components: imaginary mean of (2, 4, 6) is 4.
  Mat<double> q(1, 4);
  q << 1, 2, 4, 6;
  const std::vector<Mat<double>> one = {q};
  EXPECT_NEAR(expand_loss<double>(one, 4, nodes), -3.0, 1e-15);
  EXPECT_THROW(expand_loss<double>(one, 1, nodes), ConfigError);
  EXPECT_THROW(expand_loss<double>(one, 3, nodes), ShapeError);
}

TEST(PromptAlignLoss, HandComputed) {
  Mat<double> p(2, 1), h(2, 1), z = Mat<double>::Zero(2, 1);
  p << 1, -1;
  h << 0, 1;
  const std::vector<std::int32_t> nodes = {0, 1};
  EXPECT_NEAR(prompt_align_loss<double>({&p, &z, &z}, {&h, &z, &z}, nodes), 3.0 / 2.0, 1e-15);
}

TEST(TotalLoss, CompositionAndFlags) {
  HyperParams hp;
  hp.reg_weight = 0.5;
  hp.ssl_weight = 0.1;
  auto b = total_loss(1.0, 2.0, 3.0, -1.0, 4.0, hp);
  EXPECT_DOUBLE_EQ(b.reg, 1.0);
  EXPECT_DOUBLE_EQ(b.rec, 2.0);
  EXPECT_DOUBLE_EQ(b.ssl, 2.0);
  EXPECT_DOUBLE_EQ(b.prompt_align, 0.0);
  EXPECT_DOUBLE_EQ(b.total, 2.0 + 0.1 * 2.0);
  hp.no_ssl = true;
  b = total_loss(1.0, 2.0, 3.0, -1.0, 4.0, hp);
  EXPECT_EQ(b.align, 0.0);
  EXPECT_EQ(b.expand, 0.0);
  EXPECT_DOUBLE_EQ(b.total, 2.0);
  hp.explicit_prompt = true;
  b = total_loss(1.0, 2.0, 3.0, -1.0, 4.0, hp);
  EXPECT_DOUBLE_EQ(b.total, 2.0 + 0.1 * 4.0);
}

TEST(SslNodes, AllOrBatch) {
  const std::vector<TrainingTriple> batch = {{2, 0, 1}, {0, 1, 3}};
  EXPECT_EQ(ssl_nodes(batch, 3, 4, false).size(), 7u);
  EXPECT_EQ(ssl_nodes(batch, 3, 4, true), (std::vector<std::int32_t>{0, 2, 3, 4, 6}));
}

TEST(ComputeLoss, MatchesIndependentPieces) {
  auto hp = testutil::small_hp();
  hp.reg_weight = 0.01;
  hp.ssl_weight = 0.2;
  const auto s = testutil::make_setup(hp);
  const auto p = init_params<double>(hp, s.ctx, 1);
  const auto tr = forward<double>(p, s.ctx, hp);
  const std::vector<TrainingTriple> batch = {{0, 0, 7}, {5, 8, 1}};
  const auto nodes = ssl_nodes(batch, s.split.num_users, s.split.num_items, false);
  const auto b = compute_loss<double>(tr, p, batch, hp, nodes);
  double bpr = 0.0;
  for (const auto& t : batch) {
    const double x = tr.out.fused.row(t.user).dot(tr.out.item_final.row(t.pos) - tr.out.item_final.row(t.neg));
    bpr += std::log1p(std::exp(-x));
  }
  EXPECT_NEAR(b.bpr, bpr / 2.0, 1e-12);
  const std::vector<Mat<double>> reps(tr.mi.hat.begin(), tr.mi.hat.end());
  EXPECT_NEAR(b.align, align_loss<double>(reps[0], reps[1], reps[2], nodes), 1e-12);
  EXPECT_NEAR(b.expand, expand_loss<double>(reps, hp.num_components(), nodes), 1e-12);
  EXPECT_NEAR(b.total, b.bpr + b.reg + 0.2 * (b.align + b.expand), 1e-12);
  EXPECT_LT(b.expand, 0.0);
  EXPECT_GT(b.align, 0.0);
}

TEST(LossBreakdown, AccumulateAndJson) {
  LossBreakdown a;
  a.bpr = 1.0;
  a.total = 2.0;
  LossBreakdown b = a;
  b += a;
  b /= 4.0;
  EXPECT_DOUBLE_EQ(b.bpr, 0.5);
  const auto j = to_json(b);
  EXPECT_DOUBLE_EQ(j["total"].get<double>(), 1.0);
  EXPECT_TRUE(j.contains("prompt_align"));
}

}  // namespace
}  // namespace hpmrec
