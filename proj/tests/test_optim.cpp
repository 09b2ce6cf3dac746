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
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "hpmrec/errors.hpp"
#include "hpmrec/optim.hpp"
#include "testutil.hpp"

namespace hpmrec {
namespace {

HyperParams gradcheck_hp() {
  HyperParams hp;
  hp.n_exp = 1;
  hp.dim = 2;
  hp.layers = 1;
  hp.knn_k = 2;
  hp.reg_weight = 1e-2;
  hp.ssl_weight = 1e-1;
  hp.explicit_prompt = true;
  return hp;
}

void expect_passes(const HyperParams& hp) {
  const auto problem = make_gradcheck_problem(7, hp);
  const auto report = grad_check(problem, 1e-4, 1e-5, 7);
  for (const auto& e : report.entries) {
    EXPECT_LT(e.rel_error, 1e-4) << e.name;
    EXPECT_GT(e.checked, 0u) << e.name;
  }
  EXPECT_TRUE(report.passed);
}

TEST(GradCheck, AllLossesEnabled) { expect_passes(gradcheck_hp()); }

TEST(GradCheck, EncoderModes) {
  auto hp = gradcheck_hp();
  hp.dim = 4;
  hp.encoder_mode = EncoderMode::kSplit;
  expect_passes(hp);
  hp.encoder_mode = EncoderMode::kMlp;
  expect_passes(hp);
}

TEST(GradCheck, Variants) {
  struct Variant {
    const char* name;
    void (*apply)(HyperParams&);
  };
  const Variant variants[] = {
      {"no_prompt", [](HyperParams& h) { h.no_prompt = true; h.explicit_prompt = false; }},
      {"no_mi", [](HyperParams& h) { h.no_mi = true; }},
      {"no_ssl", [](HyperParams& h) { h.no_ssl = true; }},
      {"literal", [](HyperParams& h) { h.sign_align = SignAlign::kLiteral; }},
      {"mean", [](HyperParams& h) { h.layer_agg = LayerAgg::kMean; }},
      {"bar", [](HyperParams& h) { h.ssl_on = SslOn::kBar; }},
      {"none", [](HyperParams& h) { h.item_graph_norm = ItemGraphNorm::kNone; }},
      {"batch_only", [](HyperParams& h) { h.ssl_batch_only = true; }},
      {"octonion", [](HyperParams& h) { h.n_exp = 2; }},
      {"complex_l3", [](HyperParams& h) { h.n_exp = 0; h.layers = 3; }},
  };
  for (const auto& v : variants) {
    SCOPED_TRACE(v.name);
    auto hp = gradcheck_hp();
    v.apply(hp);
    const auto report = grad_check(make_gradcheck_problem(3, hp), 1e-4, 1e-5, 3);
    for (const auto& e : report.entries) {
      if (e.checked > 0) EXPECT_LT(e.rel_error, 1e-4) << e.name;
    }
  }
}

TEST(GradCheck, FrozenAlphaHasZeroGradient) {
  auto hp = gradcheck_hp();
  hp.freeze_alpha = true;
  const auto p = make_gradcheck_problem(7, hp);
  const auto tr = forward<double>(p.params, p.ctx, hp);
  const auto nodes = ssl_nodes(p.batch, 3, 4, false);
  const auto g = backward<double>(tr, p.params, p.ctx, p.batch, hp, nodes);
  EXPECT_TRUE((g.alpha.array() == 0.0).all());
}

TEST(GradCheck, DetectsCorruptedGradient) {
  const auto problem = make_gradcheck_problem(7, gradcheck_hp());
  const auto report = grad_check(problem, 1e-4, 1e-5, 7, [](GradientSet<double>& g) {
    g.modality[1].proj(0, 0) += 1e-2;
  });
  EXPECT_FALSE(report.passed);
  for (const auto& e : report.entries) EXPECT_EQ(e.passed, e.name != "visual.proj") << e.name;
}

TEST(GradCheck, SeedFixedGivesIdenticalReport) {
  const auto a = grad_check(make_gradcheck_problem(5, gradcheck_hp()), 1e-4, 1e-5, 5).to_json();
  const auto b = grad_check(make_gradcheck_problem(5, gradcheck_hp()), 1e-4, 1e-5, 5).to_json();
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(ManhattanArguments, CoverEveryAbsoluteValueTerm) {
  const auto hp = gradcheck_hp();
  const auto p = make_gradcheck_problem(7, hp);
  const auto tr = forward<double>(p.params, p.ctx, hp);
  const auto nodes = ssl_nodes(p.batch, 3, 4, false);
  const auto args = manhattan_arguments<double>(tr, p.params, hp, nodes);
  const std::size_t width = 8, cw = 2;
  const std::size_t expected = nodes.size() * (3 * width + 3 * cw) + 3 * nodes.size() * width + p.ctx.item_graph.nnz();
  EXPECT_EQ(args.size(), expected);
}

// One Adam step from zero state: m = (1 - b1) g, v = (1 - b2) g^2, and after
// bias correction the update is lr * g / (|g| + eps).
TEST(Adam, FirstStepMatchesClosedForm) {
  ModelParams<double> p;
  p.eps = Mat<double>::Constant(1, 2, 1.0);
  auto g = p.zeros_like();
  g.eps << 0.5, -2.0;
  auto state = AdamState<double>::like(p);
  adam_step(p, g, state, 0.1);
  EXPECT_NEAR(p.eps(0, 0), 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p.eps(0, 1), 1.0 + 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_EQ(state.step, 1);
  EXPECT_NEAR(state.m.eps(0, 0), 0.05, 1e-15);
  EXPECT_NEAR(state.v.eps(0, 1), 0.004, 1e-15);
}

TEST(Adam, SecondStepMatchesReference) {
  ModelParams<double> p;
  p.beta = Mat<double>::Zero(1, 1);
  auto state = AdamState<double>::like(p);
  auto g = p.zeros_like();
  double m = 0, v = 0, x = 0;
  for (int t = 1; t <= 2; ++t) {
    const double grad = t == 1 ? 1.0 : -3.0;
    g.beta(0, 0) = grad;
    adam_step(p, g, state, 0.01);
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    x -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
  }
  EXPECT_NEAR(p.beta(0, 0), x, 1e-15);
}

TEST(Adam, NonFiniteGradientNamesParameterAndLeavesStateUntouched) {
  ModelParams<double> p;
  p.eps = Mat<double>::Ones(1, 2);
  p.beta = Mat<double>::Ones(1, 3);
  auto g = p.zeros_like();
  g.eps(0, 0) = 1.0;
  g.beta(0, 1) = std::nan("");
  auto state = AdamState<double>::like(p);
  try {
    adam_step(p, g, state, 0.1);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("fusion.beta"), std::string::npos);
  }
  EXPECT_EQ(p.eps(0, 0), 1.0);
  EXPECT_EQ(state.step, 0);
}

TEST(Adam, ClipNormRescalesGlobalGradient) {
  ModelParams<double> a, b;
  a.eps = Mat<double>::Zero(1, 2);
  b = a;
  auto g = a.zeros_like();
  g.eps << 3.0, 4.0;
  auto sa = AdamState<double>::like(a), sb = AdamState<double>::like(b);
  adam_step(a, g, sa, 0.1, 1.0);
  EXPECT_NEAR(sa.m.eps(0, 0), 0.1 * 0.6, 1e-15);
  EXPECT_NEAR(sa.m.eps(0, 1), 0.1 * 0.8, 1e-15);
  adam_step(b, g, sb, 0.1, 0.0);
  EXPECT_NEAR(sb.m.eps(0, 1), 0.4, 1e-15);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "hpmrec_test_ckpt";
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
    hp_ = testutil::small_hp();
    setup_ = testutil::make_setup(hp_);
    params_ = init_params<double>(hp_, setup_.ctx, 4);
  }
  std::filesystem::path dir_;
  HyperParams hp_;
  testutil::Setup setup_;
  ModelParams<double> params_;
};

TEST_F(CheckpointTest, RoundTripWithAdamState) {
  auto adam = AdamState<double>::like(params_);
  auto g = params_.zeros_like();
  g.for_each([](const std::string&, Mat<double>& t) { t.setConstant(0.25); });
  adam_step(params_, g, adam, 1e-3);
  write_checkpoint(make_checkpoint<double>(params_, &adam), dir_ / "a.ckpt");
  auto restored = init_params<double>(hp_, setup_.ctx, 99);
  AdamState<double> restored_adam;
  restore_checkpoint<double>(read_checkpoint(dir_ / "a.ckpt"), restored, &restored_adam);
  const auto rounded = round_to_float(params_);
  EXPECT_EQ(restored.modality[1].proj, rounded.modality[1].proj);
  EXPECT_EQ(restored.alpha, rounded.alpha);
  EXPECT_EQ(restored_adam.step, 1);
  EXPECT_EQ(restored_adam.m.eps, round_to_float(adam.m).eps);
  // Parameters only: Adam entries are ignored.
  auto only = init_params<double>(hp_, setup_.ctx, 98);
  restore_checkpoint<double>(read_checkpoint(dir_ / "a.ckpt"), only, nullptr);
  EXPECT_EQ(only.modality[0].user_emb, rounded.modality[0].user_emb);
}

TEST_F(CheckpointTest, ExactNameMatchRequired) {
  auto ckpt = make_checkpoint<double>(params_, nullptr);
  auto missing = ckpt;
  missing.tensors.pop_back();
  EXPECT_THROW(restore_checkpoint<double>(missing, params_, nullptr), InputError);
  auto extra = ckpt;
  extra.tensors.emplace_back("unknown.tensor", std::vector<float>{1.0f});
  EXPECT_THROW(restore_checkpoint<double>(extra, params_, nullptr), InputError);
  auto resized = ckpt;
  resized.tensors.front().second.push_back(0.0f);
  EXPECT_THROW(restore_checkpoint<double>(resized, params_, nullptr), InputError);
  AdamState<double> adam;
  EXPECT_THROW(restore_checkpoint<double>(ckpt, params_, &adam), InputError);
}

TEST_F(CheckpointTest, CorruptFilesRejected) {
  write_checkpoint(make_checkpoint<double>(params_, nullptr), dir_ / "b.ckpt");
  std::string bytes;
  {
    std::ifstream in(dir_ / "b.ckpt", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  EXPECT_EQ(bytes.substr(0, 4), "HPMC");
  auto write = [&](const std::string& b) {
    std::ofstream out(dir_ / "bad.ckpt", std::ios::binary | std::ios::trunc);
    out << b;
  };
  write(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_checkpoint(dir_ / "bad.ckpt"), InputError);
  write(bytes + "x");
  EXPECT_THROW(read_checkpoint(dir_ / "bad.ckpt"), InputError);
  write("HPMX" + bytes.substr(4));
  EXPECT_THROW(read_checkpoint(dir_ / "bad.ckpt"), InputError);
  EXPECT_THROW(read_checkpoint(dir_ / "none.ckpt"), InputError);
}

}  // namespace
}  // namespace hpmrec
