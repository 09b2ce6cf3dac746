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

#include "hpmrec/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "hpmrec/binio.hpp"
#include "hpmrec/cdalgebra.hpp"
#include "hpmrec/errors.hpp"
#include "hpmrec/rng.hpp"

namespace hpmrec {
namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
T sgn(T x) {
  return static_cast<T>((x > T(0)) - (x < T(0)));
}

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
std::vector<std::pair<std::string, Mat<T>*>> tensors(ModelParams<T>& p) {
  std::vector<std::pair<std::string, Mat<T>*>> out;
  p.for_each([&out](const std::string& name, Mat<T>& t) { out.emplace_back(name, &t); });
  return out;
}

// Adds the gradient of lambda_s * (align + expand) over `nodes` into d.
template <typename T>
void add_ssl_grad(const std::array<Mat<T>, 3>& reps, std::array<Mat<T>, 3>& d,
                  std::span<const std::int32_t> nodes, const HyperParams& hp) {
  if (nodes.empty()) return;
  const T inv = T(1) / static_cast<T>(nodes.size());
  const T lambda_s = static_cast<T>(hp.ssl_weight);
  const T ca = lambda_s * inv * (hp.sign_align == SignAlign::kMinimize ? T(1) : T(-1));
  const T ce = -lambda_s * inv;
  constexpr std::array<std::pair<int, int>, 3> kPairs = {{{0, 1}, {0, 2}, {1, 2}}};
  const Eigen::Index width = reps[0].cols();
  for (const auto n : nodes) {
    for (const auto& [a, b] : kPairs) {
      for (Eigen::Index f = 0; f < width; ++f) {
        const T s = ca * sgn(reps[a](n, f) - reps[b](n, f));
        d[a](n, f) += s;
        d[b](n, f) -= s;
      }
    }
  }
  const int comps = hp.num_components();
  const Eigen::Index cw = width / comps;
  const T share = T(1) / static_cast<T>(comps - 1);
  for (std::size_t m = 0; m < 3; ++m) {
    for (const auto n : nodes) {
      for (Eigen::Index t = 0; t < cw; ++t) {
        T imag(0);
        for (int k = 1; k < comps; ++k) imag += reps[m](n, k * cw + t);
        imag *= share;
        const T s = ce * sgn(reps[m](n, t) - imag);
        d[m](n, t) += s;
        for (int k = 1; k < comps; ++k) d[m](n, k * cw + t) -= s * share;
      }
    }
  }
}

}  // namespace

template <typename T>
GradientSet<T> backward(const ForwardTrace<T>& trace, const ModelParams<T>& params,
                        const ModelContext<T>& ctx, std::span<const TrainingTriple> batch,
                        const HyperParams& hp, std::span<const std::int32_t> nodes) {
  GradientSet<T> g = params.zeros_like();
  const auto users = static_cast<Eigen::Index>(ctx.num_users);
  const auto items = static_cast<Eigen::Index>(ctx.num_items);
  const Eigen::Index n_nodes = users + items;
  const Eigen::Index w = hp.modality_width();
  const auto& fused = trace.out.fused;
  const auto& item_final = trace.out.item_final;

  // BPR: d/dx softplus(-x) = -sigmoid(-x), averaged over the batch.
  Mat<T> d_fused = Mat<T>::Zero(n_nodes, 3 * w);
  Mat<T> d_final = Mat<T>::Zero(items, 3 * w);
  if (!batch.empty()) {
    const T inv_b = T(1) / static_cast<T>(batch.size());
    for (const auto& t : batch) {
      const auto u_row = fused.row(t.user);
      const T x = u_row.dot(item_final.row(t.pos)) - u_row.dot(item_final.row(t.neg));
      const T c = -sigmoid(-x) * inv_b;
      d_fused.row(t.user) += c * (item_final.row(t.pos) - item_final.row(t.neg));
      d_final.row(t.pos) += c * u_row;
      d_final.row(t.neg) -= c * u_row;
    }
  }

  // Item-item enhancement: final = Hv + S Hv.
  const auto hv = fused.bottomRows(items);
  d_fused.bottomRows(items) += d_final;
  d_fused.bottomRows(items) += trace.item_graph.op.transpose() * d_final;
  if (!hp.freeze_alpha && ctx.item_graph.nnz() > 0) {
    const auto& pat = ctx.item_graph.pattern();
    std::vector<T> d_op(pat.nnz());
    for (std::size_t r = 0; r < pat.rows; ++r) {
      for (std::size_t e = pat.row_ptr[r]; e < pat.row_ptr[r + 1]; ++e) {
        d_op[e] = d_final.row(static_cast<Eigen::Index>(r)).dot(hv.row(pat.col[e]));
      }
    }
    g.alpha.row(0) = ctx.item_graph.template logits_grad<T>(trace.item_graph, d_op).transpose();
  }

  // Attention-weighted concatenation.
  const Vec<T>& bw = trace.beta_weights;
  std::array<Mat<T>, 3> d_hat;
  Vec<T> d_w(3);
  for (Eigen::Index m = 0; m < 3; ++m) {
    const auto block = d_fused.middleCols(m * w, w);
    d_hat[static_cast<std::size_t>(m)] = bw(m) * block;
    d_w(m) = (block.array() * trace.mi.hat[static_cast<std::size_t>(m)].array()).sum();
  }
  g.beta.row(0) = (bw.array() * (d_w.array() - bw.dot(d_w))).matrix().transpose();

  if (!hp.no_ssl && hp.ssl_on == SslOn::kHat) add_ssl_grad<T>(trace.mi.hat, d_hat, nodes, hp);

  // MI enhancement.
  std::array<Mat<T>, 3> d_bar = d_hat;
  if (!hp.no_mi) {
    const T eps1 = params.eps(0, 0), eps2 = params.eps(0, 1);
    g.eps(0, 0) = (d_hat[1].array() * trace.mi.prod[0].array()).sum();
    g.eps(0, 1) = (d_hat[2].array() * trace.mi.prod[1].array()).sum();
    const auto& bars = trace.modality;
    const Mat<T> g1 = eps1 * d_hat[1];
    cd::mul_rows_vjp<T>(bars[0].bar, bars[1].bar, g1, hp.n_exp, &d_bar[0], &d_bar[1]);
    const Mat<T> g2 = eps2 * d_hat[2];
    cd::mul_rows_vjp<T>(bars[0].bar, bars[2].bar, g2, hp.n_exp, &d_bar[0], &d_bar[2]);
  }
  if (!hp.no_ssl && hp.ssl_on == SslOn::kBar) {
    std::array<Mat<T>, 3> bars;
    for (std::size_t m = 0; m < 3; ++m) bars[m] = trace.modality[m].bar;
    add_ssl_grad<T>(bars, d_bar, nodes, hp);
  }

  // Prompt compensation and propagation back to layer 0:
  // dH0 = sum_l A^l (s * dbar), with A symmetric.
  const T agg = hp.layer_agg == LayerAgg::kMean ? T(1) / static_cast<T>(hp.layers + 1) : T(1);
  std::array<Mat<T>, 3> d_h0;
  for (std::size_t m = 0; m < 3; ++m) {
    if (!hp.no_prompt) g.modality[m].prompt = d_bar[m];
    const Mat<T> base = agg * d_bar[m];
    Mat<T> acc = base;
    for (int l = 1; l <= hp.layers; ++l) acc = base + ctx.adj * acc;
    d_h0[m] = std::move(acc);
  }

  if (hp.explicit_prompt && !nodes.empty()) {
    const T c = static_cast<T>(hp.ssl_weight) / static_cast<T>(nodes.size());
    for (std::size_t m = 0; m < 3; ++m) {
      const auto& p = params.modality[m].prompt;
      const auto& h0 = trace.modality[m].layers.front();
      for (const auto n : nodes) {
        for (Eigen::Index f = 0; f < w; ++f) {
          const T s = c * sgn(p(n, f) - h0(n, f));
          g.modality[m].prompt(n, f) += s;
          d_h0[m](n, f) -= s;
        }
      }
    }
  }

  if (!batch.empty() && hp.reg_weight != 0.0) {
    const T c = T(2) * static_cast<T>(hp.reg_weight) / static_cast<T>(batch.size());
    for (std::size_t m = 0; m < 3; ++m) {
      const auto& h0 = trace.modality[m].layers.front();
      for (const auto& t : batch) {
        d_h0[m].row(t.user) += c * h0.row(t.user);
        d_h0[m].row(users + t.pos) += c * h0.row(users + t.pos);
        d_h0[m].row(users + t.neg) += c * h0.row(users + t.neg);
      }
    }
  }

  // Layer-0 embeddings back to the parameters that produced them.
  for (Modality mod : kAllModalities) {
    const auto m = static_cast<std::size_t>(mod);
    auto& gm = g.modality[m];
    gm.user_emb = d_h0[m].topRows(users);
    const auto d_items = d_h0[m].bottomRows(items);
    if (mod == Modality::kId) {
      gm.item_emb = d_items;
      continue;
    }
    const auto& feats = ctx.features[m - 1];
    if (hp.encoder_mode != EncoderMode::kMlp) {
      gm.proj.noalias() = feats.transpose() * d_items;
      continue;
    }
    const auto& hidden = trace.modality[m].items.hidden;
    const auto& compress = params.modality[m].compress;
    const Eigen::Index comps = hp.num_components();
    const Eigen::Index d = hp.dim;
    const Eigen::Index cw = d / comps;
    Mat<T> d_hidden(items, d * comps);
    gm.compress.setZero();
    for (Eigen::Index k = 0; k < comps; ++k) {
      const auto dk = d_items.middleCols(k * cw, cw);
      gm.compress.noalias() += hidden.middleCols(k * d, d).transpose() * dk;
      d_hidden.middleCols(k * d, d).noalias() = dk * compress.transpose();
    }
    gm.proj.noalias() = feats.transpose() * d_hidden;
  }
  return g;
}

template <typename T>
void adam_step(ModelParams<T>& params, const GradientSet<T>& grads, AdamState<T>& state, double lr,
               double clip_norm) {
  auto ps = tensors(params);
  auto gs = tensors(const_cast<GradientSet<T>&>(grads));
  auto ms = tensors(state.m);
  auto vs = tensors(state.v);
  if (ps.size() != gs.size() || ps.size() != ms.size() || ps.size() != vs.size()) {
    throw ShapeError("adam_step: parameter, gradient and state sets differ");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& g = *gs[i].second;
    if (g.rows() != ps[i].second->rows() || g.cols() != ps[i].second->cols()) {
      throw ShapeError("adam_step: gradient shape mismatch for " + ps[i].first);
    }
    if (!g.allFinite()) throw NumericalError("non-finite gradient for parameter " + gs[i].first);
    sq += static_cast<double>(g.squaredNorm());
  }
  T scale(1);
  if (clip_norm > 0.0) {
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) scale = static_cast<T>(clip_norm / norm);
  }
  ++state.step;
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(state.beta1, static_cast<double>(state.step)));
  const T c2 = static_cast<T>(1.0 - std::pow(state.beta2, static_cast<double>(state.step)));
  const T step = static_cast<T>(lr);
  const T eps = static_cast<T>(state.eps);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = *ps[i].second;
    auto& m = *ms[i].second;
    auto& v = *vs[i].second;
    const auto& g = *gs[i].second;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const T gj = scale * g.data()[j];
      T& mj = m.data()[j];
      T& vj = v.data()[j];
      mj = b1 * mj + (T(1) - b1) * gj;
      vj = b2 * vj + (T(1) - b2) * gj * gj;
      p.data()[j] -= step * (mj / c1) / (std::sqrt(vj / c2) + eps);
    }
  }
}

template <typename T>
std::vector<T> manhattan_arguments(const ForwardTrace<T>& trace, const ModelParams<T>& params,
                                   const HyperParams& hp, std::span<const std::int32_t> nodes) {
  std::vector<T> args;
  if (!hp.no_ssl) {
    std::array<const Mat<T>*, 3> reps{};
    for (std::size_t m = 0; m < 3; ++m) {
      reps[m] = hp.ssl_on == SslOn::kHat ? &trace.mi.hat[m] : &trace.modality[m].bar;
    }
    const Eigen::Index width = reps[0]->cols();
    const int comps = hp.num_components();
    const Eigen::Index cw = width / comps;
    for (const auto n : nodes) {
      for (Eigen::Index f = 0; f < width; ++f) {
        args.push_back((*reps[0])(n, f) - (*reps[1])(n, f));
        args.push_back((*reps[0])(n, f) - (*reps[2])(n, f));
        args.push_back((*reps[1])(n, f) - (*reps[2])(n, f));
      }
      for (std::size_t m = 0; m < 3; ++m) {
        for (Eigen::Index t = 0; t < cw; ++t) {
          T imag(0);
          for (int k = 1; k < comps; ++k) imag += (*reps[m])(n, k * cw + t);
          args.push_back((*reps[m])(n, t) - imag / static_cast<T>(comps - 1));
        }
      }
    }
  }
  if (hp.explicit_prompt) {
    for (std::size_t m = 0; m < 3; ++m) {
      const auto& p = params.modality[m].prompt;
      const auto& h0 = trace.modality[m].layers.front();
      for (const auto n : nodes) {
        for (Eigen::Index f = 0; f < p.cols(); ++f) args.push_back(p(n, f) - h0(n, f));
      }
    }
  }
  if (hp.item_graph_norm == ItemGraphNorm::kSymmetric) {
    args.insert(args.end(), trace.item_graph.raw.begin(), trace.item_graph.raw.end());
  }
  return args;
}

nlohmann::ordered_json GradCheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed;
  j["tolerance"] = tolerance;
  j["step"] = step;
  j["seed"] = seed;
  auto& arr = j["parameters"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    arr.push_back({{"name", e.name},
                   {"numel", e.numel},
                   {"checked", e.checked},
                   {"excluded_kinks", e.excluded},
                   {"max_abs_error", e.max_abs_error},
                   {"max_abs_fd", e.max_fd},
                   {"rel_error", e.rel_error},
                   {"passed", e.passed}});
  }
  return j;
}

GradCheckProblem make_gradcheck_problem(std::uint64_t seed, const HyperParams& base) {
  GradCheckProblem prob;
  prob.hp = base;
  prob.hp.knn_k = std::min(prob.hp.knn_k, 2);
  prob.hp.validate();
  constexpr std::size_t kUsers = 3, kItems = 4;
  const std::vector<Interaction> train = {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}, {2, 3}, {2, 0}};
  auto rng = make_stream(seed, "gradcheck");
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMatrix visual, textual;
  visual.modality = Modality::kVisual;
  textual.modality = Modality::kTextual;
  visual.values.resize(kItems, 5);
  textual.values.resize(kItems, 3);
  for (Eigen::Index i = 0; i < visual.values.size(); ++i) {
    visual.values.data()[i] = static_cast<float>(normal(rng));
  }
  for (Eigen::Index i = 0; i < textual.values.size(); ++i) {
    textual.values.data()[i] = static_cast<float>(normal(rng));
  }
  prob.ctx = build_context<double>(train, kUsers, kItems, visual, textual, prob.hp);
  prob.params = init_params<double>(prob.hp, prob.ctx, seed);
  // Move the scalars away from their symmetric initial values.
  prob.params.eps << 0.15, 0.07;
  prob.params.beta << 0.2, -0.1, 0.05;
  prob.params.alpha << 0.3, -0.2;
  prob.batch = {{0, 0, 2}, {1, 2, 3}, {2, 3, 1}, {0, 1, 3}};
  return prob;
}

GradCheckReport grad_check(const GradCheckProblem& problem, double tolerance, double step,
                           std::uint64_t seed,
                           const std::function<void(GradientSet<double>&)>& corrupt) {
  const auto& hp = problem.hp;
  const auto& ctx = problem.ctx;
  const auto nodes = ssl_nodes(problem.batch, ctx.num_users, ctx.num_items, hp.ssl_batch_only);
  GradCheckReport report;
  report.tolerance = tolerance;
  report.step = step;
  report.seed = seed;

  const auto trace = forward<double>(problem.params, ctx, hp);
  auto grads = backward<double>(trace, problem.params, ctx, problem.batch, hp, nodes);
  if (corrupt) corrupt(grads);

  ModelParams<double> work = problem.params;
  auto evaluate = [&](std::vector<double>* args) {
    const auto tr = forward<double>(work, ctx, hp);
    if (args) *args = manhattan_arguments<double>(tr, work, hp, nodes);
    return compute_loss<double>(tr, work, problem.batch, hp, nodes).total;
  };

  auto work_tensors = tensors(work);
  auto grad_tensors = tensors(grads);
  std::vector<double> args_plus, args_minus;
  for (std::size_t ti = 0; ti < work_tensors.size(); ++ti) {
    auto& [name, tensor] = work_tensors[ti];
    const auto& g = *grad_tensors[ti].second;
    GradCheckEntry entry;
    entry.name = name;
    entry.numel = static_cast<std::size_t>(tensor->size());
    double max_err = 0.0, max_fd = 0.0;
    for (Eigen::Index j = 0; j < tensor->size(); ++j) {
      double& x = tensor->data()[j];
      const double saved = x;
      x = saved + step;
      const double f_plus = evaluate(&args_plus);
      x = saved - step;
      const double f_minus = evaluate(&args_minus);
      x = saved;
      bool kink = false;
      for (std::size_t a = 0; a < args_plus.size() && !kink; ++a) {
        const double p = args_plus[a], m = args_minus[a];
        if (sgn(p) != sgn(m)) kink = true;
        if (p != m && std::min(std::abs(p), std::abs(m)) < 1e-7) kink = true;
      }
      if (kink) {
        ++entry.excluded;
        continue;
      }
      ++entry.checked;
      const double fd = (f_plus - f_minus) / (2.0 * step);
      max_err = std::max(max_err, std::abs(g.data()[j] - fd));
      max_fd = std::max(max_fd, std::abs(fd));
    }
    entry.max_abs_error = max_err;
    entry.max_fd = max_fd;
    entry.rel_error = max_err / (max_fd + 1e-12);
    entry.passed = entry.rel_error < tolerance;
    report.passed = report.passed && entry.passed;
    report.entries.push_back(entry);
  }
  return report;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  binio::write_magic(out, "HPMC");
  binio::write_u32(out, kCheckpointVersion);
  binio::write_u64(out, ckpt.tensors.size());
  for (const auto& [name, values] : ckpt.tensors) {
    binio::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    binio::write_u64(out, values.size());
    for (const float v : values) binio::write_f32(out, v);
  }
  if (!out) throw InputError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::in | std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  binio::Reader r(in, path.string());
  r.expect_magic("HPMC");
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw InputError(path.string() + ": unsupported checkpoint version " + std::to_string(v));
  }
  Checkpoint ckpt;
  const auto count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.u32();
    auto name = r.bytes(len);
    const auto numel = r.u64();
    std::vector<float> values;
    values.reserve(static_cast<std::size_t>(numel));
    for (std::uint64_t k = 0; k < numel; ++k) values.push_back(r.f32());
    ckpt.tensors.emplace_back(std::move(name), std::move(values));
  }
  if (!r.at_end()) throw InputError(path.string() + ": trailing bytes");
  return ckpt;
}

template <typename T>
Checkpoint make_checkpoint(const ModelParams<T>& params, const AdamState<T>* adam) {
  Checkpoint ckpt;
  auto add = [&ckpt](const std::string& name, const Mat<T>& t) {
    std::vector<float> values(static_cast<std::size_t>(t.size()));
    for (Eigen::Index i = 0; i < t.size(); ++i) values[static_cast<std::size_t>(i)] = static_cast<float>(t.data()[i]);
    ckpt.tensors.emplace_back(name, std::move(values));
  };
  params.for_each(add);
  if (adam != nullptr) {
    adam->m.for_each([&add](const std::string& n, const Mat<T>& t) { add("adam.m/" + n, t); });
    adam->v.for_each([&add](const std::string& n, const Mat<T>& t) { add("adam.v/" + n, t); });
    ckpt.tensors.emplace_back("adam.step", std::vector<float>{static_cast<float>(adam->step)});
  }
  return ckpt;
}

template <typename T>
void restore_checkpoint(const Checkpoint& ckpt, ModelParams<T>& params, AdamState<T>* adam) {
  std::map<std::string, const std::vector<float>*> by_name;
  for (const auto& [name, values] : ckpt.tensors) {
    if (!by_name.emplace(name, &values).second) {
      throw InputError("checkpoint: duplicate tensor " + name);
    }
  }
  std::set<std::string> expected;
  auto fill = [&](const std::string& name, Mat<T>& t) {
    expected.insert(name);
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw InputError("checkpoint: missing tensor " + name);
    if (it->second->size() != static_cast<std::size_t>(t.size())) {
      throw InputError("checkpoint: tensor " + name + " has " + std::to_string(it->second->size()) +
                       " values, model expects " + std::to_string(t.size()));
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>((*it->second)[static_cast<std::size_t>(i)]);
  };
  params.for_each(fill);
  if (adam != nullptr) {
    *adam = AdamState<T>::like(params);
    adam->m.for_each([&fill](const std::string& n, Mat<T>& t) { fill("adam.m/" + n, t); });
    adam->v.for_each([&fill](const std::string& n, Mat<T>& t) { fill("adam.v/" + n, t); });
    Mat<T> step(1, 1);
    fill("adam.step", step);
    adam->step = static_cast<std::int64_t>(step(0, 0));
  }
  for (const auto& [name, values] : by_name) {
    const bool is_adam = name.rfind("adam.", 0) == 0;
    if (is_adam && adam == nullptr) continue;
    if (!expected.count(name)) throw InputError("checkpoint: unexpected tensor " + name);
  }
}

template <typename T>
ModelParams<T> round_to_float(const ModelParams<T>& params) {
  return params.template cast<float>().template cast<T>();
}

#define HPMREC_INSTANTIATE_OPTIM(T)                                                            \
  template GradientSet<T> backward<T>(const ForwardTrace<T>&, const ModelParams<T>&,           \
                                      const ModelContext<T>&, std::span<const TrainingTriple>, \
                                      const HyperParams&, std::span<const std::int32_t>);      \
  template void adam_step<T>(ModelParams<T>&, const GradientSet<T>&, AdamState<T>&, double,    \
                             double);                                                          \
  template std::vector<T> manhattan_arguments<T>(const ForwardTrace<T>&, const ModelParams<T>&, \
                                                 const HyperParams&,                           \
                                                 std::span<const std::int32_t>);               \
  template Checkpoint make_checkpoint<T>(const ModelParams<T>&, const AdamState<T>*);          \
  template void restore_checkpoint<T>(const Checkpoint&, ModelParams<T>&, AdamState<T>*);      \
  template ModelParams<T> round_to_float<T>(const ModelParams<T>&);

HPMREC_INSTANTIATE_OPTIM(float)
HPMREC_INSTANTIATE_OPTIM(double)

}  // namespace hpmrec
