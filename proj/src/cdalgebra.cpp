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

#include "hpmrec/cdalgebra.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <string>

#include "hpmrec/errors.hpp"

namespace hpmrec::cd {
namespace {

void check_exponent(int n_exp) {
  if (n_exp < 0 || n_exp > kMaxExponent) {
    throw BoundsError("hypercomplex exponent " + std::to_string(n_exp) + " outside [0, " +
                      std::to_string(kMaxExponent) + "]");
  }
}

template <typename T>
std::vector<T> conj_scalar(std::span<const T> a) {
  std::vector<T> out(a.begin(), a.end());
  for (std::size_t k = 1; k < out.size(); ++k) out[k] = -out[k];
  return out;
}

// One hypercomplex number (a single coordinate) as a flat component list.
template <typename T>
std::vector<T> mul_scalar(std::span<const T> x, std::span<const T> y) {
  const std::size_t n = x.size();
  if (n == 1) return {x[0] * y[0]};
  const std::size_t h = n / 2;
  std::span<const T> a = x.first(h), b = x.subspan(h);
  std::span<const T> c = y.first(h), d = y.subspan(h);
  const auto dc = conj_scalar(d);
  const auto cc = conj_scalar(c);
  const auto ac = mul_scalar<T>(a, c);
  const auto db = mul_scalar<T>(dc, b);
  const auto da = mul_scalar<T>(d, a);
  const auto bc = mul_scalar<T>(b, cc);
  std::vector<T> out(n);
  for (std::size_t k = 0; k < h; ++k) {
    out[k] = ac[k] - db[k];
    out[h + k] = da[k] + bc[k];
  }
  return out;
}

StructureTable build_table(int n_exp) {
  const int order = num_components(n_exp);
  StructureTable t;
  t.order = order;
  t.sign.resize(static_cast<std::size_t>(order * order));
  t.index.resize(static_cast<std::size_t>(order * order));
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j < order; ++j) {
      std::vector<double> ei(order, 0.0), ej(order, 0.0);
      ei[i] = 1.0;
      ej[j] = 1.0;
      const auto p = mul_scalar<double>(ei, ej);
      int found = -1;
      for (int k = 0; k < order; ++k) {
        if (p[k] != 0.0) {
          found = k;
          break;
        }
      }
      t.index[static_cast<std::size_t>(i * order + j)] = found;
      t.sign[static_cast<std::size_t>(i * order + j)] = p[found] > 0 ? 1 : -1;
    }
  }
  return t;
}

template <typename T>
void check_same(const HcVec<T>& x, const HcVec<T>& y, const char* op) {
  if (x.n_exp() != y.n_exp() || x.dim() != y.dim()) {
    throw ShapeError(std::string(op) + ": operand shapes differ (" +
                     std::to_string(x.num_components()) + "x" + std::to_string(x.dim()) +
                     " vs " + std::to_string(y.num_components()) + "x" +
                     std::to_string(y.dim()) + ")");
  }
}

}  // namespace

const StructureTable& structure_table(int n_exp) {
  check_exponent(n_exp);
  static std::array<StructureTable, kMaxExponent + 1> tables;
  static std::once_flag once;
  std::call_once(once, [] {
    for (int n = 0; n <= kMaxExponent; ++n) tables[static_cast<std::size_t>(n)] = build_table(n);
  });
  return tables[static_cast<std::size_t>(n_exp)];
}

template <typename T>
HcVec<T>::HcVec(int n_exp, int dim) : n_exp_(n_exp) {
  check_exponent(n_exp);
  if (dim <= 0) throw ShapeError("HcVec dim must be positive");
  data_ = Mat<T>::Zero(cd::num_components(n_exp), dim);
}

template <typename T>
HcVec<T>::HcVec(int n_exp, Mat<T> data) : n_exp_(n_exp), data_(std::move(data)) {
  check_exponent(n_exp);
  if (data_.rows() != cd::num_components(n_exp) || data_.cols() <= 0) {
    throw ShapeError("HcVec expects " + std::to_string(cd::num_components(n_exp)) +
                     " component rows, got " + std::to_string(data_.rows()));
  }
  if (!data_.allFinite()) throw InputError("HcVec entries must be finite");
}

template <typename T>
HcVec<T> HcVec<T>::basis(int n_exp, int k, int dim) {
  HcVec v(n_exp, dim);
  if (k < 0 || k >= v.num_components()) throw BoundsError("basis index out of range");
  v.data_.row(k).setOnes();
  return v;
}

template <typename T>
HcVec<T> cd_add(const HcVec<T>& x, const HcVec<T>& y) {
  check_same(x, y, "cd_add");
  return HcVec<T>(x.n_exp(), Mat<T>(x.data() + y.data()));
}

template <typename T>
HcVec<T> cd_sub(const HcVec<T>& x, const HcVec<T>& y) {
  check_same(x, y, "cd_sub");
  return HcVec<T>(x.n_exp(), Mat<T>(x.data() - y.data()));
}

template <typename T>
HcVec<T> cd_conjugate(const HcVec<T>& x) {
  Mat<T> out = -x.data();
  out.row(0) = x.data().row(0);
  return HcVec<T>(x.n_exp(), std::move(out));
}

template <typename T>
HcVec<T> cd_scale(T gamma, const HcVec<T>& x) {
  return HcVec<T>(x.n_exp(), Mat<T>(gamma * x.data()));
}

template <typename T>
HcVec<T> cd_mul(const HcVec<T>& x, const HcVec<T>& y) {
  check_same(x, y, "cd_mul");
  HcVec<T> out(x.n_exp(), x.dim());
  const auto& table = structure_table(x.n_exp());
  const auto n = static_cast<std::size_t>(x.data().size());
  mul_row<T>(table, {x.data().data(), n}, {y.data().data(), n}, {out.data().data(), n},
             x.dim());
  return out;
}

template <typename T>
HcVec<T> cd_mul_recursive(const HcVec<T>& x, const HcVec<T>& y) {
  check_same(x, y, "cd_mul_recursive");
  HcVec<T> out(x.n_exp(), x.dim());
  const int comps = x.num_components();
  std::vector<T> xs(static_cast<std::size_t>(comps)), ys(static_cast<std::size_t>(comps));
  for (int t = 0; t < x.dim(); ++t) {
    for (int k = 0; k < comps; ++k) {
      xs[static_cast<std::size_t>(k)] = x(k, t);
      ys[static_cast<std::size_t>(k)] = y(k, t);
    }
    const auto p = mul_scalar<T>(xs, ys);
    for (int k = 0; k < comps; ++k) out(k, t) = p[static_cast<std::size_t>(k)];
  }
  return out;
}

template <typename T>
Vec<T> cd_norm(const HcVec<T>& x) {
  return x.data().colwise().norm().transpose();
}

template <typename T>
MulGrad<T> cd_mul_vjp(const HcVec<T>& x, const HcVec<T>& y, const HcVec<T>& g) {
  check_same(x, y, "cd_mul_vjp");
  check_same(x, g, "cd_mul_vjp");
  MulGrad<T> out{HcVec<T>(x.n_exp(), x.dim()), HcVec<T>(x.n_exp(), x.dim())};
  const auto& table = structure_table(x.n_exp());
  const auto n = static_cast<std::size_t>(x.data().size());
  mul_row_vjp<T>(table, {x.data().data(), n}, {y.data().data(), n}, {g.data().data(), n},
                 {out.gx.data().data(), n}, {out.gy.data().data(), n}, x.dim());
  return out;
}

template <typename T>
void mul_row(const StructureTable& table, std::span<const T> x, std::span<const T> y,
             std::span<T> out, int cw) {
  const int order = table.order;
  std::fill(out.begin(), out.end(), T(0));
  for (int i = 0; i < order; ++i) {
    const T* xi = x.data() + static_cast<std::ptrdiff_t>(i) * cw;
    for (int j = 0; j < order; ++j) {
      const T* yj = y.data() + static_cast<std::ptrdiff_t>(j) * cw;
      T* ok = out.data() + static_cast<std::ptrdiff_t>(table.index_at(i, j)) * cw;
      if (table.sign_at(i, j) > 0) {
        for (int t = 0; t < cw; ++t) ok[t] += xi[t] * yj[t];
      } else {
        for (int t = 0; t < cw; ++t) ok[t] -= xi[t] * yj[t];
      }
    }
  }
}

template <typename T>
void mul_row_vjp(const StructureTable& table, std::span<const T> x, std::span<const T> y,
                 std::span<const T> g, std::span<T> gx, std::span<T> gy, int cw) {
  const int order = table.order;
  for (int i = 0; i < order; ++i) {
    const T* xi = x.data() + static_cast<std::ptrdiff_t>(i) * cw;
    T* gxi = gx.empty() ? nullptr : gx.data() + static_cast<std::ptrdiff_t>(i) * cw;
    for (int j = 0; j < order; ++j) {
      const T* yj = y.data() + static_cast<std::ptrdiff_t>(j) * cw;
      T* gyj = gy.empty() ? nullptr : gy.data() + static_cast<std::ptrdiff_t>(j) * cw;
      const T* gk = g.data() + static_cast<std::ptrdiff_t>(table.index_at(i, j)) * cw;
      const T s = static_cast<T>(table.sign_at(i, j));
      for (int t = 0; t < cw; ++t) {
        if (gxi) gxi[t] += s * gk[t] * yj[t];
        if (gyj) gyj[t] += s * gk[t] * xi[t];
      }
    }
  }
}

template <typename T>
Mat<T> mul_rows(const Mat<T>& x, const Mat<T>& y, int n_exp) {
  const int order = num_components(n_exp);
  if (x.rows() != y.rows() || x.cols() != y.cols() || x.cols() % order != 0) {
    throw ShapeError("mul_rows: operand shapes incompatible");
  }
  const auto& table = structure_table(n_exp);
  const int cw = static_cast<int>(x.cols()) / order;
  const auto w = static_cast<std::size_t>(x.cols());
  Mat<T> out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    mul_row<T>(table, {x.row(r).data(), w}, {y.row(r).data(), w}, {out.row(r).data(), w}, cw);
  }
  return out;
}

template <typename T>
void mul_rows_vjp(const Mat<T>& x, const Mat<T>& y, const Mat<T>& g, int n_exp, Mat<T>* gx,
                  Mat<T>* gy) {
  const int order = num_components(n_exp);
  if (x.rows() != y.rows() || x.cols() != y.cols() || g.rows() != x.rows() ||
      g.cols() != x.cols() || x.cols() % order != 0) {
    throw ShapeError("mul_rows_vjp: operand shapes incompatible");
  }
  const auto& table = structure_table(n_exp);
  const int cw = static_cast<int>(x.cols()) / order;
  const auto w = static_cast<std::size_t>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::span<T> gxr = gx ? std::span<T>(gx->row(r).data(), w) : std::span<T>();
    std::span<T> gyr = gy ? std::span<T>(gy->row(r).data(), w) : std::span<T>();
    mul_row_vjp<T>(table, {x.row(r).data(), w}, {y.row(r).data(), w}, {g.row(r).data(), w}, gxr,
                   gyr, cw);
  }
}

#define HPMREC_INSTANTIATE_CD(T)                                                              \
  template class HcVec<T>;                                                                    \
  template HcVec<T> cd_add<T>(const HcVec<T>&, const HcVec<T>&);                              \
  template HcVec<T> cd_sub<T>(const HcVec<T>&, const HcVec<T>&);                              \
  template HcVec<T> cd_conjugate<T>(const HcVec<T>&);                                         \
  template HcVec<T> cd_scale<T>(T, const HcVec<T>&);                                          \
  template HcVec<T> cd_mul<T>(const HcVec<T>&, const HcVec<T>&);                              \
  template HcVec<T> cd_mul_recursive<T>(const HcVec<T>&, const HcVec<T>&);                    \
  template Vec<T> cd_norm<T>(const HcVec<T>&);                                                \
  template MulGrad<T> cd_mul_vjp<T>(const HcVec<T>&, const HcVec<T>&, const HcVec<T>&);       \
  template void mul_row<T>(const StructureTable&, std::span<const T>, std::span<const T>,     \
                           std::span<T>, int);                                                \
  template void mul_row_vjp<T>(const StructureTable&, std::span<const T>, std::span<const T>, \
                               std::span<const T>, std::span<T>, std::span<T>, int);          \
  template Mat<T> mul_rows<T>(const Mat<T>&, const Mat<T>&, int);                             \
  template void mul_rows_vjp<T>(const Mat<T>&, const Mat<T>&, const Mat<T>&, int, Mat<T>*,    \
                                Mat<T>*);

HPMREC_INSTANTIATE_CD(float)
HPMREC_INSTANTIATE_CD(double)

}  // namespace hpmrec::cd
