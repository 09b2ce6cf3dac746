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

// Cayley-Dickson hypercomplex arithmetic over vector-valued components.
//
// An HcVec with exponent n holds N = 2^(n+1) components, each a real vector
// of width `dim`. The dim coordinates are independent hypercomplex numbers:
// every operation acts coordinatewise, so products keep the operand shape.
// Component 0 is the real part; components 1..N-1 are the imaginary parts.
//
// Products use the doubling rule
//   (a, b) * (c, d) = (a c - conj(d) b,  d a + b conj(c))
// applied recursively down to the reals. Because a product of two basis
// units is always +/- one basis unit, the bilinear map is precomputed as a
// StructureTable and both forward and backward passes contract against it.

#include <cstdint>
#include <span>
#include <vector>

#include "hpmrec/tensor.hpp"

namespace hpmrec::cd {

inline constexpr int kMaxExponent = 4;

constexpr int num_components(int n_exp) { return 1 << (n_exp + 1); }

// e_i * e_j = sign(i, j) * e_index(i, j)
struct StructureTable {
  int order = 0;
  std::vector<int8_t> sign;
  std::vector<int> index;

  int sign_at(int i, int j) const { return sign[static_cast<std::size_t>(i * order + j)]; }
  int index_at(int i, int j) const { return index[static_cast<std::size_t>(i * order + j)]; }
};

// Cached per exponent; throws BoundsError unless 0 <= n_exp <= kMaxExponent.
const StructureTable& structure_table(int n_exp);

template <typename T>
class HcVec {
 public:
  HcVec(int n_exp, int dim);
  // `data` must have 2^(n_exp+1) rows and finite entries.
  HcVec(int n_exp, Mat<T> data);

  // Unit e_k replicated over `dim` coordinates.
  static HcVec basis(int n_exp, int k, int dim = 1);

  int n_exp() const { return n_exp_; }
  int num_components() const { return static_cast<int>(data_.rows()); }
  int dim() const { return static_cast<int>(data_.cols()); }

  const Mat<T>& data() const { return data_; }
  Mat<T>& data() { return data_; }

  T& operator()(int k, int t) { return data_(k, t); }
  T operator()(int k, int t) const { return data_(k, t); }

 private:
  int n_exp_;
  Mat<T> data_;
};

template <typename T>
HcVec<T> cd_add(const HcVec<T>& x, const HcVec<T>& y);
template <typename T>
HcVec<T> cd_sub(const HcVec<T>& x, const HcVec<T>& y);
template <typename T>
HcVec<T> cd_conjugate(const HcVec<T>& x);
template <typename T>
HcVec<T> cd_scale(T gamma, const HcVec<T>& x);

// Table contraction.
template <typename T>
HcVec<T> cd_mul(const HcVec<T>& x, const HcVec<T>& y);

// Direct evaluation of the doubling rule, used to build the tables.
template <typename T>
HcVec<T> cd_mul_recursive(const HcVec<T>& x, const HcVec<T>& y);

// Per-coordinate Euclidean norm over components.
template <typename T>
Vec<T> cd_norm(const HcVec<T>& x);

template <typename T>
struct MulGrad {
  HcVec<T> gx;
  HcVec<T> gy;
};

// Vector-Jacobian products of (x, y) -> x * y against cotangent g.
template <typename T>
MulGrad<T> cd_mul_vjp(const HcVec<T>& x, const HcVec<T>& y, const HcVec<T>& g);

// Row kernels over flattened component-major rows (component k occupies
// [k * cw, (k + 1) * cw)).
template <typename T>
void mul_row(const StructureTable& table, std::span<const T> x, std::span<const T> y,
             std::span<T> out, int cw);

// Accumulates (+=) into gx and gy.
template <typename T>
void mul_row_vjp(const StructureTable& table, std::span<const T> x, std::span<const T> y,
                 std::span<const T> g, std::span<T> gx, std::span<T> gy, int cw);

// Row-wise product of two node-by-(N * cw) matrices.
template <typename T>
Mat<T> mul_rows(const Mat<T>& x, const Mat<T>& y, int n_exp);

// Row-wise VJP; accumulates into gx / gy (either may be null).
template <typename T>
void mul_rows_vjp(const Mat<T>& x, const Mat<T>& y, const Mat<T>& g, int n_exp, Mat<T>* gx,
                  Mat<T>* gy);

}  // namespace hpmrec::cd
