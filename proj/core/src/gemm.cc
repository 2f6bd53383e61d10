/* Copyright 2026 The dynbatch Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "gemm.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <utility>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace dynbatch::kernels {

template <typename T>
PackedRhs<T>::PackedRhs(const T* b, int64_t k, int64_t n, int64_t ldb,
                        std::vector<T>& storage)
    : k_(k), n_(n) {
  constexpr int64_t kAlign = 64 / sizeof(T);
  storage.resize(num_panels() * k * kPanelWidth + kAlign);
  const auto address = reinterpret_cast<std::uintptr_t>(storage.data());
  base_ = storage.data() + ((64 - address % 64) % 64) / sizeof(T);
  for (int64_t p = 0; p < num_panels(); ++p) {
    const int64_t j0 = p * kPanelWidth;
    const int64_t w = std::min(kPanelWidth, n - j0);
    T* dst = base_ + p * k * kPanelWidth;
    for (int64_t r = 0; r < k; ++r) {
      std::memcpy(dst + r * kPanelWidth, b + r * ldb + j0, w * sizeof(T));
      std::fill(dst + r * kPanelWidth + w, dst + (r + 1) * kPanelWidth, T(0));
    }
  }
}

namespace {

#if defined(__AVX512F__)

template <typename T>
struct Simd;

template <>
struct Simd<float> {
  using Reg = __m512;
  using Mask = __mmask16;
  static constexpr int64_t kLanes = 16;
  static Reg Zero() { return _mm512_setzero_ps(); }
  static Reg Load(const float* p, Mask m) { return _mm512_maskz_loadu_ps(m, p); }
  static Reg Broadcast(float x) { return _mm512_set1_ps(x); }
  static Reg Fma(Reg a, Reg b, Reg c) { return _mm512_fmadd_ps(a, b, c); }
  static void Store(float* p, Reg v, Mask m) { _mm512_mask_storeu_ps(p, m, v); }
};

template <>
struct Simd<double> {
  using Reg = __m512d;
  using Mask = __mmask8;
  static constexpr int64_t kLanes = 8;
  static Reg Zero() { return _mm512_setzero_pd(); }
  static Reg Load(const double* p, Mask m) { return _mm512_maskz_loadu_pd(m, p); }
  static Reg Broadcast(double x) { return _mm512_set1_pd(x); }
  static Reg Fma(Reg a, Reg b, Reg c) { return _mm512_fmadd_pd(a, b, c); }
  static void Store(double* p, Reg v, Mask m) { _mm512_mask_storeu_pd(p, m, v); }
};

constexpr int kMaxRows = 12;
constexpr int kMaxVectors = 8;
constexpr int kMaxAccumulators = 24;
constexpr int kPanelRows = 8;

// R rows by NV vectors of output columns (the last `width` of them valid).
template <typename T, int R, int NV>
void Block(int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* out, int64_t ldo,
           int64_t width) {
  using S = Simd<T>;
  typename S::Mask mask[NV];
#pragma GCC unroll 16
  for (int v = 0; v < NV; ++v) {
    const int64_t lanes = std::clamp<int64_t>(width - v * S::kLanes, 0, S::kLanes);
    mask[v] = static_cast<typename S::Mask>((uint32_t{1} << lanes) - 1);
  }
  typename S::Reg acc[R][NV];
#pragma GCC unroll 16
  for (int r = 0; r < R; ++r) {
#pragma GCC unroll 16
    for (int v = 0; v < NV; ++v) acc[r][v] = S::Zero();
  }
  for (int64_t p = 0; p < k; ++p) {
    typename S::Reg bv[NV];
#pragma GCC unroll 16
    for (int v = 0; v < NV; ++v) bv[v] = S::Load(b + p * ldb + v * S::kLanes, mask[v]);
#pragma GCC unroll 16
    for (int r = 0; r < R; ++r) {
      const typename S::Reg av = S::Broadcast(a[r * lda + p]);
#pragma GCC unroll 16
      for (int v = 0; v < NV; ++v) acc[r][v] = S::Fma(av, bv[v], acc[r][v]);
    }
  }
#pragma GCC unroll 16
  for (int r = 0; r < R; ++r) {
#pragma GCC unroll 16
    for (int v = 0; v < NV; ++v) S::Store(out + r * ldo + v * S::kLanes, acc[r][v], mask[v]);
  }
}

template <typename T>
using BlockFn = void (*)(int64_t, const T*, int64_t, const T*, int64_t, T*, int64_t, int64_t);

template <typename T, int R, int NV>
constexpr BlockFn<T> Entry() {
  if constexpr (R * NV <= kMaxAccumulators) {
    return &Block<T, R, NV>;
  } else {
    return nullptr;
  }
}

template <typename T, int R, int... V>
constexpr std::array<BlockFn<T>, kMaxVectors> RowOfTable(std::integer_sequence<int, V...>) {
  return {Entry<T, R, V + 1>()...};
}

template <typename T, int... R>
constexpr auto MakeTable(std::integer_sequence<int, R...>) {
  return std::array<std::array<BlockFn<T>, kMaxVectors>, kMaxRows>{
      RowOfTable<T, R + 1>(std::make_integer_sequence<int, kMaxVectors>{})...};
}

template <typename T>
constexpr auto kBlocks = MakeTable<T>(std::make_integer_sequence<int, kMaxRows>{});

template <typename T>
void RunBlock(int64_t rows, int64_t width, int64_t k, const T* a, int64_t lda, const T* b,
              int64_t ldb, T* out, int64_t ldo) {
  const int64_t vectors = (width + Simd<T>::kLanes - 1) / Simd<T>::kLanes;
  kBlocks<T>[rows - 1][vectors - 1](k, a, lda, b, ldb, out, ldo, width);
}

template <typename T>
void Unpacked(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b,
              int64_t ldb, T* out, int64_t ldo) {
  // Few rows: wide column blocks keep enough independent accumulators.
  const int64_t rows = std::min<int64_t>(m, kMaxRows);
  const int64_t vectors = std::clamp<int64_t>(kMaxAccumulators / rows, 1, kMaxVectors);
  const int64_t cols = vectors * Simd<T>::kLanes;
  for (int64_t i = 0; i < m; i += rows) {
    const int64_t r = std::min(rows, m - i);
    for (int64_t j = 0; j < n; j += cols) {
      RunBlock<T>(r, std::min(cols, n - j), k, a + i * lda, lda, b + j, ldb,
                  out + i * ldo + j, ldo);
    }
  }
}

template <typename T>
void Packed(int64_t m, const T* a, int64_t lda, const PackedRhs<T>& b, T* out, int64_t ldo) {
  constexpr int64_t kWidth = PackedRhs<T>::kPanelWidth;
  static_assert(kWidth * kPanelRows <= Simd<T>::kLanes * kMaxAccumulators);
  for (int64_t p = 0; p < b.num_panels(); ++p) {
    const int64_t j = p * kWidth;
    const int64_t w = std::min(kWidth, b.n() - j);
    for (int64_t i = 0; i < m; i += kPanelRows) {
      RunBlock<T>(std::min<int64_t>(kPanelRows, m - i), w, b.k(), a + i * lda, lda, b.panel(p),
                  kWidth, out + i * ldo + j, ldo);
    }
  }
}

#else  // !__AVX512F__

template <typename T>
void Unpacked(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b,
              int64_t ldb, T* out, int64_t ldo) {
  for (int64_t i = 0; i < m; ++i) {
    T* o = out + i * ldo;
    std::fill_n(o, n, T(0));
    for (int64_t p = 0; p < k; ++p) {
      const T s = a[i * lda + p];
      const T* row = b + p * ldb;
      for (int64_t j = 0; j < n; ++j) o[j] = std::fma(s, row[j], o[j]);
    }
  }
}

template <typename T>
void Packed(int64_t m, const T* a, int64_t lda, const PackedRhs<T>& b, T* out, int64_t ldo) {
  constexpr int64_t kWidth = PackedRhs<T>::kPanelWidth;
  for (int64_t p = 0; p < b.num_panels(); ++p) {
    const int64_t j = p * kWidth;
    Unpacked<T>(m, std::min(kWidth, b.n() - j), b.k(), a, lda, b.panel(p), kWidth,
                out + j, ldo);
  }
}

#endif  // __AVX512F__

}  // namespace

template <typename T>
void RowGemm(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b,
             int64_t ldb, T* out, int64_t ldo) {
  if (m == 0 || n == 0) return;
  if (m >= kPackRows) {
    thread_local std::vector<T> storage;
    RowGemm<T>(m, a, lda, PackedRhs<T>(b, k, n, ldb, storage), out, ldo);
    return;
  }
  Unpacked<T>(m, n, k, a, lda, b, ldb, out, ldo);
}

template <typename T>
void RowGemm(int64_t m, const T* a, int64_t lda, const PackedRhs<T>& b, T* out,
             int64_t ldo) {
  if (m == 0 || b.n() == 0) return;
  Packed<T>(m, a, lda, b, out, ldo);
}

template class PackedRhs<float>;
template class PackedRhs<double>;
template void RowGemm<float>(int64_t, int64_t, int64_t, const float*, int64_t, const float*,
                             int64_t, float*, int64_t);
template void RowGemm<double>(int64_t, int64_t, int64_t, const double*, int64_t,
                              const double*, int64_t, double*, int64_t);
template void RowGemm<float>(int64_t, const float*, int64_t, const PackedRhs<float>&, float*,
                             int64_t);
template void RowGemm<double>(int64_t, const double*, int64_t, const PackedRhs<double>&,
                              double*, int64_t);

}  // namespace dynbatch::kernels
