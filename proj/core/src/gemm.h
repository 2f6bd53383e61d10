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

// Row-invariant matrix product. Every output element is the chain
//   acc = 0; acc = fma(a[i][p], b[p][j], acc) for p = 0 .. k-1,
// so a row's result does not depend on how many rows share the call or where
// the row sits in it. Batched and one-at-a-time evaluation agree bit for bit.

#ifndef DYNBATCH_SRC_GEMM_H_
#define DYNBATCH_SRC_GEMM_H_

#include <cstdint>
#include <vector>

namespace dynbatch::kernels {

// Right-hand side copied into column panels of kPanelWidth values, each
// stored as k contiguous rows and zero-padded past n. The panels live in
// caller-owned storage so repeated packing reuses one allocation.
template <typename T>
class PackedRhs {
 public:
  static constexpr int64_t kPanelWidth = 192 / sizeof(T);

  // `storage` is resized as needed and must outlive this object.
  PackedRhs(const T* b, int64_t k, int64_t n, int64_t ldb, std::vector<T>& storage);

  int64_t k() const { return k_; }
  int64_t n() const { return n_; }
  int64_t num_panels() const { return (n_ + kPanelWidth - 1) / kPanelWidth; }
  const T* panel(int64_t p) const { return base_ + p * k_ * kPanelWidth; }

 private:
  int64_t k_;
  int64_t n_;
  T* base_;  // 64-byte aligned start inside the storage
};

// Row count from which RowGemm packs the right-hand side.
inline constexpr int64_t kPackRows = 12;

// out (m x n) = a (m x k) * b (k x n); row-major with leading dimensions.
template <typename T>
void RowGemm(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b,
             int64_t ldb, T* out, int64_t ldo);

template <typename T>
void RowGemm(int64_t m, const T* a, int64_t lda, const PackedRhs<T>& b, T* out,
             int64_t ldo);

}  // namespace dynbatch::kernels

#endif  // DYNBATCH_SRC_GEMM_H_
