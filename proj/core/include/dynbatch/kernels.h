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

// Batched dense kernels and their adjoints. Every kernel is a pure function
// of its arguments; the leading axis is the batch. No kernel broadcasts
// implicitly: operands must agree in dtype and shape unless stated otherwise.

#ifndef DYNBATCH_KERNELS_H_
#define DYNBATCH_KERNELS_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dynbatch/tensor.h"

namespace dynbatch::kernels {

// Row concatenation along the leading axis, rows in argument order.
Tensor ConcatRows(std::span<const Tensor> inputs);
// Inverse of ConcatRows: splits x into pieces with the given row counts.
std::vector<Tensor> SplitRows(const Tensor& x, std::span<const int64_t> counts);

// out[k] = x[idx[k]]. Duplicate indices are allowed.
Tensor GatherRows(const Tensor& x, std::span<const int32_t> idx);
// Adjoint of GatherRows: zeros(out_rows, ...) with out[idx[k]] += grad[k].
Tensor ScatterAddRows(const Tensor& grad, std::span<const int32_t> idx,
                      int64_t out_rows);
// In-place form used by the runtime to accumulate into a state gradient.
void ScatterAddRowsInto(const Tensor& grad, std::span<const int32_t> idx,
                        Tensor& out);

// (b, n) x (n, m) -> (b, m), with optional transposition of either operand.
// Without transposition every output element is the ascending fused
// multiply-add chain over n, so each row is independent of the batch size.
Tensor MatMul(const Tensor& a, const Tensor& b, bool transpose_a = false,
              bool transpose_b = false);

struct MatMulGrads {
  Tensor da;  // dY * W^T
  Tensor dw;  // A^T * dY
};
MatMulGrads MatMulBackward(const Tensor& a, const Tensor& w, const Tensor& dy);

enum class BinaryKind { kAdd, kSub, kMul, kDiv, kMax };
enum class UnaryKind { kExp, kTanh, kSigmoid, kRelu, kNeg };

std::string_view BinaryKindName(BinaryKind kind);
std::string_view UnaryKindName(UnaryKind kind);

// Division by zero follows IEEE semantics; callers that care validate.
Tensor EwBinary(BinaryKind kind, const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> EwBinaryBackward(BinaryKind kind, const Tensor& a,
                                           const Tensor& b, const Tensor& dy);

Tensor EwUnary(UnaryKind kind, const Tensor& x);
// `y` is the forward output (used by exp/tanh/sigmoid).
Tensor EwUnaryBackward(UnaryKind kind, const Tensor& x, const Tensor& y,
                       const Tensor& dy);

// Sums out `axis`; the result has rank - 1.
Tensor ReduceSum(const Tensor& x, int axis);
// Broadcasts dy back along `axis` to `input_shape`.
Tensor ReduceSumBackward(const Tensor& dy, const Shape& input_shape, int axis);

// Per-row -log softmax(logits)[label]; logits (b, n), labels (b) Int32.
Tensor SoftmaxCrossEntropy(const Tensor& logits, const Tensor& labels);
// dlogits = dloss[r] * (softmax - onehot).
Tensor SoftmaxCrossEntropyBackward(const Tensor& logits, const Tensor& labels,
                                   const Tensor& dloss);

// Feature-axis concatenation of rank-2 tensors with equal row counts.
Tensor ConcatColumns(std::span<const Tensor> inputs);
std::vector<Tensor> SplitColumns(const Tensor& x,
                                 std::span<const int64_t> widths);

// (b, 1) -> (b, width), each row repeating its single value.
Tensor BroadcastColumns(const Tensor& x, int64_t width);

// x (b, n) + bias (n) row-wise.
Tensor AddRowVector(const Tensor& x, const Tensor& bias);

// acc += x (same dtype and element count).
void AddInto(Tensor& acc, const Tensor& x);
Tensor Scale(const Tensor& x, double factor);

}  // namespace dynbatch::kernels

#endif  // DYNBATCH_KERNELS_H_
