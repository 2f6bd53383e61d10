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

#include "dynbatch/kernels.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gemm.h"

namespace dynbatch::kernels {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;

[[noreturn]] void ShapeMismatch(std::string_view what, const Tensor& a,
                                const Tensor& b) {
  throw Error(ErrorCode::kShape,
              std::string(what) + ": " + std::string(DTypeName(a.dtype())) +
                  a.shape().ToString() + " vs " +
                  std::string(DTypeName(b.dtype())) + b.shape().ToString());
}

void RequireSame(std::string_view what, const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype()) {
    throw Error(ErrorCode::kType, std::string(what) + ": dtype " +
                                      std::string(DTypeName(a.dtype())) +
                                      " vs " +
                                      std::string(DTypeName(b.dtype())));
  }
  if (a.shape() != b.shape()) ShapeMismatch(what, a, b);
}

void RequireRank(std::string_view what, const Tensor& x, size_t rank) {
  if (x.shape().rank() != rank) {
    throw Error(ErrorCode::kShape, std::string(what) + ": expected rank " +
                                       std::to_string(rank) + ", got " +
                                       x.shape().ToString());
  }
}

void CheckIndex(std::string_view what, int32_t i, int64_t rows) {
  if (i < 0 || i >= rows) {
    throw Error(ErrorCode::kIndex, std::string(what) + ": row index " +
                                       std::to_string(i) + " out of range [0, " +
                                       std::to_string(rows) + ")");
  }
}

template <typename T>
T Sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

std::string_view BinaryKindName(BinaryKind kind) {
  switch (kind) {
    case BinaryKind::kAdd: return "add";
    case BinaryKind::kSub: return "sub";
    case BinaryKind::kMul: return "mul";
    case BinaryKind::kDiv: return "div";
    case BinaryKind::kMax: return "max";
  }
  return "?";
}

std::string_view UnaryKindName(UnaryKind kind) {
  switch (kind) {
    case UnaryKind::kExp: return "exp";
    case UnaryKind::kTanh: return "tanh";
    case UnaryKind::kSigmoid: return "sigmoid";
    case UnaryKind::kRelu: return "relu";
    case UnaryKind::kNeg: return "neg";
  }
  return "?";
}

Tensor ConcatRows(std::span<const Tensor> inputs) {
  if (inputs.empty()) {
    throw Error(ErrorCode::kContract, "ConcatRows: empty input list");
  }
  const Tensor& first = inputs.front();
  if (first.shape().rank() == 0) {
    throw Error(ErrorCode::kShape, "ConcatRows: scalar operand");
  }
  const Shape trailing = first.shape().Trailing();
  int64_t rows = 0;
  for (const Tensor& t : inputs) {
    if (t.dtype() != first.dtype()) {
      throw Error(ErrorCode::kType, "ConcatRows: mixed dtypes");
    }
    if (t.shape().rank() == 0 || t.shape().Trailing() != trailing) {
      // Rows of one concatenation must share a tensor type.
      throw Error(ErrorCode::kType, "ConcatRows: row type " + t.shape().ToString() +
                                        " differs from " + first.shape().ToString());
    }
    rows += t.rows();
  }
  Tensor out(first.dtype(), trailing.WithLeading(rows));
  DispatchDType(first.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto dst = out.mutable_data<T>().begin();
    for (const Tensor& t : inputs) {
      auto src = t.data<T>();
      dst = std::copy(src.begin(), src.end(), dst);
    }
  });
  return out;
}

std::vector<Tensor> SplitRows(const Tensor& x, std::span<const int64_t> counts) {
  std::vector<Tensor> out;
  out.reserve(counts.size());
  int64_t begin = 0;
  for (int64_t c : counts) {
    out.push_back(x.SliceRows(begin, c));
    begin += c;
  }
  if (begin != x.rows()) {
    throw Error(ErrorCode::kShape, "SplitRows: counts sum to " +
                                       std::to_string(begin) + ", tensor has " +
                                       std::to_string(x.rows()) + " rows");
  }
  return out;
}

Tensor GatherRows(const Tensor& x, std::span<const int32_t> idx) {
  if (x.shape().rank() == 0) {
    throw Error(ErrorCode::kShape, "GatherRows: scalar operand");
  }
  const int64_t rows = x.rows();
  const int64_t width = x.row_size();
  Tensor out = Tensor::Uninitialized(x.dtype(), x.shape().Trailing().WithLeading(
                            static_cast<int64_t>(idx.size())));
  DispatchDType(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = x.data<T>();
    auto dst = out.mutable_data<T>();
    for (size_t k = 0; k < idx.size(); ++k) {
      CheckIndex("GatherRows", idx[k], rows);
      std::copy_n(src.begin() + idx[k] * width, width,
                  dst.begin() + static_cast<int64_t>(k) * width);
    }
  });
  return out;
}

void ScatterAddRowsInto(const Tensor& grad, std::span<const int32_t> idx,
                        Tensor& out) {
  if (grad.dtype() != out.dtype()) {
    throw Error(ErrorCode::kType, "ScatterAddRows: dtype mismatch");
  }
  if (grad.rows() != static_cast<int64_t>(idx.size()) ||
      grad.row_size() != out.row_size()) {
    ShapeMismatch("ScatterAddRows", grad, out);
  }
  const int64_t rows = out.rows();
  const int64_t width = out.row_size();
  DispatchDType(out.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = grad.data<T>();
    auto dst = out.mutable_data<T>();
    for (size_t k = 0; k < idx.size(); ++k) {
      CheckIndex("ScatterAddRows", idx[k], rows);
      T* d = dst.data() + idx[k] * width;
      const T* s = src.data() + static_cast<int64_t>(k) * width;
      for (int64_t j = 0; j < width; ++j) d[j] += s[j];
    }
  });
}

Tensor ScatterAddRows(const Tensor& grad, std::span<const int32_t> idx,
                      int64_t out_rows) {
  if (grad.shape().rank() == 0) {
    throw Error(ErrorCode::kShape, "ScatterAddRows: scalar operand");
  }
  Tensor out(grad.dtype(), grad.shape().Trailing().WithLeading(out_rows));
  ScatterAddRowsInto(grad, idx, out);
  return out;
}

Tensor MatMul(const Tensor& a, const Tensor& b, bool transpose_a,
              bool transpose_b) {
  RequireRank("MatMul", a, 2);
  RequireRank("MatMul", b, 2);
  if (a.dtype() != b.dtype()) {
    throw Error(ErrorCode::kType, "MatMul: dtype mismatch");
  }
  const int64_t m = transpose_a ? a.shape().dim(1) : a.shape().dim(0);
  const int64_t k = transpose_a ? a.shape().dim(0) : a.shape().dim(1);
  const int64_t k2 = transpose_b ? b.shape().dim(1) : b.shape().dim(0);
  const int64_t n = transpose_b ? b.shape().dim(0) : b.shape().dim(1);
  if (k != k2) ShapeMismatch("MatMul inner dimensions", a, b);
  Tensor out(a.dtype(), Shape{m, n});
  DispatchFloating(a.dtype(), "MatMul", [&](auto tag) {
    using T = decltype(tag);
    ConstMatrixMap<T> ma(a.data<T>().data(), a.shape().dim(0), a.shape().dim(1));
    ConstMatrixMap<T> mb(b.data<T>().data(), b.shape().dim(0), b.shape().dim(1));
    MatrixMap<T> mo(out.mutable_data<T>().data(), m, n);
    if (m == 0 || n == 0) return;
    if (!transpose_a && !transpose_b) {
      RowGemm<T>(m, n, k, a.data<T>().data(), k, b.data<T>().data(), n,
                 out.mutable_data<T>().data(), n);
    } else if (transpose_a && !transpose_b) {
      mo.noalias() = ma.transpose() * mb;
    } else if (!transpose_a && transpose_b) {
      mo.noalias() = ma * mb.transpose();
    } else {
      mo.noalias() = ma.transpose() * mb.transpose();
    }
  });
  return out;
}

MatMulGrads MatMulBackward(const Tensor& a, const Tensor& w, const Tensor& dy) {
  return MatMulGrads{MatMul(dy, w, false, true), MatMul(a, dy, true, false)};
}

Tensor EwBinary(BinaryKind kind, const Tensor& a, const Tensor& b) {
  RequireSame(BinaryKindName(kind), a, b);
  Tensor out(a.dtype(), a.shape());
  DispatchDType(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = a.data<T>();
    auto y = b.data<T>();
    auto o = out.mutable_data<T>();
    const size_t n = o.size();
    switch (kind) {
      case BinaryKind::kAdd:
        for (size_t i = 0; i < n; ++i) o[i] = x[i] + y[i];
        break;
      case BinaryKind::kSub:
        for (size_t i = 0; i < n; ++i) o[i] = x[i] - y[i];
        break;
      case BinaryKind::kMul:
        for (size_t i = 0; i < n; ++i) o[i] = x[i] * y[i];
        break;
      case BinaryKind::kDiv:
        if constexpr (std::is_same_v<T, int32_t>) {
          for (size_t i = 0; i < n; ++i) {
            if (y[i] == 0) {
              throw Error(ErrorCode::kContract, "integer division by zero");
            }
            o[i] = x[i] / y[i];
          }
        } else {
          for (size_t i = 0; i < n; ++i) o[i] = x[i] / y[i];
        }
        break;
      case BinaryKind::kMax:
        for (size_t i = 0; i < n; ++i) o[i] = std::max(x[i], y[i]);
        break;
    }
  });
  return out;
}

std::pair<Tensor, Tensor> EwBinaryBackward(BinaryKind kind, const Tensor& a,
                                           const Tensor& b, const Tensor& dy) {
  RequireSame(BinaryKindName(kind), a, b);
  RequireSame(BinaryKindName(kind), a, dy);
  Tensor da(a.dtype(), a.shape());
  Tensor db(a.dtype(), a.shape());
  DispatchFloating(a.dtype(), BinaryKindName(kind), [&](auto tag) {
    using T = decltype(tag);
    auto x = a.data<T>();
    auto y = b.data<T>();
    auto g = dy.data<T>();
    auto gx = da.mutable_data<T>();
    auto gy = db.mutable_data<T>();
    for (size_t i = 0; i < g.size(); ++i) {
      switch (kind) {
        case BinaryKind::kAdd:
          gx[i] = g[i];
          gy[i] = g[i];
          break;
        case BinaryKind::kSub:
          gx[i] = g[i];
          gy[i] = -g[i];
          break;
        case BinaryKind::kMul:
          gx[i] = g[i] * y[i];
          gy[i] = g[i] * x[i];
          break;
        case BinaryKind::kDiv:
          gx[i] = g[i] / y[i];
          gy[i] = -g[i] * x[i] / (y[i] * y[i]);
          break;
        case BinaryKind::kMax:
          // Ties route the gradient to the first operand.
          if (x[i] >= y[i]) {
            gx[i] = g[i];
            gy[i] = 0;
          } else {
            gx[i] = 0;
            gy[i] = g[i];
          }
          break;
      }
    }
  });
  return {std::move(da), std::move(db)};
}

Tensor EwUnary(UnaryKind kind, const Tensor& x) {
  Tensor out(x.dtype(), x.shape());
  DispatchFloating(x.dtype(), UnaryKindName(kind), [&](auto tag) {
    using T = decltype(tag);
    auto in = x.data<T>();
    auto o = out.mutable_data<T>();
    const size_t n = o.size();
    switch (kind) {
      case UnaryKind::kExp:
        for (size_t i = 0; i < n; ++i) o[i] = std::exp(in[i]);
        break;
      case UnaryKind::kTanh:
        for (size_t i = 0; i < n; ++i) o[i] = std::tanh(in[i]);
        break;
      case UnaryKind::kSigmoid:
        for (size_t i = 0; i < n; ++i) o[i] = Sigmoid(in[i]);
        break;
      case UnaryKind::kRelu:
        for (size_t i = 0; i < n; ++i) o[i] = in[i] > 0 ? in[i] : T(0);
        break;
      case UnaryKind::kNeg:
        for (size_t i = 0; i < n; ++i) o[i] = -in[i];
        break;
    }
  });
  return out;
}

Tensor EwUnaryBackward(UnaryKind kind, const Tensor& x, const Tensor& y,
                       const Tensor& dy) {
  RequireSame(UnaryKindName(kind), x, dy);
  RequireSame(UnaryKindName(kind), y, dy);
  Tensor dx(x.dtype(), x.shape());
  DispatchFloating(x.dtype(), UnaryKindName(kind), [&](auto tag) {
    using T = decltype(tag);
    auto in = x.data<T>();
    auto out = y.data<T>();
    auto g = dy.data<T>();
    auto o = dx.mutable_data<T>();
    const size_t n = o.size();
    switch (kind) {
      case UnaryKind::kExp:
        for (size_t i = 0; i < n; ++i) o[i] = g[i] * out[i];
        break;
      case UnaryKind::kTanh:
        for (size_t i = 0; i < n; ++i) o[i] = g[i] * (T(1) - out[i] * out[i]);
        break;
      case UnaryKind::kSigmoid:
        for (size_t i = 0; i < n; ++i) o[i] = g[i] * out[i] * (T(1) - out[i]);
        break;
      case UnaryKind::kRelu:
        for (size_t i = 0; i < n; ++i) o[i] = in[i] > 0 ? g[i] : T(0);
        break;
      case UnaryKind::kNeg:
        for (size_t i = 0; i < n; ++i) o[i] = -g[i];
        break;
    }
  });
  return dx;
}

namespace {

struct AxisSplit {
  int64_t outer = 1;
  int64_t extent = 1;
  int64_t inner = 1;
};

AxisSplit SplitAtAxis(const Shape& shape, int axis) {
  if (axis < 0 || static_cast<size_t>(axis) >= shape.rank()) {
    throw Error(ErrorCode::kIndex, "axis " + std::to_string(axis) +
                                       " invalid for shape " + shape.ToString());
  }
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape.dim(i);
  s.extent = shape.dim(axis);
  for (size_t i = axis + 1; i < shape.rank(); ++i) s.inner *= shape.dim(i);
  return s;
}

Shape DropAxis(const Shape& shape, int axis) {
  std::vector<int64_t> dims = shape.dims();
  dims.erase(dims.begin() + axis);
  return Shape(std::move(dims));
}

}  // namespace

Tensor ReduceSum(const Tensor& x, int axis) {
  const AxisSplit s = SplitAtAxis(x.shape(), axis);
  Tensor out(x.dtype(), DropAxis(x.shape(), axis));
  DispatchDType(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto in = x.data<T>();
    auto o = out.mutable_data<T>();
    for (int64_t a = 0; a < s.outer; ++a) {
      for (int64_t k = 0; k < s.extent; ++k) {
        const T* src = in.data() + (a * s.extent + k) * s.inner;
        T* dst = o.data() + a * s.inner;
        for (int64_t c = 0; c < s.inner; ++c) dst[c] += src[c];
      }
    }
  });
  return out;
}

Tensor ReduceSumBackward(const Tensor& dy, const Shape& input_shape, int axis) {
  const AxisSplit s = SplitAtAxis(input_shape, axis);
  if (dy.shape() != DropAxis(input_shape, axis)) {
    throw Error(ErrorCode::kShape, "ReduceSumBackward: gradient shape " +
                                       dy.shape().ToString() +
                                       " does not match input " +
                                       input_shape.ToString());
  }
  Tensor dx(dy.dtype(), input_shape);
  DispatchDType(dy.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto g = dy.data<T>();
    auto o = dx.mutable_data<T>();
    for (int64_t a = 0; a < s.outer; ++a) {
      for (int64_t k = 0; k < s.extent; ++k) {
        std::copy_n(g.data() + a * s.inner, s.inner,
                    o.data() + (a * s.extent + k) * s.inner);
      }
    }
  });
  return dx;
}

namespace {

void CheckCrossEntropyArgs(const Tensor& logits, const Tensor& labels) {
  RequireRank("SoftmaxCrossEntropy logits", logits, 2);
  RequireRank("SoftmaxCrossEntropy labels", labels, 1);
  if (labels.dtype() != DType::kInt32) {
    throw Error(ErrorCode::kType, "SoftmaxCrossEntropy: labels must be i32");
  }
  if (labels.shape().dim(0) != logits.shape().dim(0)) {
    ShapeMismatch("SoftmaxCrossEntropy", logits, labels);
  }
  const int64_t classes = logits.shape().dim(1);
  for (int32_t label : labels.data<int32_t>()) {
    if (label < 0 || label >= classes) {
      throw Error(ErrorCode::kIndex, "SoftmaxCrossEntropy: label " +
                                         std::to_string(label) +
                                         " out of range [0, " +
                                         std::to_string(classes) + ")");
    }
  }
}

}  // namespace

Tensor SoftmaxCrossEntropy(const Tensor& logits, const Tensor& labels) {
  CheckCrossEntropyArgs(logits, labels);
  const int64_t rows = logits.shape().dim(0);
  const int64_t classes = logits.shape().dim(1);
  Tensor out(logits.dtype(), Shape{rows});
  DispatchFloating(logits.dtype(), "SoftmaxCrossEntropy", [&](auto tag) {
    using T = decltype(tag);
    auto z = logits.data<T>();
    auto lab = labels.data<int32_t>();
    auto o = out.mutable_data<T>();
    for (int64_t r = 0; r < rows; ++r) {
      const T* row = z.data() + r * classes;
      const T mx = *std::max_element(row, row + classes);
      T sum = 0;
      for (int64_t c = 0; c < classes; ++c) sum += std::exp(row[c] - mx);
      o[r] = std::log(sum) + mx - row[lab[r]];
    }
  });
  return out;
}

Tensor SoftmaxCrossEntropyBackward(const Tensor& logits, const Tensor& labels,
                                   const Tensor& dloss) {
  CheckCrossEntropyArgs(logits, labels);
  const int64_t rows = logits.shape().dim(0);
  const int64_t classes = logits.shape().dim(1);
  Tensor dz(logits.dtype(), logits.shape());
  DispatchFloating(logits.dtype(), "SoftmaxCrossEntropy", [&](auto tag) {
    using T = decltype(tag);
    auto z = logits.data<T>();
    auto lab = labels.data<int32_t>();
    auto g = dloss.data<T>();
    auto o = dz.mutable_data<T>();
    for (int64_t r = 0; r < rows; ++r) {
      const T* row = z.data() + r * classes;
      T* drow = o.data() + r * classes;
      const T mx = *std::max_element(row, row + classes);
      T sum = 0;
      for (int64_t c = 0; c < classes; ++c) {
        drow[c] = std::exp(row[c] - mx);
        sum += drow[c];
      }
      for (int64_t c = 0; c < classes; ++c) {
        drow[c] = g[r] * (drow[c] / sum - (c == lab[r] ? T(1) : T(0)));
      }
    }
  });
  return dz;
}

Tensor ConcatColumns(std::span<const Tensor> inputs) {
  if (inputs.empty()) {
    throw Error(ErrorCode::kContract, "ConcatColumns: empty input list");
  }
  const Tensor& first = inputs.front();
  int64_t width = 0;
  for (const Tensor& t : inputs) {
    RequireRank("ConcatColumns", t, 2);
    if (t.dtype() != first.dtype()) {
      throw Error(ErrorCode::kType, "ConcatColumns: mixed dtypes");
    }
    if (t.shape().dim(0) != first.shape().dim(0)) {
      ShapeMismatch("ConcatColumns", first, t);
    }
    width += t.shape().dim(1);
  }
  const int64_t rows = first.shape().dim(0);
  Tensor out(first.dtype(), Shape{rows, width});
  DispatchDType(first.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto o = out.mutable_data<T>();
    int64_t col = 0;
    for (const Tensor& t : inputs) {
      const int64_t w = t.shape().dim(1);
      auto src = t.data<T>();
      for (int64_t r = 0; r < rows; ++r) {
        std::copy_n(src.data() + r * w, w, o.data() + r * width + col);
      }
      col += w;
    }
  });
  return out;
}

std::vector<Tensor> SplitColumns(const Tensor& x,
                                 std::span<const int64_t> widths) {
  RequireRank("SplitColumns", x, 2);
  const int64_t rows = x.shape().dim(0);
  const int64_t width = x.shape().dim(1);
  int64_t total = 0;
  for (int64_t w : widths) total += w;
  if (total != width) {
    throw Error(ErrorCode::kShape, "SplitColumns: widths sum to " +
                                       std::to_string(total) + ", tensor has " +
                                       std::to_string(width) + " columns");
  }
  std::vector<Tensor> out;
  out.reserve(widths.size());
  int64_t col = 0;
  for (int64_t w : widths) {
    Tensor piece(x.dtype(), Shape{rows, w});
    DispatchDType(x.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto src = x.data<T>();
      auto dst = piece.mutable_data<T>();
      for (int64_t r = 0; r < rows; ++r) {
        std::copy_n(src.data() + r * width + col, w, dst.data() + r * w);
      }
    });
    out.push_back(std::move(piece));
    col += w;
  }
  return out;
}

Tensor BroadcastColumns(const Tensor& x, int64_t width) {
  RequireRank("BroadcastColumns", x, 2);
  if (x.shape().dim(1) != 1) {
    throw Error(ErrorCode::kShape, "BroadcastColumns: expected (b, 1), got " +
                                       x.shape().ToString());
  }
  const int64_t rows = x.shape().dim(0);
  Tensor out(x.dtype(), Shape{rows, width});
  DispatchDType(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = x.data<T>();
    auto dst = out.mutable_data<T>();
    for (int64_t r = 0; r < rows; ++r) {
      std::fill_n(dst.data() + r * width, width, src[r]);
    }
  });
  return out;
}

Tensor AddRowVector(const Tensor& x, const Tensor& bias) {
  RequireRank("AddRowVector", x, 2);
  RequireRank("AddRowVector bias", bias, 1);
  if (x.dtype() != bias.dtype() || bias.shape().dim(0) != x.shape().dim(1)) {
    ShapeMismatch("AddRowVector", x, bias);
  }
  Tensor out = x;
  const int64_t rows = x.shape().dim(0);
  const int64_t width = x.shape().dim(1);
  DispatchDType(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto b = bias.data<T>();
    auto o = out.mutable_data<T>();
    for (int64_t r = 0; r < rows; ++r) {
      T* row = o.data() + r * width;
      for (int64_t c = 0; c < width; ++c) row[c] += b[c];
    }
  });
  return out;
}

void AddInto(Tensor& acc, const Tensor& x) {
  if (acc.dtype() != x.dtype() || acc.num_elements() != x.num_elements()) {
    ShapeMismatch("AddInto", acc, x);
  }
  DispatchDType(acc.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = x.data<T>();
    auto dst = acc.mutable_data<T>();
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  });
}

Tensor Scale(const Tensor& x, double factor) {
  Tensor out = x;
  DispatchFloating(x.dtype(), "Scale", [&](auto tag) {
    using T = decltype(tag);
    for (T& v : out.mutable_data<T>()) v = static_cast<T>(v * factor);
  });
  return out;
}

}  // namespace dynbatch::kernels
