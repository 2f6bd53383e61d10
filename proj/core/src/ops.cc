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

#include "dynbatch/ops.h"

#include <Eigen/Core>

#include <cmath>
#include <optional>

#include "gemm.h"

namespace dynbatch {
namespace {

using kernels::BinaryKind;
using kernels::UnaryKind;

const Tensor kNoGradient;

// --- elementwise generics ---

class BinaryOp : public Operation {
 public:
  // `broadcast`: -1 none, 0 first operand is [1], 1 second operand is [1].
  BinaryOp(OpSignature sig, BinaryKind kind, int broadcast)
      : Operation(std::move(sig)), kind_(kind), broadcast_(broadcast) {}

  std::vector<Tensor> Forward(std::span<const Tensor> in,
                              const ParameterStore&) const override {
    if (broadcast_ < 0) return {kernels::EwBinary(kind_, in[0], in[1])};
    const Tensor& wide = in[1 - broadcast_];
    Tensor expanded = kernels::BroadcastColumns(in[broadcast_], wide.shape().dim(1));
    return {broadcast_ == 0 ? kernels::EwBinary(kind_, expanded, wide)
                            : kernels::EwBinary(kind_, wide, expanded)};
  }

  std::vector<Tensor> Backward(std::span<const Tensor> in, std::span<const Tensor>,
                               std::span<const Tensor> dy, const ParameterStore&,
                               GradientStore*) const override {
    if (broadcast_ < 0) {
      auto [da, db] = kernels::EwBinaryBackward(kind_, in[0], in[1], dy[0]);
      return {std::move(da), std::move(db)};
    }
    const Tensor& wide = in[1 - broadcast_];
    Tensor expanded = kernels::BroadcastColumns(in[broadcast_], wide.shape().dim(1));
    auto [da, db] = broadcast_ == 0
                        ? kernels::EwBinaryBackward(kind_, expanded, wide, dy[0])
                        : kernels::EwBinaryBackward(kind_, wide, expanded, dy[0]);
    Tensor& narrow = broadcast_ == 0 ? da : db;
    narrow = kernels::ReduceSum(narrow, 1).Reshaped(in[broadcast_].shape());
    return {std::move(da), std::move(db)};
  }

 private:
  BinaryKind kind_;
  int broadcast_;
};

class UnaryOp : public Operation {
 public:
  UnaryOp(OpSignature sig, UnaryKind kind) : Operation(std::move(sig)), kind_(kind) {}

  std::vector<Tensor> Forward(std::span<const Tensor> in,
                              const ParameterStore&) const override {
    return {kernels::EwUnary(kind_, in[0])};
  }

  std::vector<Tensor> Backward(std::span<const Tensor> in, std::span<const Tensor> out,
                               std::span<const Tensor> dy, const ParameterStore&,
                               GradientStore*) const override {
    return {kernels::EwUnaryBackward(kind_, in[0], out[0], dy[0])};
  }

 private:
  UnaryKind kind_;
};

class IdentityOp : public Operation {
 public:
  using Operation::Operation;

  std::vector<Tensor> Forward(std::span<const Tensor> in,
                              const ParameterStore&) const override {
    return {in[0]};
  }
  std::vector<Tensor> Backward(std::span<const Tensor>, std::span<const Tensor>,
                               std::span<const Tensor> dy, const ParameterStore&,
                               GradientStore*) const override {
    return {dy[0]};
  }
};

class SoftmaxCrossEntropyOp : public Operation {
 public:
  using Operation::Operation;

  std::vector<Tensor> Forward(std::span<const Tensor> in,
                              const ParameterStore&) const override {
    return {kernels::SoftmaxCrossEntropy(in[0], in[1])};
  }
  std::vector<Tensor> Backward(std::span<const Tensor> in, std::span<const Tensor>,
                               std::span<const Tensor> dy, const ParameterStore&,
                               GradientStore*) const override {
    return {kernels::SoftmaxCrossEntropyBackward(in[0], in[1], dy[0]), kNoGradient};
  }
};

bool IsVectorOfWidthOne(const TensorType& t) {
  return t.shape == Shape{1};
}

GenericFactory BinaryFactory(BinaryKind kind) {
  return [kind](const std::string& name,
                const BlockType& input) -> std::unique_ptr<Operation> {
    const auto leaves = input.FlattenTensors();
    if (leaves.size() != 2 || leaves[0].dtype != leaves[1].dtype) return nullptr;
    if (leaves[0] == leaves[1]) {
      return std::make_unique<BinaryOp>(OpSignature{name, leaves, {leaves[0]}}, kind, -1);
    }
    // Scalar-against-vector: the [1] operand is broadcast explicitly.
    for (int narrow = 0; narrow < 2; ++narrow) {
      const TensorType& wide = leaves[1 - narrow];
      if (IsVectorOfWidthOne(leaves[narrow]) && wide.shape.rank() == 1) {
        return std::make_unique<BinaryOp>(OpSignature{name, leaves, {wide}}, kind, narrow);
      }
    }
    return nullptr;
  };
}

GenericFactory UnaryFactory(UnaryKind kind) {
  return [kind](const std::string& name,
                const BlockType& input) -> std::unique_ptr<Operation> {
    const auto leaves = input.FlattenTensors();
    if (leaves.size() != 1 || !IsFloating(leaves[0].dtype)) return nullptr;
    return std::make_unique<UnaryOp>(OpSignature{name, leaves, leaves}, kind);
  };
}

// --- parameterized operations ---

class EmbeddingOp : public Operation {
 public:
  EmbeddingOp(const std::string& name, int64_t vocab, int64_t dim, DType dtype,
              std::optional<Tensor> table)
      : Operation(OpSignature{name,
                              {TensorType(DType::kInt32, Shape{})},
                              {TensorType(dtype, Shape{dim})}}),
        vocab_(vocab),
        dim_(dim),
        dtype_(dtype),
        table_(std::move(table)) {}

  std::vector<ParameterSpec> parameters() const override {
    ParameterSpec p{name(), dtype_, Shape{vocab_, dim_}, Initializer::kGlorotUniform, {}};
    if (table_) {
      p.init = Initializer::kGiven;
      p.value = *table_;
    }
    return {p};
  }

  std::vector<Tensor> Forward(std::span<const Tensor> in,
                              const ParameterStore& params) const override {
    return {kernels::GatherRows(params.Get(name()), in[0].data<int32_t>())};
  }

  std::vector<Tensor> Backward(std::span<const Tensor> in, std::span<const Tensor>,
                               std::span<const Tensor> dy, const ParameterStore&,
                               GradientStore* grads) const override {
    grads->Add(name(), kernels::ScatterAddRows(dy[0], in[0].data<int32_t>(), vocab_));
    return {kNoGradient};
  }

 private:
  int64_t vocab_;
  int64_t dim_;
  DType dtype_;
  std::optional<Tensor> table_;
};

class FullyConnectedOp : public Operation {
 public:
  FullyConnectedOp(const std::string& name, int64_t in_dim, int64_t out_dim,
                   std::optional<UnaryKind> activation, DType dtype)
      : Operation(OpSignature{name,
                              {TensorType(dtype, Shape{in_dim})},
                              {TensorType(dtype, Shape{out_dim})}}),
        in_dim_(in_dim),
        out_dim_(out_dim),
        activation_(activation),
        dtype_(dtype),
        weights_(name + "/weights"),
        bias_(name + "/bias") {}

  std::vector<ParameterSpec> parameters() const override {
    return {{weights_, dtype_, Shape{in_dim_, out_dim_}, Initializer::kGlorotUniform, {}},
            {bias_, dtype_, Shape{out_dim_}, Initializer::kZeros, {}}};
  }

  std::vector<Tensor> Forward(std::span<const Tensor> in,
                              const ParameterStore& params) const override {
    Tensor z = kernels::AddRowVector(kernels::MatMul(in[0], params.Get(weights_)),
                                     params.Get(bias_));
    if (activation_) z = kernels::EwUnary(*activation_, z);
    return {std::move(z)};
  }

  std::vector<Tensor> Backward(std::span<const Tensor> in, std::span<const Tensor> out,
                               std::span<const Tensor> dy, const ParameterStore& params,
                               GradientStore* grads) const override {
    // relu, tanh, sigmoid and exp derivatives are all functions of the output.
    Tensor dz = activation_ ? kernels::EwUnaryBackward(*activation_, out[0], out[0], dy[0])
                            : dy[0];
    auto g = kernels::MatMulBackward(in[0], params.Get(weights_), dz);
    grads->Add(weights_, g.dw);
    grads->Add(bias_, kernels::ReduceSum(dz, 0));
    return {std::move(g.da)};
  }

 private:
  int64_t in_dim_;
  int64_t out_dim_;
  std::optional<UnaryKind> activation_;
  DType dtype_;
  std::string weights_;
  std::string bias_;
};

// --- Tree-LSTM ---

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using CMap = Eigen::Map<const Mat<T>>;
template <typename T>
using MMap = Eigen::Map<Mat<T>>;
template <typename T>
using SMap = Eigen::Map<const Mat<T>, 0, Eigen::OuterStride<>>;

template <typename T>
CMap<T> View(const Tensor& t, int64_t rows, int64_t cols) {
  return CMap<T>(t.data<T>().data(), rows, cols);
}

class TreeLstmOp : public Operation {
 public:
  TreeLstmOp(const std::string& name, const TreeLstmOptions& o)
      : Operation(MakeSignature(name, o)),
        o_(o),
        w_name_(name + "/W"),
        u_name_(name + "/U"),
        b_name_(name + "/b") {
    if (o.state_dim <= 0 || o.input_dim < 0 || (o.packed && o.input_dim != 0)) {
      throw Error(ErrorCode::kContract, "invalid Tree-LSTM dimensions for '" + name + "'");
    }
  }

  std::vector<ParameterSpec> parameters() const override {
    const int64_t s = o_.state_dim;
    std::vector<ParameterSpec> p;
    if (o_.input_dim > 0) {
      p.push_back({w_name_, o_.dtype, Shape{o_.input_dim, 4 * s},
                   Initializer::kGlorotUniform, {}});
    }
    p.push_back({u_name_, o_.dtype, Shape{2 * s, 5 * s}, Initializer::kGlorotUniform, {}});
    p.push_back({b_name_, o_.dtype, Shape{4 * s}, Initializer::kZeros, {}});
    return p;
  }

  std::vector<Tensor> Forward(std::span<const Tensor> in,
                              const ParameterStore& params) const override {
    return DispatchFloating(o_.dtype, "TreeLstmCell", [&](auto tag) {
      return ForwardImpl<decltype(tag)>(in, params);
    });
  }

  std::vector<Tensor> Backward(std::span<const Tensor> in, std::span<const Tensor> out,
                               std::span<const Tensor> dy, const ParameterStore& params,
                               GradientStore* grads) const override {
    return DispatchFloating(o_.dtype, "TreeLstmCell", [&](auto tag) {
      return BackwardImpl<decltype(tag)>(in, out, dy, params, grads);
    });
  }

 private:
  // Rows per tile; keeps the gate block of a tile in L1.
  static constexpr int64_t kTile = 16;

  static OpSignature MakeSignature(const std::string& name, const TreeLstmOptions& o) {
    const TensorType state(o.dtype, Shape{o.state_dim});
    if (o.packed) {
      const TensorType both(o.dtype, Shape{2 * o.state_dim});
      return {name, {both, both}, {both}};
    }
    return {name,
            {TensorType(o.dtype, Shape{o.input_dim}), state, state, state, state},
            {state, state}};
  }

  // Children states as strided row blocks: columns of the packed [h;c]
  // inputs or the four separate state inputs.
  template <typename T>
  struct Children {
    SMap<T> hl, cl, hr, cr;
  };

  template <typename T>
  Children<T> ChildrenOf(std::span<const Tensor> in, int64_t row, int64_t rows) const {
    const int64_t s = o_.state_dim;
    auto view = [&](const Tensor& t, int64_t col, int64_t stride) {
      return SMap<T>(t.data<T>().data() + row * stride + col, rows, s,
                     Eigen::OuterStride<>(stride));
    };
    if (o_.packed) {
      return {view(in[0], 0, 2 * s), view(in[0], s, 2 * s), view(in[1], 0, 2 * s),
              view(in[1], s, 2 * s)};
    }
    return {view(in[1], 0, s), view(in[2], 0, s), view(in[3], 0, s), view(in[4], 0, s)};
  }

  // U (2s x 5s), packed once per call when tiles are large enough to reuse it.
  // The packed copy lives in a per-thread buffer; at most one instance is
  // alive per thread, inside one Forward or Backward.
  template <typename T>
  struct RecurrentWeights {
    RecurrentWeights(const Tensor& u_tensor, int64_t s, int64_t batch)
        : u(u_tensor.data<T>().data()), s(s) {
      thread_local std::vector<T> storage;
      if (batch >= kernels::kPackRows) packed.emplace(u, 2 * s, 5 * s, 5 * s, storage);
    }

    // g (rows, 5s) = hh (rows, 2s) * U.
    void Multiply(int64_t rows, const T* hh, T* g) const {
      if (packed && rows >= kernels::kPackRows) {
        kernels::RowGemm<T>(rows, hh, 2 * s, *packed, g, 5 * s);
      } else {
        kernels::RowGemm<T>(rows, 5 * s, 2 * s, hh, 2 * s, u, 5 * s, g, 5 * s);
      }
    }

    const T* u;
    int64_t s;
    std::optional<kernels::PackedRhs<T>> packed;
  };

  // Bias spread over the five gate blocks (f shared by f_L and f_R).
  template <typename T>
  Eigen::Matrix<T, 1, Eigen::Dynamic> GateBias(const ParameterStore& params) const {
    const int64_t s = o_.state_dim;
    auto pb = params.Get(b_name_).data<T>();
    Eigen::Matrix<T, 1, Eigen::Dynamic> bias(5 * s);
    const int64_t src[5] = {0, 1, 1, 2, 3};
    for (int k = 0; k < 5; ++k) {
      std::copy_n(pb.data() + src[k] * s, s, bias.data() + k * s);
    }
    return bias;
  }

  // Activated gates of one tile (rows, 5s): i | f_L | f_R | o | u.
  // `hh` receives [h_L | h_R] for the tile.
  template <typename T, typename C>
  void Gates(std::span<const Tensor> in, const C& ch, int64_t row, int64_t rows,
             const RecurrentWeights<T>& u, const Eigen::Matrix<T, 1, Eigen::Dynamic>& bias,
             const ParameterStore& params, Mat<T>& hh, Mat<T>& g) const {
    const int64_t s = o_.state_dim;
    hh.resize(rows, 2 * s);
    hh.leftCols(s) = ch.hl;
    hh.rightCols(s) = ch.hr;
    g.resize(rows, 5 * s);
    u.Multiply(rows, hh.data(), g.data());
    g.rowwise() += bias;
    if (o_.input_dim > 0) {
      const int64_t e = o_.input_dim;
      const CMap<T> x(in[0].data<T>().data() + row * e, rows, e);
      Mat<T> xw(rows, 4 * s);
      kernels::RowGemm<T>(rows, 4 * s, e, x.data(), e, params.Get(w_name_).data<T>().data(),
                          4 * s, xw.data(), 4 * s);
      const int64_t src[5] = {0, 1, 1, 2, 3};
      for (int k = 0; k < 5; ++k) g.middleCols(k * s, s) += xw.middleCols(src[k] * s, s);
    }
    g.leftCols(4 * s) = g.leftCols(4 * s).array().logistic().matrix();
    g.rightCols(s) = g.rightCols(s).array().tanh().matrix();
  }

  template <typename T>
  std::vector<Tensor> ForwardImpl(std::span<const Tensor> in,
                                  const ParameterStore& params) const {
    const int64_t s = o_.state_dim;
    const int64_t b = in[0].rows();
    const RecurrentWeights<T> u(params.Get(u_name_), s, b);
    const auto bias = GateBias<T>(params);
    std::vector<Tensor> result;
    if (o_.packed) {
      result.push_back(Tensor::Uninitialized(o_.dtype, Shape{b, 2 * s}));
    } else {
      result.push_back(Tensor::Uninitialized(o_.dtype, Shape{b, s}));
      result.push_back(Tensor::Uninitialized(o_.dtype, Shape{b, s}));
    }
    Mat<T> hh, g;
    for (int64_t row = 0; row < b; row += kTile) {
      const int64_t rows = std::min(kTile, b - row);
      const auto ch = ChildrenOf<T>(in, row, rows);
      Gates<T>(in, ch, row, rows, u, bias, params, hh, g);
      auto gate = [&](int k) { return g.middleCols(k * s, s).array(); };
      const auto c =
          (gate(0) * gate(4) + gate(1) * ch.cl.array() + gate(2) * ch.cr.array()).eval();
      if (o_.packed) {
        MMap<T> m(result[0].mutable_data<T>().data() + row * 2 * s, rows, 2 * s);
        m.rightCols(s) = c.matrix();
        m.leftCols(s) = (gate(3) * c.tanh()).matrix();
      } else {
        MMap<T>(result[1].mutable_data<T>().data() + row * s, rows, s) = c.matrix();
        MMap<T>(result[0].mutable_data<T>().data() + row * s, rows, s) =
            (gate(3) * c.tanh()).matrix();
      }
    }
    return result;
  }

  template <typename T>
  std::vector<Tensor> BackwardImpl(std::span<const Tensor> in, std::span<const Tensor> out,
                                   std::span<const Tensor> dy, const ParameterStore& params,
                                   GradientStore* grads) const {
    const int64_t s = o_.state_dim;
    const int64_t e = o_.input_dim;
    const int64_t b = in[0].rows();
    const CMap<T> u = View<T>(params.Get(u_name_), 2 * s, 5 * s);
    const RecurrentWeights<T> uw(params.Get(u_name_), s, b);
    const auto bias = GateBias<T>(params);

    // Gradients of the packed or separate inputs.
    std::vector<Tensor> result;
    if (o_.packed) {
      result.push_back(Tensor::Uninitialized(o_.dtype, Shape{b, 2 * s}));
      result.push_back(Tensor::Uninitialized(o_.dtype, Shape{b, 2 * s}));
    } else {
      result.push_back(Tensor::Uninitialized(o_.dtype, Shape{b, e}));
      for (int k = 0; k < 4; ++k) result.push_back(Tensor::Uninitialized(o_.dtype, Shape{b, s}));
    }
    auto grad_view = [&](int part, int64_t row, int64_t rows) {
      // part: 0 h_L, 1 c_L, 2 h_R, 3 c_R.
      if (o_.packed) {
        Tensor& t = result[part / 2];
        return Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>(
            t.mutable_data<T>().data() + row * 2 * s + (part % 2) * s, rows, s,
            Eigen::OuterStride<>(2 * s));
      }
      return Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>(
          result[1 + part].mutable_data<T>().data() + row * s, rows, s,
          Eigen::OuterStride<>(s));
    };

    const int64_t ow = o_.packed ? 2 * s : s;
    Mat<T> du = Mat<T>::Zero(2 * s, 5 * s);
    Mat<T> dw;
    if (e > 0) dw = Mat<T>::Zero(e, 4 * s);
    Eigen::Matrix<T, 1, Eigen::Dynamic> db = Eigen::Matrix<T, 1, Eigen::Dynamic>::Zero(4 * s);
    Mat<T> hh, g, dg, dxw;
    for (int64_t row = 0; row < b; row += kTile) {
      const int64_t rows = std::min(kTile, b - row);
      const auto ch = ChildrenOf<T>(in, row, rows);
      Gates<T>(in, ch, row, rows, uw, bias, params, hh, g);

      auto strided = [&](const T* p) {
        return SMap<T>(p + row * ow, rows, s, Eigen::OuterStride<>(ow));
      };
      const auto tc =
          strided(out[o_.packed ? 0 : 1].data<T>().data() + (o_.packed ? s : 0))
              .array()
              .tanh()
              .eval();
      const auto dh = strided(dy[0].data<T>().data()).array();
      const auto dc = o_.packed ? strided(dy[0].data<T>().data() + s).array()
                                : strided(dy[1].data<T>().data()).array();
      auto gate = [&](int k) { return g.middleCols(k * s, s).array(); };
      const auto ig = gate(0), fl = gate(1), fr = gate(2), og = gate(3), ug = gate(4);
      const auto dct = (dc + dh * og * (T(1) - tc.square())).eval();

      dg.resize(rows, 5 * s);
      dg.middleCols(0, s) = (dct * ug * ig * (T(1) - ig)).matrix();
      dg.middleCols(s, s) = (dct * ch.cl.array() * fl * (T(1) - fl)).matrix();
      dg.middleCols(2 * s, s) = (dct * ch.cr.array() * fr * (T(1) - fr)).matrix();
      dg.middleCols(3 * s, s) = (dh * tc * og * (T(1) - og)).matrix();
      dg.middleCols(4 * s, s) = (dct * ig * (T(1) - ug.square())).matrix();
      grad_view(1, row, rows) = (dct * fl).matrix();
      grad_view(3, row, rows) = (dct * fr).matrix();

      du.noalias() += hh.transpose() * dg;
      const Mat<T> dhh = dg * u.transpose();
      grad_view(0, row, rows) = dhh.leftCols(s);
      grad_view(2, row, rows) = dhh.rightCols(s);

      // Input-side gradient (rows, 4s): i | f_L + f_R | o | u.
      dxw.resize(rows, 4 * s);
      dxw.middleCols(0, s) = dg.middleCols(0, s);
      dxw.middleCols(s, s) = dg.middleCols(s, s) + dg.middleCols(2 * s, s);
      dxw.middleCols(2 * s, s) = dg.middleCols(3 * s, s);
      dxw.middleCols(3 * s, s) = dg.middleCols(4 * s, s);
      db += dxw.colwise().sum();
      if (e > 0) {
        const CMap<T> x(in[0].data<T>().data() + row * e, rows, e);
        dw.noalias() += x.transpose() * dxw;
        MMap<T>(result[0].mutable_data<T>().data() + row * e, rows, e).noalias() =
            dxw * View<T>(params.Get(w_name_), e, 4 * s).transpose();
      }
    }

    auto add = [&](const std::string& name, const auto& m, Shape shape) {
      Tensor t(o_.dtype, std::move(shape));
      std::copy_n(m.data(), m.size(), t.mutable_data<T>().data());
      grads->Add(name, t);
    };
    add(u_name_, du, Shape{2 * s, 5 * s});
    add(b_name_, db, Shape{4 * s});
    if (e > 0) add(w_name_, dw, Shape{e, 4 * s});
    return result;
  }

  TreeLstmOptions o_;
  std::string w_name_, u_name_, b_name_;
};

}  // namespace

std::unique_ptr<Operation> Embedding(const std::string& name, int64_t vocab,
                                     int64_t dim, DType dtype) {
  return std::make_unique<EmbeddingOp>(name, vocab, dim, dtype, std::nullopt);
}

std::unique_ptr<Operation> Embedding(const std::string& name, Tensor table) {
  if (table.shape().rank() != 2) {
    throw Error(ErrorCode::kShape, "embedding table must be rank 2, got " +
                                       table.shape().ToString());
  }
  const int64_t vocab = table.shape().dim(0);
  const int64_t dim = table.shape().dim(1);
  const DType dtype = table.dtype();
  return std::make_unique<EmbeddingOp>(name, vocab, dim, dtype, std::move(table));
}

std::unique_ptr<Operation> FullyConnected(const std::string& name, int64_t in_dim,
                                          int64_t out_dim,
                                          std::optional<kernels::UnaryKind> activation,
                                          DType dtype) {
  if (!IsFloating(dtype)) {
    throw Error(ErrorCode::kType, "FullyConnected requires a floating dtype");
  }
  return std::make_unique<FullyConnectedOp>(name, in_dim, out_dim, activation, dtype);
}

std::unique_ptr<Operation> TreeLstmCell(const std::string& name,
                                        const TreeLstmOptions& options) {
  return std::make_unique<TreeLstmOp>(name, options);
}

OperationRegistry OperationRegistry::WithBuiltins() {
  OperationRegistry r;
  r.RegisterGeneric("add", BinaryFactory(BinaryKind::kAdd));
  r.RegisterGeneric("sub", BinaryFactory(BinaryKind::kSub));
  r.RegisterGeneric("mul", BinaryFactory(BinaryKind::kMul));
  r.RegisterGeneric("div", BinaryFactory(BinaryKind::kDiv));
  r.RegisterGeneric("max", BinaryFactory(BinaryKind::kMax));
  r.RegisterGeneric("exp", UnaryFactory(UnaryKind::kExp));
  r.RegisterGeneric("tanh", UnaryFactory(UnaryKind::kTanh));
  r.RegisterGeneric("sigmoid", UnaryFactory(UnaryKind::kSigmoid));
  r.RegisterGeneric("relu", UnaryFactory(UnaryKind::kRelu));
  r.RegisterGeneric("neg", UnaryFactory(UnaryKind::kNeg));
  r.RegisterGeneric("identity", [](const std::string& name, const BlockType& input)
                                    -> std::unique_ptr<Operation> {
    const auto leaves = input.FlattenTensors();
    if (leaves.size() != 1) return nullptr;
    return std::make_unique<IdentityOp>(OpSignature{name, leaves, leaves});
  });
  r.RegisterGeneric("softmax_cross_entropy", [](const std::string& name,
                                                const BlockType& input)
                                                 -> std::unique_ptr<Operation> {
    const auto leaves = input.FlattenTensors();
    if (leaves.size() != 2 || leaves[0].shape.rank() != 1 ||
        !IsFloating(leaves[0].dtype) || leaves[1] != TensorType(DType::kInt32, Shape{})) {
      return nullptr;
    }
    return std::make_unique<SoftmaxCrossEntropyOp>(
        OpSignature{name, leaves, {TensorType(leaves[0].dtype, Shape{})}});
  });
  return r;
}

}  // namespace dynbatch
