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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "dynbatch/error.h"
#include "test_util.h"

namespace dynbatch::kernels {
namespace {

using testing::MaxRelErr;
using testing::RandomTensor;

Tensor F64(Shape shape, std::vector<double> v) {
  return Tensor::FromVector<double>(std::move(shape), std::move(v));
}

double Dot(const Tensor& a, const Tensor& b) {
  const auto x = a.ToDoubles();
  const auto y = b.ToDoubles();
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// Central differences of <f(x), w> with respect to x.
Tensor NumericVjp(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                  const Tensor& w, double step = 1e-6) {
  std::vector<double> g(static_cast<size_t>(x.num_elements()));
  auto data = x.mutable_data<double>();
  for (size_t i = 0; i < g.size(); ++i) {
    const double orig = data[i];
    data[i] = orig + step;
    const double up = Dot(f(x), w);
    data[i] = orig - step;
    const double down = Dot(f(x), w);
    data[i] = orig;
    g[i] = (up - down) / (2 * step);
  }
  return Tensor::FromVector<double>(x.shape(), g);
}

TEST(ConcatRowsTest, OrdersRowsByArgument) {
  Tensor a = F64({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = F64({1, 3}, {7, 8, 9});
  std::vector<Tensor> in = {a, b};
  EXPECT_EQ(ConcatRows(in), F64({3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
}

TEST(ConcatRowsTest, SingleInputIsIdentity) {
  std::mt19937_64 rng(1);
  Tensor x = RandomTensor(DType::kFloat32, {4, 2}, rng);
  std::vector<Tensor> in = {x};
  EXPECT_EQ(ConcatRows(in), x);
}

TEST(ConcatRowsTest, SingleRowsStackIntoAColumn) {
  std::vector<Tensor> in = {F64({1, 1}, {1}), F64({1, 1}, {2}), F64({1, 1}, {3})};
  EXPECT_EQ(ConcatRows(in), F64({3, 1}, {1, 2, 3}));
}

TEST(ConcatRowsTest, Errors) {
  std::vector<Tensor> none;
  EXPECT_THROW(ConcatRows(none), Error);
  std::vector<Tensor> mixed = {F64({1, 2}, {1, 2}), F64({1, 3}, {1, 2, 3})};
  try {
    ConcatRows(mixed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kType);
  }
  std::vector<Tensor> dtypes = {F64({1, 2}, {1, 2}),
                                Tensor(DType::kFloat32, Shape{1, 2})};
  EXPECT_THROW(ConcatRows(dtypes), Error);
}

TEST(ConcatRowsTest, SplitInvertsConcat) {
  std::mt19937_64 rng(2);
  std::vector<Tensor> parts = {RandomTensor(DType::kFloat64, {2, 3}, rng),
                               RandomTensor(DType::kFloat64, {5, 3}, rng),
                               RandomTensor(DType::kFloat64, {1, 3}, rng)};
  std::vector<int64_t> counts = {2, 5, 1};
  std::vector<Tensor> back = SplitRows(ConcatRows(parts), counts);
  ASSERT_EQ(back.size(), 3u);
  for (size_t i = 0; i < 3; ++i) EXPECT_EQ(back[i], parts[i]);
}

TEST(GatherRowsTest, Examples) {
  Tensor x = F64({3, 1}, {1, 2, 3});
  std::vector<int32_t> ident = {0, 1, 2};
  EXPECT_EQ(GatherRows(x, ident), x);
  std::vector<int32_t> idx = {2, 0};
  EXPECT_EQ(GatherRows(x, idx), F64({2, 1}, {3, 1}));
  std::vector<int32_t> dup = {0, 0};
  EXPECT_EQ(GatherRows(x, dup), F64({2, 1}, {1, 1}));
  std::vector<int32_t> bad = {3};
  try {
    GatherRows(x, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndex);
  }
}

TEST(ScatterAddRowsTest, Examples) {
  std::vector<int32_t> dup = {0, 0};
  EXPECT_EQ(ScatterAddRows(F64({2, 1}, {1, 10}), dup, 2), F64({2, 1}, {11, 0}));
  std::mt19937_64 rng(3);
  Tensor g = RandomTensor(DType::kFloat64, {4, 2}, rng);
  std::vector<int32_t> ident = {0, 1, 2, 3};
  EXPECT_EQ(ScatterAddRows(g, ident, 4), g);
  std::vector<int32_t> bad = {0, 9};
  EXPECT_THROW(ScatterAddRows(F64({2, 1}, {1, 2}), bad, 2), Error);
}

TEST(ScatterAddRowsTest, AdjointOfGather) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const int k = 1 + static_cast<int>(rng() % 12);
    std::vector<int32_t> idx(k);
    for (int32_t& i : idx) i = static_cast<int32_t>(rng() % n);
    Tensor x = RandomTensor(DType::kFloat64, {n, 3}, rng);
    Tensor y = RandomTensor(DType::kFloat64, {k, 3}, rng);
    const double lhs = Dot(GatherRows(x, idx), y);
    const double rhs = Dot(x, ScatterAddRows(y, idx, n));
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(MatMulTest, Examples) {
  std::mt19937_64 rng(5);
  Tensor x = RandomTensor(DType::kFloat64, {3, 4}, rng);
  Tensor eye(DType::kFloat64, {4, 4});
  for (int i = 0; i < 4; ++i) eye.mutable_data<double>()[i * 4 + i] = 1;
  EXPECT_EQ(MatMul(x, eye), x);
  EXPECT_EQ(MatMul(F64({1, 2}, {1, 2}), F64({2, 1}, {1, 1})), F64({1, 1}, {3}));
  EXPECT_THROW(MatMul(F64({1, 2}, {1, 2}), F64({3, 1}, {1, 1, 1})), Error);
}

TEST(MatMulTest, MatchesTripleLoop) {
  std::mt19937_64 rng(6);
  for (DType dtype : {DType::kFloat32, DType::kFloat64}) {
    Tensor a = RandomTensor(dtype, {7, 5}, rng);
    Tensor w = RandomTensor(dtype, {5, 3}, rng);
    const auto av = a.ToDoubles();
    const auto wv = w.ToDoubles();
    std::vector<double> ref(21, 0.0);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 5; ++k) ref[i * 3 + j] += av[i * 5 + k] * wv[k * 3 + j];
    const double tol = dtype == DType::kFloat32 ? 1e-6 : 1e-12;
    EXPECT_LT(MaxRelErr(MatMul(a, w), Tensor::FromDoubles(dtype, {7, 3}, ref)), tol);
    Tensor at = MatMul(a, Tensor::FromDoubles(dtype, {7, 7}, [] {
                         std::vector<double> e(49, 0.0);
                         for (int i = 0; i < 7; ++i) e[i * 8] = 1;
                         return e;
                       }()), true, false);
    EXPECT_EQ(at.shape(), Shape({5, 7}));
    EXPECT_DOUBLE_EQ(at.ElementAsDouble(1 * 7 + 2), a.ElementAsDouble(2 * 5 + 1));
  }
}

// Every element is fma(a[i][k-1], w[k-1][j], ... fma(a[i][0], w[0][j], 0)).
template <typename T>
std::vector<T> FmaChain(const Tensor& a, const Tensor& w) {
  const int64_t m = a.shape().dim(0), k = a.shape().dim(1), n = w.shape().dim(1);
  auto av = a.data<T>();
  auto wv = w.data<T>();
  std::vector<T> out(static_cast<size_t>(m * n));
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      T acc = 0;
      for (int64_t p = 0; p < k; ++p) acc = std::fma(av[i * k + p], wv[p * n + j], acc);
      out[i * n + j] = acc;
    }
  }
  return out;
}

TEST(MatMulTest, EqualsTheFmaChainBitForBit) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 60; ++trial) {
    const int64_t m = 1 + static_cast<int64_t>(rng() % 40);
    const int64_t k = static_cast<int64_t>(rng() % 70);
    const int64_t n = 1 + static_cast<int64_t>(rng() % 110);
    for (DType dtype : {DType::kFloat32, DType::kFloat64}) {
      const Tensor a = RandomTensor(dtype, {m, k}, rng);
      const Tensor w = RandomTensor(dtype, {k, n}, rng);
      const Tensor got = MatMul(a, w);
      const Tensor want =
          dtype == DType::kFloat32
              ? Tensor::FromVector<float>({m, n}, FmaChain<float>(a, w))
              : Tensor::FromVector<double>({m, n}, FmaChain<double>(a, w));
      ASSERT_EQ(got, want) << m << "x" << k << "x" << n;
    }
  }
}

TEST(MatMulTest, RowsDoNotDependOnTheBatch) {
  std::mt19937_64 rng(62);
  for (int64_t m : {1, 5, 11, 12, 13, 64, 70}) {
    const Tensor a = RandomTensor(DType::kFloat32, {m, 128}, rng);
    const Tensor w = RandomTensor(DType::kFloat32, {128, 320}, rng);
    const Tensor all = MatMul(a, w);
    for (int64_t i = 0; i < m; ++i) {
      ASSERT_EQ(all.SliceRows(i, 1), MatMul(a.SliceRows(i, 1), w)) << m << " " << i;
    }
  }
}

TEST(MatMulTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  Tensor a = RandomTensor(DType::kFloat64, {4, 3}, rng);
  Tensor w = RandomTensor(DType::kFloat64, {3, 2}, rng);
  Tensor dy = RandomTensor(DType::kFloat64, {4, 2}, rng);
  MatMulGrads g = MatMulBackward(a, w, dy);
  EXPECT_LT(MaxRelErr(g.da, NumericVjp([&](const Tensor& x) { return MatMul(x, w); }, a, dy)),
            1e-6);
  EXPECT_LT(MaxRelErr(g.dw, NumericVjp([&](const Tensor& x) { return MatMul(a, x); }, w, dy)),
            1e-6);
}

TEST(EwBinaryTest, Examples) {
  std::mt19937_64 rng(8);
  Tensor x = RandomTensor(DType::kFloat64, {2, 3}, rng);
  EXPECT_EQ(EwBinary(BinaryKind::kAdd, x, Tensor(DType::kFloat64, {2, 3})), x);
  EXPECT_EQ(EwBinary(BinaryKind::kDiv, F64({2}, {2, 4}), F64({2}, {2, 2})),
            F64({2}, {1, 2}));
  EXPECT_EQ(EwBinary(BinaryKind::kMax, F64({2}, {1, 5}), F64({2}, {3, 2})),
            F64({2}, {3, 5}));
  EXPECT_THROW(EwBinary(BinaryKind::kAdd, F64({2}, {1, 2}), F64({3}, {1, 2, 3})), Error);
  Tensor inf = EwBinary(BinaryKind::kDiv, F64({1}, {1}), F64({1}, {0}));
  EXPECT_TRUE(std::isinf(inf.ElementAsDouble(0)));
}

TEST(EwBinaryTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  for (BinaryKind kind : {BinaryKind::kAdd, BinaryKind::kSub, BinaryKind::kMul,
                          BinaryKind::kDiv, BinaryKind::kMax}) {
    Tensor a = RandomTensor(DType::kFloat64, {3, 4}, rng);
    Tensor b = RandomTensor(DType::kFloat64, {3, 4}, rng);
    if (kind == BinaryKind::kDiv) {
      for (double& v : b.mutable_data<double>()) v += v < 0 ? -1.0 : 1.0;
    }
    Tensor dy = RandomTensor(DType::kFloat64, {3, 4}, rng);
    auto [da, db] = EwBinaryBackward(kind, a, b, dy);
    EXPECT_LT(MaxRelErr(da, NumericVjp([&](const Tensor& x) { return EwBinary(kind, x, b); },
                                       a, dy)),
              1e-6)
        << BinaryKindName(kind);
    EXPECT_LT(MaxRelErr(db, NumericVjp([&](const Tensor& x) { return EwBinary(kind, a, x); },
                                       b, dy)),
              1e-6)
        << BinaryKindName(kind);
  }
}

TEST(EwUnaryTest, Examples) {
  EXPECT_EQ(EwUnary(UnaryKind::kRelu, F64({2}, {-1, 2})), F64({2}, {0, 2}));
  EXPECT_EQ(EwUnary(UnaryKind::kExp, Tensor(DType::kFloat64, {3})), F64({3}, {1, 1, 1}));
  EXPECT_EQ(EwUnary(UnaryKind::kNeg, F64({2}, {1, -2})), F64({2}, {-1, 2}));
  EXPECT_DOUBLE_EQ(EwUnary(UnaryKind::kSigmoid, F64({1}, {0})).ElementAsDouble(0), 0.5);
  EXPECT_THROW(EwUnary(UnaryKind::kExp, Tensor(DType::kInt32, {2})), Error);
}

TEST(EwUnaryTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(10);
  for (UnaryKind kind : {UnaryKind::kExp, UnaryKind::kTanh, UnaryKind::kSigmoid,
                         UnaryKind::kRelu, UnaryKind::kNeg}) {
    Tensor x = RandomTensor(DType::kFloat64, {4, 3}, rng, 2.0);
    // Keep relu away from its kink.
    for (double& v : x.mutable_data<double>()) {
      if (std::abs(v) < 0.1) v += 0.2;
    }
    Tensor dy = RandomTensor(DType::kFloat64, {4, 3}, rng);
    Tensor y = EwUnary(kind, x);
    Tensor g = EwUnaryBackward(kind, x, y, dy);
    EXPECT_LT(MaxRelErr(g, NumericVjp([&](const Tensor& t) { return EwUnary(kind, t); }, x, dy)),
              1e-6)
        << UnaryKindName(kind);
  }
}

TEST(ReduceSumTest, Examples) {
  EXPECT_EQ(ReduceSum(F64({2, 3}, {1, 1, 1, 1, 1, 1}), 1), F64({2}, {3, 3}));
  Tensor x = F64({2, 1}, {4, 5});
  EXPECT_EQ(ReduceSum(x, 1), F64({2}, {4, 5}));
  EXPECT_THROW(ReduceSum(x, 2), Error);
}

TEST(ReduceSumTest, RowOrderDoesNotMatter) {
  std::mt19937_64 rng(11);
  Tensor x = RandomTensor(DType::kFloat64, {9, 4}, rng);
  std::vector<int32_t> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  EXPECT_LT(MaxRelErr(ReduceSum(GatherRows(x, perm), 0), ReduceSum(x, 0)), 1e-12);
}

TEST(ReduceSumTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  Tensor x = RandomTensor(DType::kFloat64, {3, 4, 2}, rng);
  for (int axis = 0; axis < 3; ++axis) {
    Tensor y = ReduceSum(x, axis);
    Tensor dy = RandomTensor(DType::kFloat64, y.shape(), rng);
    Tensor g = ReduceSumBackward(dy, x.shape(), axis);
    EXPECT_LT(MaxRelErr(g, NumericVjp([&](const Tensor& t) { return ReduceSum(t, axis); }, x,
                                      dy)),
              1e-6);
  }
}

TEST(SoftmaxCrossEntropyTest, Examples) {
  Tensor labels = Tensor::FromVector<int32_t>({2}, {0, 2});
  Tensor uniform(DType::kFloat64, {2, 3});
  Tensor loss = SoftmaxCrossEntropy(uniform, labels);
  EXPECT_NEAR(loss.ElementAsDouble(0), std::log(3.0), 1e-12);
  EXPECT_NEAR(loss.ElementAsDouble(1), std::log(3.0), 1e-12);

  // -log sigmoid(20) = log(1 + exp(-20)).
  Tensor l = SoftmaxCrossEntropy(F64({1, 2}, {10, -10}), Tensor::FromVector<int32_t>({1}, {0}));
  EXPECT_NEAR(l.ElementAsDouble(0), std::log1p(std::exp(-20.0)), 1e-15);
  EXPECT_LT(l.ElementAsDouble(0), 3e-9);

  EXPECT_THROW(SoftmaxCrossEntropy(uniform, Tensor::FromVector<int32_t>({2}, {0, 3})), Error);
}

TEST(SoftmaxCrossEntropyTest, LargeLogitsStayFinite) {
  Tensor l = SoftmaxCrossEntropy(F64({1, 2}, {1000, -1000}),
                                 Tensor::FromVector<int32_t>({1}, {1}));
  EXPECT_NEAR(l.ElementAsDouble(0), 2000.0, 1e-9);
}

TEST(SoftmaxCrossEntropyTest, Gradient) {
  std::mt19937_64 rng(13);
  Tensor logits = RandomTensor(DType::kFloat64, {4, 5}, rng, 3.0);
  Tensor labels = Tensor::FromVector<int32_t>({4}, {0, 4, 2, 2});
  Tensor dloss = RandomTensor(DType::kFloat64, {4}, rng);
  Tensor g = SoftmaxCrossEntropyBackward(logits, labels, dloss);
  for (int r = 0; r < 4; ++r) {
    double s = 0;
    for (int c = 0; c < 5; ++c) s += g.ElementAsDouble(r * 5 + c);
    EXPECT_NEAR(s, 0.0, 1e-12);
  }
  EXPECT_LT(MaxRelErr(g, NumericVjp([&](const Tensor& t) { return SoftmaxCrossEntropy(t, labels); },
                                    logits, dloss)),
            1e-6);
}

TEST(ColumnsTest, ConcatSplitAndBroadcast) {
  Tensor a = F64({2, 1}, {1, 2});
  Tensor b = F64({2, 2}, {3, 4, 5, 6});
  std::vector<Tensor> in = {a, b};
  Tensor c = ConcatColumns(in);
  EXPECT_EQ(c, F64({2, 3}, {1, 3, 4, 2, 5, 6}));
  std::vector<int64_t> widths = {1, 2};
  std::vector<Tensor> parts = SplitColumns(c, widths);
  EXPECT_EQ(parts[0], a);
  EXPECT_EQ(parts[1], b);
  EXPECT_EQ(BroadcastColumns(a, 3), F64({2, 3}, {1, 1, 1, 2, 2, 2}));
  EXPECT_EQ(AddRowVector(b, F64({2}, {10, 20})), F64({2, 2}, {13, 24, 15, 26}));
}

TEST(KernelsTest, Deterministic) {
  std::mt19937_64 rng(14);
  Tensor a = RandomTensor(DType::kFloat32, {33, 17}, rng);
  Tensor w = RandomTensor(DType::kFloat32, {17, 9}, rng);
  EXPECT_EQ(MatMul(a, w), MatMul(a, w));
  EXPECT_EQ(EwUnary(UnaryKind::kTanh, a), EwUnary(UnaryKind::kTanh, a));
}

}  // namespace
}  // namespace dynbatch::kernels
