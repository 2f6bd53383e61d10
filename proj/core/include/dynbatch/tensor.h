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

#ifndef DYNBATCH_TENSOR_H_
#define DYNBATCH_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "dynbatch/error.h"

namespace dynbatch {

enum class DType : uint8_t { kFloat32 = 0, kFloat64 = 1, kInt32 = 2 };

// Short names used by the type pretty-printer: "f32", "f64", "i32".
std::string_view DTypeName(DType dtype);
DType ParseDType(std::string_view name);
bool IsFloating(DType dtype);
size_t DTypeSize(DType dtype);

template <typename T>
constexpr DType DTypeOf() {
  if constexpr (std::is_same_v<T, float>) {
    return DType::kFloat32;
  } else if constexpr (std::is_same_v<T, double>) {
    return DType::kFloat64;
  } else {
    static_assert(std::is_same_v<T, int32_t>, "unsupported element type");
    return DType::kInt32;
  }
}

// std::allocator whose value-less construct() leaves scalars uninitialized,
// so buffers that are about to be overwritten skip the zero fill.
template <typename T>
struct DefaultInitAllocator : std::allocator<T> {
  template <typename U>
  struct rebind {
    using other = DefaultInitAllocator<U>;
  };
  DefaultInitAllocator() = default;
  template <typename U>
  DefaultInitAllocator(const DefaultInitAllocator<U>&) noexcept {}

  template <typename U>
  void construct(U* p) noexcept(std::is_nothrow_default_constructible_v<U>) {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

template <typename T>
using Buffer = std::vector<T, DefaultInitAllocator<T>>;

// Calls fn(T{}) with T the C++ element type of `dtype`.
template <typename Fn>
decltype(auto) DispatchDType(DType dtype, Fn&& fn) {
  switch (dtype) {
    case DType::kFloat32:
      return fn(float{});
    case DType::kFloat64:
      return fn(double{});
    case DType::kInt32:
      break;
  }
  return fn(int32_t{});
}

// Like DispatchDType but rejects Int32 with a type error.
template <typename Fn>
decltype(auto) DispatchFloating(DType dtype, std::string_view what, Fn&& fn) {
  if (dtype == DType::kFloat64) return fn(double{});
  if (dtype != DType::kFloat32) {
    throw Error(ErrorCode::kType,
                std::string(what) + " requires a floating dtype, got " +
                    std::string(DTypeName(dtype)));
  }
  return fn(float{});
}

// Row-major extents. An empty dims list is a scalar.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int64_t> dims);
  explicit Shape(std::vector<int64_t> dims);

  size_t rank() const { return dims_.size(); }
  int64_t dim(size_t i) const { return dims_.at(i); }
  const std::vector<int64_t>& dims() const { return dims_; }
  int64_t num_elements() const;

  // (b, dims...).
  Shape WithLeading(int64_t extent) const;
  // Drops the leading dimension.
  Shape Trailing() const;

  // "[2,3]"; "[]" for scalars.
  std::string ToString() const;

  friend bool operator==(const Shape&, const Shape&) = default;
  friend auto operator<=>(const Shape&, const Shape&) = default;

 private:
  std::vector<int64_t> dims_;
};

// Dense n-dimensional array. Value type: copies duplicate the buffer.
// In batched contexts the leading dimension is the batch.
class Tensor {
 public:
  Tensor() : Tensor(DType::kFloat32, Shape{}) {}
  // Zero-filled.
  Tensor(DType dtype, Shape shape);
  // Contents unspecified; for outputs that are fully overwritten.
  static Tensor Uninitialized(DType dtype, Shape shape);

  template <typename T>
  static Tensor FromVector(Shape shape, std::vector<T> values) {
    if (static_cast<int64_t>(values.size()) != shape.num_elements()) {
      throw Error(ErrorCode::kShape,
                  "FromVector: " + std::to_string(values.size()) +
                      " values for shape " + shape.ToString());
    }
    Tensor t;
    t.dtype_ = DTypeOf<T>();
    t.shape_ = std::move(shape);
    t.data_ = Buffer<T>(values.begin(), values.end());
    return t;
  }

  // Converts doubles into a tensor of any dtype (Int32 values are rounded).
  static Tensor FromDoubles(DType dtype, Shape shape,
                            const std::vector<double>& values);
  static Tensor Filled(DType dtype, Shape shape, double value);

  DType dtype() const { return dtype_; }
  const Shape& shape() const { return shape_; }
  int64_t num_elements() const { return shape_.num_elements(); }

  // Leading extent; a scalar counts as one row.
  int64_t rows() const { return shape_.rank() == 0 ? 1 : shape_.dim(0); }
  // Elements per leading-axis row.
  int64_t row_size() const;

  template <typename T>
  std::span<const T> data() const {
    CheckDType(DTypeOf<T>());
    return std::get<Buffer<T>>(data_);
  }
  template <typename T>
  std::span<T> mutable_data() {
    CheckDType(DTypeOf<T>());
    return std::get<Buffer<T>>(data_);
  }

  double ElementAsDouble(int64_t flat_index) const;
  std::vector<double> ToDoubles() const;

  // Same buffer, new extents with equal element count.
  Tensor Reshaped(Shape shape) const;
  Tensor Cast(DType dtype) const;

  // Copy of rows [begin, begin + count) along the leading axis.
  Tensor SliceRows(int64_t begin, int64_t count) const;

  std::string DebugString() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dtype_ == b.dtype_ && a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void CheckDType(DType expected) const;

  DType dtype_;
  Shape shape_;
  std::variant<Buffer<float>, Buffer<double>, Buffer<int32_t>>
      data_;
};

}  // namespace dynbatch

#endif  // DYNBATCH_TENSOR_H_
