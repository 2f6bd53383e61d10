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

#include "dynbatch/tensor.h"

#include <cmath>
#include <numeric>
#include <sstream>

namespace dynbatch {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kType: return "TypeError";
    case ErrorCode::kShape: return "ShapeError";
    case ErrorCode::kIndex: return "IndexError";
    case ErrorCode::kContract: return "ContractViolation";
    case ErrorCode::kTrace: return "TraceError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kSchedule: return "ScheduleError";
    case ErrorCode::kIO: return "IOError";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Error";
}

std::string_view DTypeName(DType dtype) {
  switch (dtype) {
    case DType::kFloat32: return "f32";
    case DType::kFloat64: return "f64";
    case DType::kInt32: return "i32";
  }
  return "?";
}

DType ParseDType(std::string_view name) {
  if (name == "f32" || name == "float32") return DType::kFloat32;
  if (name == "f64" || name == "float64") return DType::kFloat64;
  if (name == "i32" || name == "int32") return DType::kInt32;
  throw Error(ErrorCode::kType, "unknown dtype '" + std::string(name) + "'");
}

bool IsFloating(DType dtype) { return dtype != DType::kInt32; }

size_t DTypeSize(DType dtype) {
  return dtype == DType::kFloat64 ? 8 : 4;
}

Shape::Shape(std::initializer_list<int64_t> dims) : Shape(std::vector(dims)) {}

Shape::Shape(std::vector<int64_t> dims) : dims_(std::move(dims)) {
  for (int64_t d : dims_) {
    if (d < 0) {
      throw Error(ErrorCode::kShape, "negative extent in shape");
    }
  }
}

int64_t Shape::num_elements() const {
  return std::accumulate(dims_.begin(), dims_.end(), int64_t{1},
                         std::multiplies<>());
}

Shape Shape::WithLeading(int64_t extent) const {
  std::vector<int64_t> dims;
  dims.reserve(dims_.size() + 1);
  dims.push_back(extent);
  dims.insert(dims.end(), dims_.begin(), dims_.end());
  return Shape(std::move(dims));
}

Shape Shape::Trailing() const {
  if (dims_.empty()) {
    throw Error(ErrorCode::kShape, "Trailing() of a scalar shape");
  }
  return Shape(std::vector<int64_t>(dims_.begin() + 1, dims_.end()));
}

std::string Shape::ToString() const {
  std::string out = "[";
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(dims_[i]);
  }
  return out + "]";
}

Tensor::Tensor(DType dtype, Shape shape)
    : dtype_(dtype), shape_(std::move(shape)) {
  const auto n = static_cast<size_t>(shape_.num_elements());
  DispatchDType(dtype_, [&](auto tag) {
    using T = decltype(tag);
    data_ = Buffer<T>(n, T(0));
  });
}

Tensor Tensor::Uninitialized(DType dtype, Shape shape) {
  Tensor t;
  t.dtype_ = dtype;
  t.shape_ = std::move(shape);
  const auto n = static_cast<size_t>(t.shape_.num_elements());
  DispatchDType(dtype, [&](auto tag) { t.data_ = Buffer<decltype(tag)>(n); });
  return t;
}

Tensor Tensor::FromDoubles(DType dtype, Shape shape,
                           const std::vector<double>& values) {
  if (static_cast<int64_t>(values.size()) != shape.num_elements()) {
    throw Error(ErrorCode::kShape, "FromDoubles: " +
                                       std::to_string(values.size()) +
                                       " values for shape " + shape.ToString());
  }
  Tensor t(dtype, std::move(shape));
  DispatchDType(dtype, [&](auto tag) {
    using T = decltype(tag);
    auto out = t.mutable_data<T>();
    for (size_t i = 0; i < values.size(); ++i) {
      if constexpr (std::is_same_v<T, int32_t>) {
        out[i] = static_cast<int32_t>(std::llround(values[i]));
      } else {
        out[i] = static_cast<T>(values[i]);
      }
    }
  });
  return t;
}

Tensor Tensor::Filled(DType dtype, Shape shape, double value) {
  std::vector<double> values(static_cast<size_t>(shape.num_elements()), value);
  return FromDoubles(dtype, std::move(shape), values);
}

int64_t Tensor::row_size() const {
  if (shape_.rank() == 0) return 1;
  return shape_.Trailing().num_elements();
}

double Tensor::ElementAsDouble(int64_t flat_index) const {
  return DispatchDType(dtype_, [&](auto tag) {
    using T = decltype(tag);
    return static_cast<double>(
        std::get<Buffer<T>>(data_).at(static_cast<size_t>(flat_index)));
  });
}

std::vector<double> Tensor::ToDoubles() const {
  return DispatchDType(dtype_, [&](auto tag) {
    using T = decltype(tag);
    const auto& v = std::get<Buffer<T>>(data_);
    return std::vector<double>(v.begin(), v.end());
  });
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (shape.num_elements() != num_elements()) {
    throw Error(ErrorCode::kShape, "cannot reshape " + shape_.ToString() +
                                       " to " + shape.ToString());
  }
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

Tensor Tensor::Cast(DType dtype) const {
  if (dtype == dtype_) return *this;
  return FromDoubles(dtype, shape_, ToDoubles());
}

Tensor Tensor::SliceRows(int64_t begin, int64_t count) const {
  if (shape_.rank() == 0 || begin < 0 || count < 0 ||
      begin + count > shape_.dim(0)) {
    throw Error(ErrorCode::kIndex, "SliceRows [" + std::to_string(begin) +
                                       ", +" + std::to_string(count) +
                                       ") out of range for " +
                                       shape_.ToString());
  }
  std::vector<int64_t> dims = shape_.dims();
  dims[0] = count;
  Tensor out(dtype_, Shape(std::move(dims)));
  const int64_t width = row_size();
  DispatchDType(dtype_, [&](auto tag) {
    using T = decltype(tag);
    auto src = data<T>();
    std::copy(src.begin() + begin * width, src.begin() + (begin + count) * width,
              out.mutable_data<T>().begin());
  });
  return out;
}

std::string Tensor::DebugString() const {
  std::ostringstream os;
  os << DTypeName(dtype_) << shape_.ToString() << "{";
  const auto values = ToDoubles();
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) os << ", ";
    if (i == 16) {
      os << "...";
      break;
    }
    os << values[i];
  }
  os << "}";
  return os.str();
}

void Tensor::CheckDType(DType expected) const {
  if (expected != dtype_) {
    throw Error(ErrorCode::kType, "tensor holds " +
                                      std::string(DTypeName(dtype_)) +
                                      ", accessed as " +
                                      std::string(DTypeName(expected)));
  }
}

}  // namespace dynbatch
