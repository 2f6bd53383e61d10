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

#include "dynbatch/types.h"

#include <charconv>

namespace dynbatch {

std::string TensorType::ToString() const {
  return std::string(DTypeName(dtype)) + shape.ToString();
}

TensorType ParseTensorType(std::string_view text) {
  const auto open = text.find('[');
  if (open == std::string_view::npos || text.back() != ']') {
    throw Error(ErrorCode::kType,
                "malformed tensor type '" + std::string(text) + "'");
  }
  const DType dtype = ParseDType(text.substr(0, open));
  std::vector<int64_t> dims;
  std::string_view body = text.substr(open + 1, text.size() - open - 2);
  while (!body.empty()) {
    const auto comma = body.find(',');
    std::string_view item = body.substr(0, comma);
    int64_t value = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorCode::kType,
                  "malformed tensor type '" + std::string(text) + "'");
    }
    dims.push_back(value);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return TensorType(dtype, Shape(std::move(dims)));
}

BlockType BlockType::Tensor(TensorType t) {
  BlockType b(Kind::kTensor);
  b.tensor_ = std::move(t);
  return b;
}

BlockType BlockType::Tuple(std::vector<BlockType> elements) {
  if (elements.empty()) {
    throw Error(ErrorCode::kType, "Tuple type must have at least one element");
  }
  BlockType b(Kind::kTuple);
  b.elements_ = std::move(elements);
  return b;
}

BlockType BlockType::Seq(BlockType element) {
  BlockType b(Kind::kSeq);
  b.elements_.push_back(std::move(element));
  return b;
}

const TensorType& BlockType::tensor_type() const {
  if (kind_ != Kind::kTensor) {
    throw Error(ErrorCode::kType, "not a tensor type: " + ToString());
  }
  return tensor_;
}

const BlockType& BlockType::element() const {
  if (kind_ != Kind::kSeq) {
    throw Error(ErrorCode::kType, "not a sequence type: " + ToString());
  }
  return elements_.front();
}

bool BlockType::IsTensorTree() const {
  if (kind_ == Kind::kTensor) return true;
  if (kind_ != Kind::kTuple) return false;
  for (const BlockType& e : elements_) {
    if (!e.IsTensorTree()) return false;
  }
  return true;
}

namespace {

void Flatten(const BlockType& t, std::vector<TensorType>& out) {
  if (t.is_tensor()) {
    out.push_back(t.tensor_type());
  } else {
    for (const BlockType& e : t.elements()) Flatten(e, out);
  }
}

}  // namespace

std::vector<TensorType> BlockType::FlattenTensors() const {
  std::vector<TensorType> out;
  if (IsTensorTree()) Flatten(*this, out);
  return out;
}

std::string BlockType::ToString() const {
  switch (kind_) {
    case Kind::kInput:
      return "input";
    case Kind::kVoid:
      return "void";
    case Kind::kTensor:
      return tensor_.ToString();
    case Kind::kSeq:
      return "seq<" + elements_.front().ToString() + ">";
    case Kind::kTuple: {
      std::string out = "(";
      for (size_t i = 0; i < elements_.size(); ++i) {
        if (i > 0) out += ", ";
        out += elements_[i].ToString();
      }
      return out + ")";
    }
  }
  return "?";
}

BlockType TensorsAsBlockType(const std::vector<TensorType>& types) {
  if (types.size() == 1) return BlockType::Tensor(types.front());
  std::vector<BlockType> elements;
  elements.reserve(types.size());
  for (const TensorType& t : types) elements.push_back(BlockType::Tensor(t));
  return BlockType::Tuple(std::move(elements));
}

}  // namespace dynbatch
