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

#ifndef DYNBATCH_TYPES_H_
#define DYNBATCH_TYPES_H_

#include <string>
#include <vector>

#include "dynbatch/tensor.h"

namespace dynbatch {

// dtype + shape, with the batch dimension excluded.
struct TensorType {
  DType dtype = DType::kFloat32;
  Shape shape;

  TensorType() = default;
  TensorType(DType d, Shape s) : dtype(d), shape(std::move(s)) {}

  // "f32[2,3]".
  std::string ToString() const;

  friend bool operator==(const TensorType&, const TensorType&) = default;
  friend auto operator<=>(const TensorType&, const TensorType&) = default;
};

TensorType ParseTensorType(std::string_view text);

// Static type of a block edge: Input (host object), Tensor, Tuple, Seq, Void.
class BlockType {
 public:
  enum class Kind { kInput, kTensor, kTuple, kSeq, kVoid };

  static BlockType Input() { return BlockType(Kind::kInput); }
  static BlockType Void() { return BlockType(Kind::kVoid); }
  static BlockType Tensor(TensorType t);
  static BlockType Tensor(DType dtype, Shape shape) {
    return Tensor(TensorType(dtype, std::move(shape)));
  }
  // Arity must be at least one.
  static BlockType Tuple(std::vector<BlockType> elements);
  static BlockType Seq(BlockType element);

  Kind kind() const { return kind_; }
  bool is_input() const { return kind_ == Kind::kInput; }
  bool is_tensor() const { return kind_ == Kind::kTensor; }
  bool is_tuple() const { return kind_ == Kind::kTuple; }
  bool is_seq() const { return kind_ == Kind::kSeq; }
  bool is_void() const { return kind_ == Kind::kVoid; }

  const TensorType& tensor_type() const;
  // Tuple elements, or the single element type of a Seq.
  const std::vector<BlockType>& elements() const { return elements_; }
  const BlockType& element() const;  // Seq only

  // True when the type is a tensor or a (nested) tuple of tensors.
  bool IsTensorTree() const;
  // Tensor leaves in depth-first order; empty if not a tensor tree.
  std::vector<TensorType> FlattenTensors() const;

  // Grammar: f32[2,3] | (t1, t2) | seq<t> | input | void
  std::string ToString() const;

  friend bool operator==(const BlockType&, const BlockType&) = default;

 private:
  explicit BlockType(Kind kind) : kind_(kind) {}

  Kind kind_;
  TensorType tensor_;
  std::vector<BlockType> elements_;
};

// Structural equality; kept as a named function for call sites that read
// better with it.
inline bool TypeEqual(const BlockType& a, const BlockType& b) { return a == b; }

// Tensor when there is exactly one type, else a flat tuple.
BlockType TensorsAsBlockType(const std::vector<TensorType>& types);

// The fixed tensor signature of an operation.
struct OpSignature {
  std::string name;
  std::vector<TensorType> inputs;
  std::vector<TensorType> outputs;

  BlockType input_type() const { return TensorsAsBlockType(inputs); }
  BlockType output_type() const { return TensorsAsBlockType(outputs); }
};

}  // namespace dynbatch

#endif  // DYNBATCH_TYPES_H_
