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

// Blocks: the combinator vocabulary for describing per-input computations.
//
// A block is a function from an input to an output with a static BlockType on
// each side. Leaves are atomic blocks (Scalar, TensorInput, Function,
// InputTransform, Zeros); internal nodes are combinators (Pipe, Record, OneOf,
// Optional, AllOf, Map, Fold, Reduce, Sum, ZipWith, Broadcast, Composition).
// Recursive models are built with ForwardDeclaration.
//
// Blocks are cheap handles; the compiler deep-copies the tree before
// annotating it, so one handle may be reused in several places.

#ifndef DYNBATCH_BLOCK_H_
#define DYNBATCH_BLOCK_H_

#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynbatch/host_value.h"
#include "dynbatch/types.h"

namespace dynbatch {

enum class BlockKind {
  kScalar,
  kTensorInput,
  kFunction,
  kInputTransform,
  kPipe,
  kRecord,
  kOneOf,
  kOptional,
  kAllOf,
  kMap,
  kFold,
  kReduce,
  kSum,
  kZipWith,
  kBroadcast,
  kZeros,
  kConcat,
  kGetItem,
  kComposition,
  kForwardRef,
};

std::string_view BlockKindName(BlockKind kind);

using HostFn = std::function<HostValue(const HostValue&)>;

class ForwardDeclaration;
struct BlockNode;

// Reference to a value inside a Composition scope: the scope input
// (node == kScopeInput) or the output of an added node, optionally projected
// to one tuple element.
struct Wire {
  static constexpr int kScopeInput = -1;

  int node = kScopeInput;
  std::optional<int> index;

  Wire operator[](int i) const { return Wire{node, i}; }
  friend bool operator==(const Wire&, const Wire&) = default;
};

struct CompositionWiring {
  std::vector<std::vector<Wire>> reads;  // per child node
  std::vector<Wire> outputs;
  bool output_set = false;
};

class Block {
 public:
  Block() = default;
  explicit Block(std::shared_ptr<BlockNode> node) : node_(std::move(node)) {}

  BlockKind kind() const;
  const std::string& name() const;

  // Explicit annotations that seed type inference.
  Block WithInputType(BlockType type) const;
  Block WithOutputType(BlockType type) const;
  // Label shown by DumpBlock and in error paths.
  Block WithName(std::string name) const;

  // Types assigned by inference (only on compiled trees).
  const std::optional<BlockType>& input_type() const;
  const std::optional<BlockType>& output_type() const;

  BlockNode& node() const { return *node_; }
  bool valid() const { return node_ != nullptr; }

 private:
  std::shared_ptr<BlockNode> node_;
};

// Internal representation. Exposed so the compiler, tracer and printers can
// walk the tree; user code builds blocks through the factory functions below.
struct BlockNode {
  BlockKind kind;
  std::string name;
  std::vector<Block> children;

  // Payloads; which ones are meaningful depends on kind.
  DType dtype = DType::kFloat32;               // Scalar
  TensorType tensor_type;                      // TensorInput
  std::optional<BlockType> zeros_type;         // Zeros
  std::string op_name;                         // Function (as written)
  HostFn host_fn;                              // InputTransform, OneOf key
  std::vector<std::string> labels;             // Record
  std::vector<HostValue> case_keys;            // OneOf
  int item_index = 0;                          // GetItem
  std::shared_ptr<ForwardDeclaration> decl;    // ForwardRef
  CompositionWiring wiring;                    // Composition

  std::optional<BlockType> declared_input;
  std::optional<BlockType> declared_output;

  // Filled in by the compiler.
  std::optional<BlockType> input_type;
  std::optional<BlockType> output_type;
  std::string resolved_op;  // Function/Sum: concrete operation name
  std::string path;         // location used in diagnostics
};

// Placeholder for recursive definitions. Calling the declaration yields a
// reference block; ResolveTo binds every reference to the definition.
class ForwardDeclaration
    : public std::enable_shared_from_this<ForwardDeclaration> {
 public:
  static std::shared_ptr<ForwardDeclaration> Create(std::string name = "expr");

  Block operator()();
  // Throws kContract when already resolved.
  void ResolveTo(Block definition);

  bool resolved() const { return definition_.valid(); }
  const Block& definition() const { return definition_; }
  const std::string& name() const { return name_; }

 private:
  explicit ForwardDeclaration(std::string name) : name_(std::move(name)) {}

  std::string name_;
  Block definition_;
};

// --- atomic blocks ---

// input -> dtype[]: converts a host number to a scalar tensor.
Block Scalar(DType dtype);
// input -> type: converts a host tensor (or nested list of numbers).
Block TensorInput(TensorType type);
// Applies a registered operation. Multi-input operations take a (possibly
// nested) tuple whose tensor leaves match the operation's inputs in order.
Block Function(std::string op_name);
// input -> input: arbitrary host preprocessing.
Block InputTransform(HostFn fn, std::string name = "InputTransform");
// any -> type (a tensor or tuple of tensors), all zeros.
Block Zeros(BlockType type);
Block Zeros(TensorType type);

// --- combinators ---

// The output of `first` feeds the input of `second`. Chains are flattened,
// so pipes are associative by construction.
Block Pipe(Block first, Block second);
Block operator>>(Block first, Block second);

// input -> (t1, ..., tn): field i of a host map (or element i of a host
// list) goes to block i. Labels must be distinct.
Block Record(std::vector<std::pair<std::string, Block>> fields);
// Dispatches on key_fn(input); each case sees the whole input.
Block OneOf(HostFn key_fn, std::vector<std::pair<HostValue, Block>> cases);
// Applies b unless the input is null, else zeros of b's output type.
Block Optional(Block b);
// t0 -> (t1, ..., tn): feeds the same input to every block.
Block AllOf(std::vector<Block> blocks);

// seq<a> -> seq<b>.
Block Map(Block f);
// seq<e> -> s with g: (s, e) -> s and z: void -> s; left fold.
Block Fold(Block g, Block z);
// seq<t> -> t, balanced tree of g: (t, t) -> t.
Block Reduce(Block g);
// Reduce with elementwise addition; zeros on an empty sequence.
Block Sum();
// (seq<t1>, ..., seq<tn>) -> seq<u>; stops at the shortest finite input.
Block ZipWith(Block f);
// t -> seq<t>, repeating the element without bound. Only bounded consumers
// (ZipWith next to a finite sequence, Map feeding one) may realize it.
Block Broadcast();
// Tuple of rank-1 tensors -> their feature-axis concatenation. Must be
// followed directly by a Function in a pipe; the concatenation is done at
// gather time, so it is not an operation of its own.
Block Concat();
// (t0, ..., tn) -> ti.
Block GetItem(int index);

// DAG-shaped blocks wired with reads().
class Composition {
 public:
  Composition();

  Wire input() const { return Wire{}; }
  Wire input(int index) const { return Wire{Wire::kScopeInput, index}; }

  // Adds a node reading `reads` (one wire: that value; several: a tuple).
  Wire Add(Block block, std::vector<Wire> reads);
  // Adds a node to be wired later with Reads(); allows forward references.
  Wire AddNode(Block block);
  void Reads(Wire node, std::vector<Wire> reads);
  void SetOutput(std::vector<Wire> outputs);

  // Validates wiring (references in range, acyclic, output set).
  Block Build() const;

 private:
  Block block_;
};

// Throws kValidation on dangling wires, a missing output or a cycle (the
// message lists the cycle).
void ValidateCompositionWiring(const BlockNode& composition);
// Child indices such that every node follows the nodes it reads.
std::vector<int> CompositionTopologicalOrder(const BlockNode& composition);

// Indented tree with inferred types where available, one block per line.
std::string DumpBlock(const Block& root);

}  // namespace dynbatch

#endif  // DYNBATCH_BLOCK_H_
