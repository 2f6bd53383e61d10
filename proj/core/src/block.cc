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

#include "dynbatch/block.h"

#include <algorithm>
#include <set>
#include <sstream>

namespace dynbatch {

std::string_view BlockKindName(BlockKind kind) {
  switch (kind) {
    case BlockKind::kScalar: return "Scalar";
    case BlockKind::kTensorInput: return "TensorInput";
    case BlockKind::kFunction: return "Function";
    case BlockKind::kInputTransform: return "InputTransform";
    case BlockKind::kPipe: return "Pipe";
    case BlockKind::kRecord: return "Record";
    case BlockKind::kOneOf: return "OneOf";
    case BlockKind::kOptional: return "Optional";
    case BlockKind::kAllOf: return "AllOf";
    case BlockKind::kMap: return "Map";
    case BlockKind::kFold: return "Fold";
    case BlockKind::kReduce: return "Reduce";
    case BlockKind::kSum: return "Sum";
    case BlockKind::kZipWith: return "ZipWith";
    case BlockKind::kBroadcast: return "Broadcast";
    case BlockKind::kZeros: return "Zeros";
    case BlockKind::kConcat: return "Concat";
    case BlockKind::kGetItem: return "GetItem";
    case BlockKind::kComposition: return "Composition";
    case BlockKind::kForwardRef: return "ForwardRef";
  }
  return "?";
}

namespace {

Block Make(BlockKind kind, std::vector<Block> children = {}) {
  auto node = std::make_shared<BlockNode>();
  node->kind = kind;
  node->name = std::string(BlockKindName(kind));
  node->children = std::move(children);
  return Block(std::move(node));
}

// Shallow copy so With*() never mutates a block that is shared elsewhere.
Block CopyNode(const Block& b) {
  return Block(std::make_shared<BlockNode>(b.node()));
}

}  // namespace

BlockKind Block::kind() const { return node_->kind; }
const std::string& Block::name() const { return node_->name; }

Block Block::WithInputType(BlockType type) const {
  Block copy = CopyNode(*this);
  copy.node().declared_input = std::move(type);
  return copy;
}

Block Block::WithOutputType(BlockType type) const {
  Block copy = CopyNode(*this);
  copy.node().declared_output = std::move(type);
  return copy;
}

Block Block::WithName(std::string name) const {
  Block copy = CopyNode(*this);
  copy.node().name = std::move(name);
  return copy;
}

const std::optional<BlockType>& Block::input_type() const {
  return node_->input_type;
}
const std::optional<BlockType>& Block::output_type() const {
  return node_->output_type;
}

std::shared_ptr<ForwardDeclaration> ForwardDeclaration::Create(
    std::string name) {
  return std::shared_ptr<ForwardDeclaration>(
      new ForwardDeclaration(std::move(name)));
}

Block ForwardDeclaration::operator()() {
  Block ref = Make(BlockKind::kForwardRef);
  ref.node().decl = shared_from_this();
  ref.node().name = "ForwardRef(" + name_ + ")";
  return ref;
}

void ForwardDeclaration::ResolveTo(Block definition) {
  if (resolved()) {
    throw Error(ErrorCode::kContract,
                "forward declaration '" + name_ + "' is already resolved");
  }
  if (!definition.valid()) {
    throw Error(ErrorCode::kContract, "ResolveTo: invalid block");
  }
  definition_ = std::move(definition);
}

Block Scalar(DType dtype) {
  Block b = Make(BlockKind::kScalar);
  b.node().dtype = dtype;
  b.node().name = "Scalar(" + std::string(DTypeName(dtype)) + ")";
  return b;
}

Block TensorInput(TensorType type) {
  Block b = Make(BlockKind::kTensorInput);
  b.node().name = "TensorInput(" + type.ToString() + ")";
  b.node().tensor_type = std::move(type);
  return b;
}

Block Function(std::string op_name) {
  Block b = Make(BlockKind::kFunction);
  b.node().name = "Function(" + op_name + ")";
  b.node().op_name = std::move(op_name);
  return b;
}

Block InputTransform(HostFn fn, std::string name) {
  Block b = Make(BlockKind::kInputTransform);
  b.node().host_fn = std::move(fn);
  b.node().name = std::move(name);
  return b;
}

Block Zeros(BlockType type) {
  if (!type.IsTensorTree()) {
    throw Error(ErrorCode::kType,
                "Zeros requires a tensor or tuple of tensors, got " +
                    type.ToString());
  }
  Block b = Make(BlockKind::kZeros);
  b.node().name = "Zeros(" + type.ToString() + ")";
  b.node().zeros_type = std::move(type);
  return b;
}

Block Zeros(TensorType type) { return Zeros(BlockType::Tensor(std::move(type))); }

Block Pipe(Block first, Block second) {
  std::vector<Block> chain;
  for (Block* b : {&first, &second}) {
    // Unnamed pipes are flattened; a named pipe stays a unit for dumps.
    if (b->kind() == BlockKind::kPipe && b->name() == "Pipe" &&
        !b->node().declared_input && !b->node().declared_output) {
      for (const Block& c : b->node().children) chain.push_back(c);
    } else {
      chain.push_back(*b);
    }
  }
  return Make(BlockKind::kPipe, std::move(chain));
}

Block operator>>(Block first, Block second) {
  return Pipe(std::move(first), std::move(second));
}

Block Record(std::vector<std::pair<std::string, Block>> fields) {
  if (fields.empty()) {
    throw Error(ErrorCode::kContract, "Record needs at least one field");
  }
  std::set<std::string> seen;
  Block b = Make(BlockKind::kRecord);
  for (auto& [label, block] : fields) {
    if (!seen.insert(label).second) {
      throw Error(ErrorCode::kContract, "Record: duplicate label '" + label + "'");
    }
    b.node().labels.push_back(label);
    b.node().children.push_back(std::move(block));
  }
  return b;
}

Block OneOf(HostFn key_fn, std::vector<std::pair<HostValue, Block>> cases) {
  if (cases.empty()) {
    throw Error(ErrorCode::kContract, "OneOf needs at least one case");
  }
  Block b = Make(BlockKind::kOneOf);
  b.node().host_fn = std::move(key_fn);
  for (auto& [key, block] : cases) {
    for (const HostValue& k : b.node().case_keys) {
      if (k == key) {
        throw Error(ErrorCode::kContract,
                    "OneOf: duplicate case key " + key.DebugString());
      }
    }
    b.node().case_keys.push_back(key);
    b.node().children.push_back(std::move(block));
  }
  return b;
}

Block Optional(Block inner) { return Make(BlockKind::kOptional, {std::move(inner)}); }

Block AllOf(std::vector<Block> blocks) {
  if (blocks.empty()) {
    throw Error(ErrorCode::kContract, "AllOf needs at least one block");
  }
  return Make(BlockKind::kAllOf, std::move(blocks));
}

Block Map(Block f) { return Make(BlockKind::kMap, {std::move(f)}); }
Block Fold(Block g, Block z) {
  return Make(BlockKind::kFold, {std::move(g), std::move(z)});
}
Block Reduce(Block g) { return Make(BlockKind::kReduce, {std::move(g)}); }
Block Sum() { return Make(BlockKind::kSum); }
Block ZipWith(Block f) { return Make(BlockKind::kZipWith, {std::move(f)}); }
Block Broadcast() { return Make(BlockKind::kBroadcast); }
Block Concat() { return Make(BlockKind::kConcat); }

Block GetItem(int index) {
  Block b = Make(BlockKind::kGetItem);
  b.node().item_index = index;
  b.node().name = "GetItem(" + std::to_string(index) + ")";
  return b;
}

Composition::Composition() : block_(Make(BlockKind::kComposition)) {}

Wire Composition::Add(Block block, std::vector<Wire> reads) {
  Wire w = AddNode(std::move(block));
  Reads(w, std::move(reads));
  return w;
}

Wire Composition::AddNode(Block block) {
  BlockNode& n = block_.node();
  n.children.push_back(std::move(block));
  n.wiring.reads.emplace_back();
  return Wire{static_cast<int>(n.children.size()) - 1, std::nullopt};
}

void Composition::Reads(Wire node, std::vector<Wire> reads) {
  BlockNode& n = block_.node();
  if (node.node < 0 || node.node >= static_cast<int>(n.children.size())) {
    throw Error(ErrorCode::kValidation, "Reads: not a node of this scope");
  }
  n.wiring.reads[node.node] = std::move(reads);
}

void Composition::SetOutput(std::vector<Wire> outputs) {
  block_.node().wiring.outputs = std::move(outputs);
  block_.node().wiring.output_set = true;
}

Block Composition::Build() const {
  // Later edits to this builder must not leak into already-built blocks.
  Block built(std::make_shared<BlockNode>(block_.node()));
  ValidateCompositionWiring(built.node());
  return built;
}

namespace {

std::string WireName(const BlockNode& comp, const Wire& w) {
  std::string out = w.node == Wire::kScopeInput
                        ? std::string("input")
                        : "#" + std::to_string(w.node) + ":" +
                              comp.children[w.node].name();
  if (w.index) out += "[" + std::to_string(*w.index) + "]";
  return out;
}

}  // namespace

void ValidateCompositionWiring(const BlockNode& comp) {
  const auto& wiring = comp.wiring;
  const int n = static_cast<int>(comp.children.size());
  auto check_wire = [&](const Wire& w, const std::string& where) {
    if (w.node != Wire::kScopeInput && (w.node < 0 || w.node >= n)) {
      throw Error(ErrorCode::kValidation,
                  comp.name + ": " + where + " reads unknown node #" +
                      std::to_string(w.node));
    }
    if (w.index && *w.index < 0) {
      throw Error(ErrorCode::kValidation,
                  comp.name + ": " + where + " reads a negative tuple index");
    }
  };
  for (int i = 0; i < n; ++i) {
    for (const Wire& w : wiring.reads[i]) {
      check_wire(w, "node #" + std::to_string(i));
    }
  }
  if (!wiring.output_set || wiring.outputs.empty()) {
    throw Error(ErrorCode::kValidation, comp.name + ": output is not wired");
  }
  for (const Wire& w : wiring.outputs) check_wire(w, "output");

  // Cycle detection by DFS with an explicit path for the error message.
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<int> stack;
  std::function<void(int)> visit = [&](int v) {
    state[v] = 1;
    stack.push_back(v);
    for (const Wire& w : wiring.reads[v]) {
      if (w.node == Wire::kScopeInput) continue;
      if (state[w.node] == 1) {
        std::string cycle;
        auto it = std::find(stack.begin(), stack.end(), w.node);
        for (; it != stack.end(); ++it) {
          cycle += WireName(comp, Wire{*it, std::nullopt}) + " -> ";
        }
        cycle += WireName(comp, Wire{w.node, std::nullopt});
        throw Error(ErrorCode::kValidation,
                    comp.name + ": wiring forms a cycle: " + cycle);
      }
      if (state[w.node] == 0) visit(w.node);
    }
    stack.pop_back();
    state[v] = 2;
  };
  for (int i = 0; i < n; ++i) {
    if (state[i] == 0) visit(i);
  }
}

std::vector<int> CompositionTopologicalOrder(const BlockNode& comp) {
  const int n = static_cast<int>(comp.children.size());
  std::vector<int> order;
  std::vector<bool> done(n, false);
  std::function<void(int)> visit = [&](int v) {
    if (done[v]) return;
    done[v] = true;
    for (const Wire& w : comp.wiring.reads[v]) {
      if (w.node != Wire::kScopeInput) visit(w.node);
    }
    order.push_back(v);
  };
  for (int i = 0; i < n; ++i) visit(i);
  return order;
}

namespace {

void DumpRec(const Block& b, int indent, const std::string& prefix,
             std::set<const ForwardDeclaration*>& expanded,
             std::ostringstream& os) {
  const BlockNode& n = b.node();
  os << std::string(indent * 2, ' ') << prefix << n.name;
  if (n.input_type || n.output_type) {
    os << " : " << (n.input_type ? n.input_type->ToString() : "?") << " -> "
       << (n.output_type ? n.output_type->ToString() : "?");
  }
  if (!n.resolved_op.empty() && n.resolved_op != n.op_name) {
    os << " [op " << n.resolved_op << "]";
  }
  os << "\n";
  for (size_t i = 0; i < n.children.size(); ++i) {
    std::string child_prefix;
    switch (n.kind) {
      case BlockKind::kRecord:
        child_prefix = n.labels[i] + ": ";
        break;
      case BlockKind::kOneOf:
        child_prefix = n.case_keys[i].DebugString() + ": ";
        break;
      case BlockKind::kFold:
        child_prefix = i == 0 ? "g: " : "z: ";
        break;
      case BlockKind::kComposition: {
        child_prefix = "#" + std::to_string(i) + " reads(";
        const auto& reads = n.wiring.reads[i];
        for (size_t r = 0; r < reads.size(); ++r) {
          if (r > 0) child_prefix += ", ";
          child_prefix += WireName(n, reads[r]);
        }
        child_prefix += "): ";
        break;
      }
      default:
        break;
    }
    DumpRec(n.children[i], indent + 1, child_prefix, expanded, os);
  }
  if (n.kind == BlockKind::kComposition) {
    os << std::string((indent + 1) * 2, ' ') << "output reads(";
    for (size_t r = 0; r < n.wiring.outputs.size(); ++r) {
      if (r > 0) os << ", ";
      os << WireName(n, n.wiring.outputs[r]);
    }
    os << ")\n";
  }
  if (n.kind == BlockKind::kForwardRef && n.decl && n.decl->resolved() &&
      expanded.insert(n.decl.get()).second) {
    DumpRec(n.decl->definition(), indent + 1, "= ", expanded, os);
  }
}

}  // namespace

std::string DumpBlock(const Block& root) {
  std::ostringstream os;
  std::set<const ForwardDeclaration*> expanded;
  DumpRec(root, 0, "", expanded, os);
  return os.str();
}

}  // namespace dynbatch
