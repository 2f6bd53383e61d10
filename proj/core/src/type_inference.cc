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

#include "dynbatch/type_inference.h"

#include <map>
#include <set>

namespace dynbatch {
namespace {

using Slot = std::optional<BlockType>;

[[noreturn]] void Mismatch(const BlockNode& n, std::string_view what,
                           const BlockType& expected, const BlockType& found) {
  throw Error(ErrorCode::kType, "TypeMismatch at " + n.path + " (" +
                                    std::string(what) + "): expected " +
                                    expected.ToString() + ", found " +
                                    found.ToString());
}

[[noreturn]] void Invalid(const BlockNode& n, const std::string& message) {
  throw Error(ErrorCode::kType, "TypeMismatch at " + n.path + ": " + message);
}

// Every node reachable from the root, with forward-declaration definitions
// visited once, in depth-first left-to-right order. Also assigns paths.
std::vector<BlockNode*> CollectNodes(const Block& root) {
  std::vector<BlockNode*> out;
  std::set<const ForwardDeclaration*> seen;
  std::function<void(BlockNode&, const std::string&)> visit =
      [&](BlockNode& n, const std::string& path) {
        n.path = path;
        out.push_back(&n);
        for (size_t i = 0; i < n.children.size(); ++i) {
          std::string label;
          if (n.kind == BlockKind::kRecord) {
            label = n.labels[i];
          } else if (n.kind == BlockKind::kOneOf) {
            label = "case " + n.case_keys[i].DebugString();
          } else {
            label = std::to_string(i);
          }
          BlockNode& c = n.children[i].node();
          visit(c, path + "/" + label + ":" + c.name);
        }
        if (n.kind == BlockKind::kForwardRef) {
          if (!n.decl || !n.decl->resolved()) {
            throw Error(ErrorCode::kValidation,
                        "unresolved forward declaration at " + path);
          }
          if (seen.insert(n.decl.get()).second) {
            BlockNode& def = n.decl->definition().node();
            visit(def, n.decl->name() + "=" + def.name);
          }
        }
      };
  visit(root.node(), root.node().name);
  return out;
}

class Inference {
 public:
  explicit Inference(OpResolver& resolver) : resolver_(resolver) {}

  void Run(const Block& root) {
    nodes_ = CollectNodes(root);
    for (BlockNode* n : nodes_) {
      if (n->declared_input) Set(n->input_type, *n->declared_input, *n, "declared input");
      if (n->declared_output) Set(n->output_type, *n->declared_output, *n, "declared output");
    }
    while (true) {
      while (Sweep()) {
      }
      if (!ApplyDefaults()) break;
    }
    for (BlockNode* n : nodes_) {
      if (!n->input_type || !n->output_type) {
        throw Error(ErrorCode::kType,
                    "Underdetermined at " + n->path + ": " +
                        (n->input_type ? "output" : "input") +
                        " type cannot be inferred; annotate it explicitly");
      }
    }
  }

 private:
  bool Set(Slot& slot, const BlockType& t, const BlockNode& where,
           std::string_view what) {
    if (!slot) {
      slot = t;
      return true;
    }
    if (*slot != t) Mismatch(where, what, *slot, t);
    return false;
  }

  // Two slots that must hold the same type.
  bool Link(Slot& a, Slot& b, const BlockNode& where, std::string_view what) {
    if (a && !b) return Set(b, *a, where, what);
    if (b && !a) return Set(a, *b, where, what);
    if (a && b && *a != *b) Mismatch(where, what, *a, *b);
    return false;
  }

  bool Sweep() {
    bool changed = false;
    for (BlockNode* n : nodes_) changed |= Propagate(*n);
    return changed;
  }

  // When nothing else makes progress, blocks with a natural default input
  // get it: Zeros reads nothing (void) and Functions take their signature.
  bool ApplyDefaults() {
    for (BlockNode* n : nodes_) {
      if (n->input_type) continue;
      if (n->kind == BlockKind::kZeros) {
        n->input_type = BlockType::Void();
        return true;
      }
      if (n->kind == BlockKind::kFunction) {
        if (auto sig = resolver_.Resolve(n->op_name, std::nullopt)) {
          n->input_type = sig->input_type();
          return true;
        }
      }
    }
    return false;
  }

  static BlockType ElementOf(const BlockNode& n, const BlockType& seq) {
    if (seq.is_input()) return BlockType::Input();
    if (!seq.is_seq()) Invalid(n, "expected a sequence input, found " + seq.ToString());
    return seq.element();
  }

  bool Propagate(BlockNode& n) {
    bool ch = false;
    auto& kids = n.children;
    switch (n.kind) {
      case BlockKind::kScalar:
        ch |= Set(n.input_type, BlockType::Input(), n, "input");
        ch |= Set(n.output_type, BlockType::Tensor(n.dtype, Shape{}), n, "output");
        break;
      case BlockKind::kTensorInput:
        ch |= Set(n.input_type, BlockType::Input(), n, "input");
        ch |= Set(n.output_type, BlockType::Tensor(n.tensor_type), n, "output");
        break;
      case BlockKind::kInputTransform:
        ch |= Set(n.input_type, BlockType::Input(), n, "input");
        ch |= Set(n.output_type, BlockType::Input(), n, "output");
        break;
      case BlockKind::kZeros:
        ch |= Set(n.output_type, *n.zeros_type, n, "output");
        break;
      case BlockKind::kFunction: {
        if (n.input_type && n.input_type->is_void()) {
          Invalid(n, "a Function cannot take a void input");
        }
        std::optional<OpSignature> sig;
        try {
          sig = resolver_.Resolve(n.op_name, n.input_type);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kValidation) {
            throw Error(ErrorCode::kValidation, std::string(e.what()) + " at " + n.path);
          }
          Invalid(n, e.what());
        }
        if (!sig) break;
        n.resolved_op = sig->name;
        ch |= Set(n.output_type, sig->output_type(), n, "output");
        if (n.input_type && n.input_type->FlattenTensors() != sig->inputs) {
          Mismatch(n, "operation inputs", sig->input_type(), *n.input_type);
        }
        break;
      }
      case BlockKind::kConcat: {
        if (!n.input_type) break;
        const auto leaves = n.input_type->FlattenTensors();
        if (leaves.empty()) Invalid(n, "Concat needs tensors, found " + n.input_type->ToString());
        int64_t width = 0;
        for (const TensorType& t : leaves) {
          if (t.shape.rank() != 1 || t.dtype != leaves.front().dtype) {
            Invalid(n, "Concat needs rank-1 tensors of one dtype, found " +
                           n.input_type->ToString());
          }
          width += t.shape.dim(0);
        }
        ch |= Set(n.output_type, BlockType::Tensor(leaves.front().dtype, Shape{width}),
                  n, "output");
        break;
      }
      case BlockKind::kGetItem:
        if (n.input_type) {
          if (!n.input_type->is_tuple() ||
              n.item_index >= static_cast<int>(n.input_type->elements().size())) {
            Invalid(n, "cannot take element " + std::to_string(n.item_index) +
                           " of " + n.input_type->ToString());
          }
          ch |= Set(n.output_type, n.input_type->elements()[n.item_index], n, "output");
        }
        break;
      case BlockKind::kPipe:
        ch |= Link(n.input_type, kids.front().node().input_type, n, "pipe input");
        for (size_t i = 0; i + 1 < kids.size(); ++i) {
          ch |= Link(kids[i].node().output_type, kids[i + 1].node().input_type, n,
                     "pipe stage " + std::to_string(i) + " -> " + std::to_string(i + 1));
        }
        ch |= Link(kids.back().node().output_type, n.output_type, n, "pipe output");
        break;
      case BlockKind::kRecord: {
        ch |= Set(n.input_type, BlockType::Input(), n, "input");
        for (Block& k : kids) ch |= Set(k.node().input_type, BlockType::Input(), n, "field input");
        ch |= TupleOfChildren(n);
        break;
      }
      case BlockKind::kOneOf:
        ch |= Set(n.input_type, BlockType::Input(), n, "input");
        for (Block& k : kids) {
          ch |= Set(k.node().input_type, BlockType::Input(), n, "case input");
          ch |= Link(n.output_type, k.node().output_type, n, "case output");
        }
        break;
      case BlockKind::kOptional:
        ch |= Set(n.input_type, BlockType::Input(), n, "input");
        ch |= Set(kids[0].node().input_type, BlockType::Input(), n, "inner input");
        ch |= Link(n.output_type, kids[0].node().output_type, n, "output");
        if (n.output_type && !n.output_type->IsTensorTree()) {
          Invalid(n, "Optional needs a tensor-valued block, found " + n.output_type->ToString());
        }
        break;
      case BlockKind::kAllOf:
        for (Block& k : kids) ch |= Link(n.input_type, k.node().input_type, n, "branch input");
        ch |= TupleOfChildren(n);
        break;
      case BlockKind::kMap: {
        BlockNode& f = kids[0].node();
        if (n.input_type) {
          ch |= Set(f.input_type, ElementOf(n, *n.input_type), n, "element");
        } else if (f.input_type) {
          ch |= Set(n.input_type, f.input_type->is_input() ? BlockType::Input()
                                                           : BlockType::Seq(*f.input_type),
                    n, "input");
        }
        ch |= SeqLink(n, n.output_type, f.output_type);
        break;
      }
      case BlockKind::kFold: {
        BlockNode& g = kids[0].node();
        BlockNode& z = kids[1].node();
        ch |= Set(z.input_type, BlockType::Void(), n, "initial state input");
        ch |= Link(z.output_type, g.output_type, n, "state");
        ch |= Link(z.output_type, n.output_type, n, "output");
        ch |= Link(g.output_type, n.output_type, n, "output");
        if (z.output_type && n.input_type) {
          ch |= Set(g.input_type,
                    BlockType::Tuple({*z.output_type, ElementOf(n, *n.input_type)}), n,
                    "step input");
        }
        if (g.input_type) {
          if (!g.input_type->is_tuple() || g.input_type->elements().size() != 2) {
            Invalid(n, "fold step must take (state, element), found " + g.input_type->ToString());
          }
          const auto& e = g.input_type->elements();
          ch |= Set(z.output_type, e[0], n, "state");
          if (!n.input_type) {
            ch |= Set(n.input_type, e[1].is_input() ? BlockType::Input() : BlockType::Seq(e[1]),
                      n, "input");
          }
        }
        break;
      }
      case BlockKind::kReduce: {
        BlockNode& g = kids[0].node();
        if (n.input_type) {
          const BlockType t = ElementOf(n, *n.input_type);
          ch |= Set(g.input_type, BlockType::Tuple({t, t}), n, "reducer input");
          ch |= Set(g.output_type, t, n, "reducer output");
          ch |= Set(n.output_type, t, n, "output");
        } else if (n.output_type) {
          ch |= Set(n.input_type, BlockType::Seq(*n.output_type), n, "input");
        }
        break;
      }
      case BlockKind::kSum:
        if (n.input_type) {
          const BlockType t = ElementOf(n, *n.input_type);
          if (!t.is_tensor()) {
            Invalid(n, "Sum needs a sequence of tensors, found " + n.input_type->ToString());
          }
          ch |= Set(n.output_type, t, n, "output");
        } else if (n.output_type) {
          ch |= Set(n.input_type, BlockType::Seq(*n.output_type), n, "input");
        }
        if (n.output_type && n.resolved_op.empty()) {
          auto sig = resolver_.Resolve("add", BlockType::Tuple({*n.output_type, *n.output_type}));
          n.resolved_op = sig->name;
          ch = true;
        }
        break;
      case BlockKind::kZipWith: {
        BlockNode& f = kids[0].node();
        if (n.input_type) {
          if (!n.input_type->is_tuple()) {
            Invalid(n, "ZipWith needs a tuple of sequences, found " + n.input_type->ToString());
          }
          std::vector<BlockType> elems;
          for (const BlockType& s : n.input_type->elements()) elems.push_back(ElementOf(n, s));
          ch |= Set(f.input_type, BlockType::Tuple(std::move(elems)), n, "element tuple");
        } else if (f.input_type && f.input_type->is_tuple()) {
          std::vector<BlockType> seqs;
          for (const BlockType& e : f.input_type->elements()) {
            seqs.push_back(e.is_input() ? BlockType::Input() : BlockType::Seq(e));
          }
          ch |= Set(n.input_type, BlockType::Tuple(std::move(seqs)), n, "input");
        }
        ch |= SeqLink(n, n.output_type, f.output_type);
        break;
      }
      case BlockKind::kBroadcast:
        if (n.input_type) ch |= Set(n.output_type, BlockType::Seq(*n.input_type), n, "output");
        if (n.output_type) ch |= Set(n.input_type, ElementOf(n, *n.output_type), n, "input");
        break;
      case BlockKind::kComposition:
        ch |= PropagateComposition(n);
        break;
      case BlockKind::kForwardRef: {
        BlockNode& def = n.decl->definition().node();
        ch |= Link(n.input_type, def.input_type, n, "recursive input");
        ch |= Link(n.output_type, def.output_type, n, "recursive output");
        break;
      }
    }
    return ch;
  }

  // outer = seq<inner>, propagated both ways.
  bool SeqLink(BlockNode& n, Slot& outer, Slot& inner) {
    if (inner) return Set(outer, BlockType::Seq(*inner), n, "output");
    if (outer) return Set(inner, ElementOf(n, *outer), n, "element output");
    return false;
  }

  bool TupleOfChildren(BlockNode& n) {
    bool ch = false;
    if (n.output_type) {
      if (!n.output_type->is_tuple() || n.output_type->elements().size() != n.children.size()) {
        Invalid(n, "output must be a " + std::to_string(n.children.size()) +
                       "-tuple, found " + n.output_type->ToString());
      }
      for (size_t i = 0; i < n.children.size(); ++i) {
        ch |= Set(n.children[i].node().output_type, n.output_type->elements()[i], n,
                  "element " + std::to_string(i));
      }
      return ch;
    }
    std::vector<BlockType> outs;
    for (Block& k : n.children) {
      if (!k.node().output_type) return false;
      outs.push_back(*k.node().output_type);
    }
    return Set(n.output_type, BlockType::Tuple(std::move(outs)), n, "output");
  }

  std::optional<BlockType> WireType(BlockNode& comp, const Wire& w) {
    const Slot& base = w.node == Wire::kScopeInput ? comp.input_type
                                                   : comp.children[w.node].node().output_type;
    if (!base) return std::nullopt;
    if (!w.index) return base;
    if (!base->is_tuple() || *w.index >= static_cast<int>(base->elements().size())) {
      Invalid(comp, "wire index " + std::to_string(*w.index) + " out of range for " +
                        base->ToString());
    }
    return base->elements()[*w.index];
  }

  std::optional<BlockType> ReadType(BlockNode& comp, const std::vector<Wire>& wires) {
    std::vector<BlockType> types;
    for (const Wire& w : wires) {
      auto t = WireType(comp, w);
      if (!t) return std::nullopt;
      types.push_back(*t);
    }
    if (types.empty()) return BlockType::Void();
    if (types.size() == 1) return types.front();
    return BlockType::Tuple(std::move(types));
  }

  bool PropagateComposition(BlockNode& n) {
    bool ch = false;
    for (size_t i = 0; i < n.children.size(); ++i) {
      BlockNode& c = n.children[i].node();
      const auto& reads = n.wiring.reads[i];
      if (auto t = ReadType(n, reads)) {
        ch |= Set(c.input_type, *t, n, "node #" + std::to_string(i) + " input");
      } else if (reads.size() == 1 && reads[0].node == Wire::kScopeInput &&
                 !reads[0].index && c.input_type) {
        ch |= Set(n.input_type, *c.input_type, n, "input");
      }
    }
    if (auto t = ReadType(n, n.wiring.outputs)) ch |= Set(n.output_type, *t, n, "output");
    return ch;
  }

  OpResolver& resolver_;
  std::vector<BlockNode*> nodes_;
};

}  // namespace

Block CloneBlockTree(const Block& root) {
  std::map<const ForwardDeclaration*, std::shared_ptr<ForwardDeclaration>> decls;
  std::vector<std::pair<const ForwardDeclaration*, ForwardDeclaration*>> pending;
  std::function<Block(const Block&)> clone = [&](const Block& b) -> Block {
    auto copy = std::make_shared<BlockNode>(b.node());
    for (Block& c : copy->children) c = clone(c);
    if (copy->kind == BlockKind::kForwardRef) {
      const ForwardDeclaration* old = copy->decl.get();
      auto it = decls.find(old);
      if (it == decls.end()) {
        auto fresh = ForwardDeclaration::Create(old->name());
        it = decls.emplace(old, fresh).first;
        pending.emplace_back(old, fresh.get());
      }
      copy->decl = it->second;
    }
    return Block(std::move(copy));
  };
  Block out = clone(root);
  // Definitions are cloned after the reference map exists so recursion ends.
  for (size_t i = 0; i < pending.size(); ++i) {
    auto [old, fresh] = pending[i];
    if (old->resolved()) fresh->ResolveTo(clone(old->definition()));
  }
  return out;
}

void InferTypes(const Block& root, OpResolver& resolver) {
  Inference(resolver).Run(root);
}

void ValidateBlockTree(const Block& root, std::vector<std::string>* warnings) {
  std::vector<BlockNode*> nodes = CollectNodes(root);
  for (BlockNode* n : nodes) {
    if (n->kind == BlockKind::kComposition) {
      ValidateCompositionWiring(*n);
      bool input_read = false;
      for (const auto& reads : n->wiring.reads) {
        for (const Wire& w : reads) input_read |= w.node == Wire::kScopeInput;
      }
      for (const Wire& w : n->wiring.outputs) input_read |= w.node == Wire::kScopeInput;
      if (!input_read && warnings) {
        warnings->push_back("composition input is never read at " + n->path);
      }
    }
    for (size_t i = 0; i < n->children.size(); ++i) {
      if (n->children[i].kind() != BlockKind::kConcat) continue;
      const bool ok = n->kind == BlockKind::kPipe && i + 1 < n->children.size() &&
                      n->children[i + 1].kind() == BlockKind::kFunction;
      if (!ok) {
        throw Error(ErrorCode::kValidation,
                    "Concat must be followed directly by a Function in a pipe at " +
                        n->children[i].node().path);
      }
    }
  }
  if (root.kind() == BlockKind::kConcat) {
    throw Error(ErrorCode::kValidation, "Concat cannot be a root block");
  }
}

std::vector<OpSignature> CheckSchedulable(const Block& root, OpResolver& resolver) {
  std::vector<OpSignature> out;
  std::set<std::string> seen;
  for (BlockNode* n : CollectNodes(root)) {
    if (n->kind != BlockKind::kFunction && n->kind != BlockKind::kSum) continue;
    if (n->resolved_op.empty()) {
      throw Error(ErrorCode::kValidation,
                  "operation at " + n->path + " has unpinned tensor types");
    }
    if (!seen.insert(n->resolved_op).second) continue;
    std::optional<BlockType> input = n->input_type;
    if (n->kind == BlockKind::kSum) {
      input = BlockType::Tuple({*n->output_type, *n->output_type});
    }
    auto sig = resolver.Resolve(n->resolved_op, input);
    if (!sig) {
      throw Error(ErrorCode::kValidation,
                  "operation at " + n->path + " has unpinned tensor types");
    }
    out.push_back(*sig);
  }
  return out;
}

}  // namespace dynbatch
