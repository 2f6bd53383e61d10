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

#include "dynbatch/tracer.h"

#include <pthread.h>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <map>
#include <string>

namespace dynbatch {

TraceValue TraceValue::Host(HostValue v) {
  TraceValue t;
  t.kind = Kind::kHost;
  t.host = std::move(v);
  return t;
}

TraceValue TraceValue::Tensor(NodeRef ref, TensorType type) {
  TraceValue t;
  t.kind = Kind::kTensor;
  t.ref = ref;
  t.type = std::move(type);
  return t;
}

TraceValue TraceValue::Tuple(std::vector<TraceValue> items) {
  TraceValue t;
  t.kind = Kind::kTuple;
  t.items = std::move(items);
  return t;
}

TraceValue TraceValue::Seq(std::vector<TraceValue> items) {
  TraceValue t;
  t.kind = Kind::kSeq;
  t.items = std::move(items);
  return t;
}

TraceValue TraceValue::Broadcast(TraceValue element) {
  TraceValue t;
  t.kind = Kind::kBroadcast;
  t.items.push_back(std::move(element));
  return t;
}

void TraceValue::CollectRefs(std::vector<NodeRef>* out) const {
  switch (kind) {
    case Kind::kTensor:
      out->push_back(ref);
      break;
    case Kind::kConcat:
    case Kind::kTuple:
    case Kind::kSeq:
      for (const TraceValue& v : items) v.CollectRefs(out);
      break;
    case Kind::kBroadcast:
      throw Error(ErrorCode::kTrace,
                  "an unbounded Broadcast sequence cannot be materialized");
    case Kind::kVoid:
    case Kind::kHost:
      break;
  }
}

namespace {

// Elements of a sequence-valued input. A Broadcast is unbounded and carries
// only its repeated element.
struct SeqView {
  bool unbounded = false;
  std::vector<TraceValue> items;
  TraceValue element;
};

class Tracer {
 public:
  Tracer(std::span<const OpSignature> ops, const TraceOptions& options)
      : ops_(ops), options_(options) {
    for (size_t i = 0; i < ops.size(); ++i) {
      op_index_.emplace(ops[i].name, static_cast<int32_t>(i));
    }
  }

  InvocationGraph& graph() { return graph_; }

  TraceValue Run(const BlockNode& n, const TraceValue& in) { return Apply(n, in); }

 private:
  [[noreturn]] static void Fail(const BlockNode& n, const std::string& message) {
    throw Error(ErrorCode::kTrace, message + " at " + n.path);
  }

  TraceValue Constant(Tensor value) {
    TensorType type(value.dtype(), value.shape());
    const int32_t id = graph_.AddConstant(std::move(value));
    return TraceValue::Tensor(NodeRef{id, 0}, std::move(type));
  }

  TraceValue ZerosOf(const BlockNode& n, const BlockType& type) {
    if (type.is_tensor()) {
      return Constant(Tensor(type.tensor_type().dtype, type.tensor_type().shape));
    }
    if (type.is_tuple()) {
      std::vector<TraceValue> items;
      for (const BlockType& e : type.elements()) items.push_back(ZerosOf(n, e));
      return TraceValue::Tuple(std::move(items));
    }
    if (type.is_void()) return TraceValue::Void();
    Fail(n, "cannot build zeros of type " + type.ToString());
  }

  const HostValue& HostOf(const BlockNode& n, const TraceValue& v) {
    if (v.kind != TraceValue::Kind::kHost) {
      Fail(n, std::string(BlockKindName(n.kind)) + " needs a host input");
    }
    return v.host;
  }

  SeqView AsSeq(const BlockNode& n, const TraceValue& v) {
    SeqView s;
    switch (v.kind) {
      case TraceValue::Kind::kSeq:
        s.items = v.items;
        return s;
      case TraceValue::Kind::kBroadcast:
        s.unbounded = true;
        s.element = v.items.front();
        return s;
      case TraceValue::Kind::kHost:
        if (v.host.is_list()) {
          for (const HostValue& h : v.host.as_list()) s.items.push_back(TraceValue::Host(h));
          return s;
        }
        Fail(n, "expected a sequence, found host " + v.host.TypeName());
      default:
        Fail(n, "expected a sequence input");
    }
  }

  std::vector<TraceValue> Bounded(const BlockNode& n, const TraceValue& v) {
    SeqView s = AsSeq(n, v);
    if (s.unbounded) {
      Fail(n, "an unbounded Broadcast sequence cannot be consumed by " +
                  std::string(BlockKindName(n.kind)));
    }
    return std::move(s.items);
  }

  void FlattenSlots(const BlockNode& n, const TraceValue& v,
                    std::vector<InputSlot>* slots) {
    switch (v.kind) {
      case TraceValue::Kind::kTensor:
        slots->push_back(InputSlot{{v.ref}});
        return;
      case TraceValue::Kind::kConcat: {
        InputSlot slot;
        for (const TraceValue& p : v.items) slot.parts.push_back(p.ref);
        slots->push_back(std::move(slot));
        return;
      }
      case TraceValue::Kind::kTuple:
        for (const TraceValue& item : v.items) FlattenSlots(n, item, slots);
        return;
      default:
        Fail(n, "operation inputs must be tensors");
    }
  }

  TraceValue Invoke(const BlockNode& n, const std::string& op, const TraceValue& in) {
    auto it = op_index_.find(op);
    if (it == op_index_.end()) Fail(n, "operation '" + op + "' is not enumerated");
    const OpSignature& sig = ops_[it->second];
    std::vector<InputSlot> slots;
    FlattenSlots(n, in, &slots);
    if (slots.size() != sig.inputs.size()) {
      Fail(n, "operation '" + op + "' takes " + std::to_string(sig.inputs.size()) +
                  " inputs, got " + std::to_string(slots.size()));
    }
    const int32_t id = graph_.AddInvocation(it->second, std::move(slots), sig.outputs);
    if (sig.outputs.size() == 1) {
      return TraceValue::Tensor(NodeRef{id, 0}, sig.outputs[0]);
    }
    std::vector<TraceValue> outs;
    for (size_t k = 0; k < sig.outputs.size(); ++k) {
      outs.push_back(TraceValue::Tensor(NodeRef{id, static_cast<int32_t>(k)}, sig.outputs[k]));
    }
    return TraceValue::Tuple(std::move(outs));
  }

  TraceValue Scalar(const BlockNode& n, const HostValue& h) {
    if (h.is_number() || h.is_bool()) {
      const double v = h.is_bool() ? (h.as_bool() ? 1.0 : 0.0) : h.as_number();
      return Constant(Tensor::FromDoubles(n.dtype, Shape{}, {v}));
    }
    if (h.is_tensor() && h.as_tensor().num_elements() == 1) {
      return Constant(Tensor::FromDoubles(n.dtype, Shape{}, h.as_tensor().ToDoubles()));
    }
    Fail(n, "Scalar expects a number, found host " + h.TypeName());
  }

  static void FlattenNumbers(const HostValue& h, size_t level,
                             std::vector<int64_t>* dims, std::vector<double>* out,
                             bool* ok) {
    if (h.is_number()) {
      *ok &= level == dims->size();
      out->push_back(h.as_number());
      return;
    }
    if (!h.is_list()) {
      *ok = false;
      return;
    }
    const auto& list = h.as_list();
    if (level == dims->size()) {
      dims->push_back(static_cast<int64_t>(list.size()));
    } else if (level > dims->size() || (*dims)[level] != static_cast<int64_t>(list.size())) {
      *ok = false;
      return;
    }
    for (const HostValue& e : list) FlattenNumbers(e, level + 1, dims, out, ok);
  }

  TraceValue TensorInput(const BlockNode& n, const HostValue& h) {
    const TensorType& t = n.tensor_type;
    if (h.is_tensor()) {
      const dynbatch::Tensor& v = h.as_tensor();
      if (v.num_elements() != t.shape.num_elements() ||
          (v.shape() != t.shape && v.shape().rank() != 0 && t.shape.rank() != 0)) {
        Fail(n, "host tensor of shape " + v.shape().ToString() + " does not match " +
                    t.ToString());
      }
      return Constant(v.Cast(t.dtype).Reshaped(t.shape));
    }
    std::vector<int64_t> dims;
    std::vector<double> values;
    bool ok = true;
    FlattenNumbers(h, 0, &dims, &values, &ok);
    if (!ok || Shape(dims) != t.shape) {
      Fail(n, "host value " + h.DebugString() + " does not match " + t.ToString());
    }
    return Constant(Tensor::FromDoubles(t.dtype, t.shape, values));
  }

  TraceValue Record(const BlockNode& n, const HostValue& h) {
    std::vector<TraceValue> items;
    for (size_t i = 0; i < n.children.size(); ++i) {
      const HostValue* field = nullptr;
      if (h.is_map()) {
        field = h.Find(n.labels[i]);
        if (field == nullptr) Fail(n, "host input has no field '" + n.labels[i] + "'");
      } else if (h.is_list()) {
        if (i >= h.as_list().size()) {
          Fail(n, "host list has no element for field '" + n.labels[i] + "'");
        }
        field = &h.as_list()[i];
      } else {
        Fail(n, "Record expects a host map or list, found " + h.TypeName());
      }
      items.push_back(Apply(n.children[i].node(), TraceValue::Host(*field)));
    }
    return TraceValue::Tuple(std::move(items));
  }

  TraceValue OneOf(const BlockNode& n, const HostValue& h) {
    const HostValue key = n.host_fn(h);
    for (size_t i = 0; i < n.case_keys.size(); ++i) {
      if (n.case_keys[i] == key) return Apply(n.children[i].node(), TraceValue::Host(h));
    }
    Fail(n, "OneOf has no case for key " + key.DebugString());
  }

  TraceValue Reduce(const BlockNode& g, std::span<const TraceValue> xs,
                    const std::string* op) {
    if (xs.size() == 1) return xs.front();
    const size_t half = xs.size() / 2;
    TraceValue pair = TraceValue::Tuple(
        {Reduce(g, xs.first(half), op), Reduce(g, xs.subspan(half), op)});
    return op ? Invoke(g, *op, pair) : Apply(g, pair);
  }

  TraceValue ReadWire(const BlockNode& n, const Wire& w, const TraceValue& input,
                      const std::vector<TraceValue>& values) {
    const TraceValue& base = w.node == Wire::kScopeInput ? input : values[w.node];
    if (!w.index) return base;
    const size_t i = static_cast<size_t>(*w.index);
    if (base.kind == TraceValue::Kind::kTuple && i < base.items.size()) {
      return base.items[i];
    }
    if (base.kind == TraceValue::Kind::kHost && base.host.is_list() &&
        i < base.host.as_list().size()) {
      return TraceValue::Host(base.host.as_list()[i]);
    }
    Fail(n, "wire index " + std::to_string(i) + " is out of range");
  }

  TraceValue ReadWires(const BlockNode& n, const std::vector<Wire>& wires,
                       const TraceValue& input, const std::vector<TraceValue>& values) {
    if (wires.empty()) return TraceValue::Void();
    if (wires.size() == 1) return ReadWire(n, wires[0], input, values);
    std::vector<TraceValue> items;
    for (const Wire& w : wires) items.push_back(ReadWire(n, w, input, values));
    return TraceValue::Tuple(std::move(items));
  }

  TraceValue Apply(const BlockNode& n, const TraceValue& in) {
    switch (n.kind) {
      case BlockKind::kScalar:
        return Scalar(n, HostOf(n, in));
      case BlockKind::kTensorInput:
        return TensorInput(n, HostOf(n, in));
      case BlockKind::kFunction:
        return Invoke(n, n.resolved_op, in);
      case BlockKind::kInputTransform:
        return TraceValue::Host(n.host_fn(HostOf(n, in)));
      case BlockKind::kZeros:
        return ZerosOf(n, *n.output_type);
      case BlockKind::kConcat: {
        std::vector<NodeRef> refs;
        in.CollectRefs(&refs);
        TraceValue v;
        v.kind = TraceValue::Kind::kConcat;
        v.type = n.output_type->tensor_type();
        for (NodeRef r : refs) v.items.push_back(TraceValue::Tensor(r, graph_.TypeOf(r)));
        return v;
      }
      case BlockKind::kGetItem:
        if (in.kind != TraceValue::Kind::kTuple ||
            n.item_index >= static_cast<int>(in.items.size())) {
          Fail(n, "GetItem expects a tuple");
        }
        return in.items[n.item_index];
      case BlockKind::kPipe: {
        TraceValue v = in;
        for (const Block& c : n.children) v = Apply(c.node(), v);
        return v;
      }
      case BlockKind::kRecord:
        return Record(n, HostOf(n, in));
      case BlockKind::kOneOf:
        return OneOf(n, HostOf(n, in));
      case BlockKind::kOptional:
        if (HostOf(n, in).is_null()) return ZerosOf(n, *n.output_type);
        return Apply(n.children[0].node(), in);
      case BlockKind::kAllOf: {
        std::vector<TraceValue> items;
        for (const Block& c : n.children) items.push_back(Apply(c.node(), in));
        return TraceValue::Tuple(std::move(items));
      }
      case BlockKind::kMap: {
        SeqView s = AsSeq(n, in);
        const BlockNode& f = n.children[0].node();
        // Every element of a broadcast is the same, so f runs once.
        if (s.unbounded) return TraceValue::Broadcast(Apply(f, s.element));
        std::vector<TraceValue> out;
        out.reserve(s.items.size());
        for (const TraceValue& x : s.items) out.push_back(Apply(f, x));
        return TraceValue::Seq(std::move(out));
      }
      case BlockKind::kFold: {
        const BlockNode& g = n.children[0].node();
        TraceValue state = Apply(n.children[1].node(), TraceValue::Void());
        for (TraceValue& x : Bounded(n, in)) {
          state = Apply(g, TraceValue::Tuple({std::move(state), std::move(x)}));
        }
        return state;
      }
      case BlockKind::kReduce: {
        std::vector<TraceValue> xs = Bounded(n, in);
        if (xs.empty()) Fail(n, "Reduce of an empty sequence");
        return Reduce(n.children[0].node(), xs, nullptr);
      }
      case BlockKind::kSum: {
        std::vector<TraceValue> xs = Bounded(n, in);
        if (xs.empty()) return ZerosOf(n, *n.output_type);
        return Reduce(n, xs, &n.resolved_op);
      }
      case BlockKind::kZipWith: {
        if (in.kind != TraceValue::Kind::kTuple) Fail(n, "ZipWith expects a tuple of sequences");
        std::vector<SeqView> seqs;
        size_t length = SIZE_MAX;
        for (const TraceValue& item : in.items) {
          seqs.push_back(AsSeq(n, item));
          if (!seqs.back().unbounded) length = std::min(length, seqs.back().items.size());
        }
        if (length == SIZE_MAX) Fail(n, "ZipWith over only unbounded sequences");
        const BlockNode& f = n.children[0].node();
        std::vector<TraceValue> out;
        out.reserve(length);
        for (size_t i = 0; i < length; ++i) {
          std::vector<TraceValue> args;
          for (const SeqView& s : seqs) args.push_back(s.unbounded ? s.element : s.items[i]);
          out.push_back(Apply(f, TraceValue::Tuple(std::move(args))));
        }
        return TraceValue::Seq(std::move(out));
      }
      case BlockKind::kBroadcast:
        return TraceValue::Broadcast(in);
      case BlockKind::kComposition: {
        std::vector<TraceValue> values(n.children.size());
        for (int i : CompositionTopologicalOrder(n)) {
          values[i] = Apply(n.children[i].node(),
                            ReadWires(n, n.wiring.reads[i], in, values));
        }
        return ReadWires(n, n.wiring.outputs, in, values);
      }
      case BlockKind::kForwardRef: {
        if (!n.decl || !n.decl->resolved()) Fail(n, "unresolved forward declaration");
        if (++depth_ > options_.max_recursion_depth) {
          Fail(n, "trace recursion depth exceeded the limit of " +
                      std::to_string(options_.max_recursion_depth));
        }
        TraceValue v = Apply(n.decl->definition().node(), in);
        --depth_;
        return v;
      }
    }
    Fail(n, "unknown block kind");
  }

  std::span<const OpSignature> ops_;
  TraceOptions options_;
  std::map<std::string, int32_t, std::less<>> op_index_;
  InvocationGraph graph_;
  int depth_ = 0;
};

}  // namespace

TracedGraph Trace(const Block& root, const HostValue& input,
                  std::span<const OpSignature> ops, const TraceOptions& options) {
  Tracer tracer(ops, options);
  TracedGraph out;
  out.output = tracer.Run(root.node(), TraceValue::Host(input));
  out.graph = std::move(tracer.graph());
  out.output.CollectRefs(&out.graph.results());
  return out;
}

namespace {

struct ThreadArgs {
  const std::function<void()>* fn;
  std::exception_ptr error;
};

void* ThreadMain(void* p) {
  auto* args = static_cast<ThreadArgs*>(p);
  try {
    (*args->fn)();
  } catch (...) {
    args->error = std::current_exception();
  }
  return nullptr;
}

}  // namespace

void RunWithLargeStack(const std::function<void()>& fn, size_t stack_bytes) {
  pthread_attr_t attr;
  pthread_attr_init(&attr);
  pthread_attr_setstacksize(&attr, stack_bytes);
  ThreadArgs args{&fn, nullptr};
  pthread_t thread;
  const int rc = pthread_create(&thread, &attr, &ThreadMain, &args);
  pthread_attr_destroy(&attr);
  if (rc != 0) {
    // No thread available: run inline.
    fn();
    return;
  }
  pthread_join(thread, nullptr);
  if (args.error) std::rethrow_exception(args.error);
}

}  // namespace dynbatch
