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

#include "dynbatch/models/tree_lstm.h"

#include <algorithm>

#include "dynbatch/io/tree.h"
#include "dynbatch/ops.h"

namespace dynbatch::models {
namespace {

HostValue ArityKey(const HostValue& tree) { return HostValue(io::TreeArity(tree)); }

Block Field(const char* name, HostValue (*fn)(const HostValue&)) {
  return InputTransform([fn](const HostValue& v) { return fn(v); }, name);
}

HostValue WordOf(const HostValue& t) { return HostValue(io::Word(t)); }
HostValue LeftOf(const HostValue& t) { return io::Left(t); }
HostValue RightOf(const HostValue& t) { return io::Right(t); }
HostValue LabelOf(const HostValue& t) {
  const std::optional<int64_t> label = io::Label(t);
  if (!label) throw Error(ErrorCode::kIO, "tree node has no label");
  return HostValue(*label);
}

}  // namespace

TreeLstmModel BuildTreeLstm(const TreeLstmConfig& config, OperationRegistry& registry) {
  const std::string embedding = config.prefix + "/embedding";
  const std::string cell = config.prefix + "/cell";
  const std::string head = config.prefix + "/head";
  int64_t e = config.embedding_dim;
  if (config.word_matrix.shape().rank() == 2) {
    e = config.word_matrix.shape().dim(1);
    registry.Register(Embedding(embedding, config.word_matrix));
  } else {
    registry.Register(Embedding(embedding, config.vocab_size, e, config.dtype));
  }
  const int64_t s = config.state_dim;
  TreeLstmOptions cell_options;
  cell_options.input_dim = e;
  cell_options.state_dim = s;
  cell_options.dtype = config.dtype;
  registry.Register(TreeLstmCell(cell, cell_options));
  registry.Register(
      FullyConnected(head, s, config.num_classes, std::nullopt, config.dtype));

  const BlockType state = BlockType::Tensor(config.dtype, Shape{s});
  const BlockType zero_pair = BlockType::Tuple({state, state});
  Block word = Field("word", WordOf) >> Scalar(DType::kInt32) >> Function(embedding);
  Block label = Field("label", LabelOf) >> Scalar(DType::kInt32);
  Block xent = Function("softmax_cross_entropy");

  TreeLstmModel m;
  {
    auto expr = ForwardDeclaration::Create("tree");
    Block leaf = AllOf({word, Zeros(zero_pair), Zeros(zero_pair)}) >> Function(cell);
    Block pair = AllOf({Zeros(TensorType(config.dtype, Shape{e})),
                        Field("left", LeftOf) >> (*expr)(),
                        Field("right", RightOf) >> (*expr)()}) >>
                 Function(cell);
    expr->ResolveTo(OneOf(ArityKey, {{HostValue(1), leaf}, {HostValue(2), pair}}));
    m.tree_states = (*expr)();
  }
  m.root_logits = m.tree_states >> GetItem(0) >> Function(head);
  m.root_loss = AllOf({m.root_logits, label}) >> xent;

  // The all-node recursion returns (h, c, loss of the subtree).
  auto expr = ForwardDeclaration::Create("labeled_tree");
  auto node_loss = [&](Composition& c, Wire h, Wire in) {
    Wire logits = c.Add(Function(head), {h});
    Wire y = c.Add(label, {in});
    return c.Add(xent, {logits, y});
  };
  Composition leaf;
  {
    Wire in = leaf.input();
    Wire x = leaf.Add(word, {in});
    Wire zero = leaf.Add(Zeros(state), {in});
    Wire hc = leaf.Add(Function(cell), {x, zero, zero, zero, zero});
    leaf.SetOutput({hc[0], hc[1], node_loss(leaf, hc[0], in)});
  }
  Composition pair;
  {
    Wire in = pair.input();
    Wire l = pair.Add(Field("left", LeftOf) >> (*expr)(), {in});
    Wire r = pair.Add(Field("right", RightOf) >> (*expr)(), {in});
    Wire x = pair.Add(Zeros(TensorType(config.dtype, Shape{e})), {in});
    Wire hc = pair.Add(Function(cell), {x, l[0], l[1], r[0], r[1]});
    Wire kids = pair.Add(Function("add"), {l[2], r[2]});
    Wire loss = pair.Add(Function("add"), {kids, node_loss(pair, hc[0], in)});
    pair.SetOutput({hc[0], hc[1], loss});
  }
  expr->ResolveTo(OneOf(ArityKey, {{HostValue(1), leaf.Build()},
                                   {HostValue(2), pair.Build()}}));
  m.all_node_loss = (*expr)() >> GetItem(2);
  return m;
}

int64_t WordSentiment(int64_t word) { return word % 5 - 2; }

namespace {

// Returns the labeled tree and its leaf score sum.
std::pair<HostValue, int64_t> Relabel(const HostValue& t) {
  if (io::IsLeaf(t)) {
    const int64_t score = WordSentiment(io::Word(t));
    return {io::MakeLeaf(io::Word(t), std::clamp<int64_t>(score, -2, 2) + 2), score};
  }
  auto [l, ls] = Relabel(io::Left(t));
  auto [r, rs] = Relabel(io::Right(t));
  const int64_t score = ls + rs;
  return {io::MakePair(l, r, std::clamp<int64_t>(score, -2, 2) + 2), score};
}

HostValue RandomTree(int64_t leaves, int64_t vocab, std::mt19937_64& rng) {
  if (leaves == 1) {
    return io::MakeLeaf(std::uniform_int_distribution<int64_t>(0, vocab - 1)(rng));
  }
  const int64_t left = std::uniform_int_distribution<int64_t>(1, leaves - 1)(rng);
  HostValue l = RandomTree(left, vocab, rng);
  return io::MakePair(l, RandomTree(leaves - left, vocab, rng));
}

}  // namespace

HostValue LabelBySentiment(const HostValue& tree) { return Relabel(tree).first; }

std::vector<HostValue> SyntheticSentimentTrees(int64_t count,
                                               const SentimentDataOptions& options,
                                               std::mt19937_64& rng) {
  if (options.min_leaves < 1 || options.max_leaves < options.min_leaves ||
      options.vocab_size < 1) {
    throw Error(ErrorCode::kConfig, "invalid sentiment data options");
  }
  std::vector<HostValue> out;
  out.reserve(count);
  std::uniform_int_distribution<int64_t> size(options.min_leaves, options.max_leaves);
  for (int64_t i = 0; i < count; ++i) {
    out.push_back(LabelBySentiment(RandomTree(size(rng), options.vocab_size, rng)));
  }
  return out;
}

}  // namespace dynbatch::models
