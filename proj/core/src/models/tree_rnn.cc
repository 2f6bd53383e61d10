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

#include "dynbatch/models/tree_rnn.h"

#include "dynbatch/io/tree.h"
#include "dynbatch/ops.h"

namespace dynbatch::models {

TreeRnnModel BuildTreeRnn(const TreeRnnConfig& config, OperationRegistry& registry) {
  TreeRnnModel m;
  m.embedding_op = config.prefix + "/embedding";
  m.cell_op = config.prefix + "/cell";
  registry.Register(
      Embedding(m.embedding_op, config.vocab_size, 2 * config.state_dim, config.dtype));
  TreeLstmOptions cell;
  cell.state_dim = config.state_dim;
  cell.packed = true;
  cell.dtype = config.dtype;
  registry.Register(TreeLstmCell(m.cell_op, cell));

  auto expr = ForwardDeclaration::Create("tree");
  Block leaf = InputTransform([](const HostValue& t) { return HostValue(io::Word(t)); },
                              "word") >>
               Scalar(DType::kInt32) >> Function(m.embedding_op);
  Block pair =
      Record({{"left", (*expr)()}, {"right", (*expr)()}}) >> Function(m.cell_op);
  expr->ResolveTo(OneOf(
      [](const HostValue& t) { return HostValue(io::TreeArity(t)); },
      {{HostValue(1), leaf}, {HostValue(2), pair}}));
  m.tree = (*expr)();
  return m;
}

}  // namespace dynbatch::models
