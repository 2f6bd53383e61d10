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

// The benchmark model: a binary Tree-LSTM whose state travels as one packed
// [h;c] vector. Leaves embed straight into the packed state and internal
// nodes apply the cell to their children, so a tree with L leaves makes L
// embedding calls and L-1 cell calls.

#ifndef DYNBATCH_MODELS_TREE_RNN_H_
#define DYNBATCH_MODELS_TREE_RNN_H_

#include <cstdint>
#include <string>

#include "dynbatch/block.h"
#include "dynbatch/operation.h"

namespace dynbatch::models {

struct TreeRnnConfig {
  int64_t vocab_size = 16;
  int64_t state_dim = 64;
  DType dtype = DType::kFloat32;
  std::string prefix = "tree_rnn";
};

struct TreeRnnModel {
  std::string embedding_op;  // i32[] -> t[2s]
  std::string cell_op;       // (t[2s], t[2s]) -> t[2s]
  Block tree;                // host tree -> t[2s]
};

// Registers <prefix>/embedding and <prefix>/cell.
TreeRnnModel BuildTreeRnn(const TreeRnnConfig& config, OperationRegistry& registry);

}  // namespace dynbatch::models

#endif  // DYNBATCH_MODELS_TREE_RNN_H_
