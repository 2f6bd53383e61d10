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

// Binary Tree-LSTM sentiment model over host trees (see io/tree.h):
//
//   expr = ForwardDeclaration
//   word = AllOf(Embedding(word), Zeros((s, s)), Zeros((s, s))) >> cell
//   pair = AllOf(Zeros(e), left >> expr, right >> expr) >> cell
//   expr.ResolveTo(OneOf(arity, {1: word, 2: pair}))
//
// with a classification head FC(s -> classes) on h.

#ifndef DYNBATCH_MODELS_TREE_LSTM_H_
#define DYNBATCH_MODELS_TREE_LSTM_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dynbatch/block.h"
#include "dynbatch/host_value.h"
#include "dynbatch/operation.h"

namespace dynbatch::models {

struct TreeLstmConfig {
  // Either a given embedding table (vocab x embedding_dim) or a fresh one.
  Tensor word_matrix;
  int64_t vocab_size = 0;
  int64_t embedding_dim = 0;
  int64_t state_dim = 8;
  int64_t num_classes = 5;
  DType dtype = DType::kFloat32;
  std::string prefix = "tree_lstm";
};

struct TreeLstmModel {
  Block tree_states;  // input -> (h[s], c[s])
  Block root_logits;  // input -> f[classes]
  Block root_loss;    // input -> f[], needs a root label
  // input -> f[], sum of the losses at every node; every node needs a label.
  Block all_node_loss;
};

// Registers <prefix>/embedding, <prefix>/cell and <prefix>/head.
TreeLstmModel BuildTreeLstm(const TreeLstmConfig& config, OperationRegistry& registry);

// Synthetic sentiment data. Every word w carries a hidden score
// (w mod 5) - 2 and every node is labeled clamp(sum of its leaf scores,
// -2, 2) + 2, so labels are a deterministic function of the tree.
struct SentimentDataOptions {
  int64_t vocab_size = 20;
  int64_t min_leaves = 1;
  int64_t max_leaves = 8;
};
int64_t WordSentiment(int64_t word);
std::vector<HostValue> SyntheticSentimentTrees(int64_t count,
                                               const SentimentDataOptions& options,
                                               std::mt19937_64& rng);
// Relabels every node of a tree with the hidden rule.
HostValue LabelBySentiment(const HostValue& tree);

}  // namespace dynbatch::models

#endif  // DYNBATCH_MODELS_TREE_LSTM_H_
