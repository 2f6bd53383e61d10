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

// Sentence classification pipeline: words are embedded, folded left to right
// with an RNN cell, and classified.
//
//   word2vec    = InputTransform(lookup) >> Optional(Scalar(i32)) >> Embedding
//   split       = InputTransform(str.split)
//   rnn_cell    = Concat() >> FC(d, relu)          (state, then input)
//   text2vec    = split >> Map(word2vec) >> Fold(rnn_cell, Zeros(d))
//   text2logits = text2vec >> FC(n)
//   loss        = Record(text: text2logits, label: Scalar(i32))
//                   >> softmax_cross_entropy

#ifndef DYNBATCH_MODELS_TEXT_PIPELINE_H_
#define DYNBATCH_MODELS_TEXT_PIPELINE_H_

#include <cstdint>
#include <map>
#include <string>

#include "dynbatch/block.h"
#include "dynbatch/operation.h"

namespace dynbatch::models {

struct TextPipelineConfig {
  // Rows are word vectors. Row 0 doubles as the unknown-word vector, so
  // word_idx should map real words to ids >= 1.
  Tensor word_matrix;
  std::map<std::string, int64_t> word_idx;
  int64_t state_dim = 16;   // d
  int64_t num_classes = 2;  // n
  std::string prefix = "text";
};

struct TextPipeline {
  Block word2vec;     // input -> f[e]
  Block text2vec;     // input -> f[d]
  Block text2logits;  // input -> f[n]
  Block loss;         // {"text", "label"} -> f[]
};

// Registers <prefix>/embedding, <prefix>/rnn_cell and <prefix>/logits.
TextPipeline BuildTextPipeline(const TextPipelineConfig& config,
                               OperationRegistry& registry);

// {"text": text, "label": label}.
HostValue TextExample(const std::string& text, int64_t label);

}  // namespace dynbatch::models

#endif  // DYNBATCH_MODELS_TEXT_PIPELINE_H_
