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

#include "dynbatch/models/text_pipeline.h"

#include <sstream>

#include "dynbatch/ops.h"

namespace dynbatch::models {

TextPipeline BuildTextPipeline(const TextPipelineConfig& config,
                               OperationRegistry& registry) {
  const Tensor& words = config.word_matrix;
  if (words.shape().rank() != 2) {
    throw Error(ErrorCode::kShape, "word matrix must be rank 2");
  }
  const int64_t e = words.shape().dim(1);
  const int64_t d = config.state_dim;
  const DType dtype = words.dtype();
  const std::string embedding = config.prefix + "/embedding";
  const std::string rnn = config.prefix + "/rnn_cell";
  const std::string logits = config.prefix + "/logits";
  registry.Register(Embedding(embedding, words));
  registry.Register(FullyConnected(rnn, d + e, d, kernels::UnaryKind::kRelu, dtype));
  registry.Register(FullyConnected(logits, d, config.num_classes, std::nullopt, dtype));

  auto word_idx = config.word_idx;
  const int64_t vocab = words.shape().dim(0);
  for (const auto& [word, id] : word_idx) {
    if (id < 0 || id >= vocab) {
      throw Error(ErrorCode::kIndex, "word '" + word + "' maps to row " +
                                         std::to_string(id) + " outside the word matrix");
    }
  }

  TextPipeline p;
  Block lookup = InputTransform(
      [word_idx](const HostValue& w) -> HostValue {
        auto it = word_idx.find(w.as_string());
        return it == word_idx.end() ? HostValue() : HostValue(it->second);
      },
      "word_idx.get");
  p.word2vec = lookup >> Optional(Scalar(DType::kInt32)) >> Function(embedding);
  Block split = InputTransform(
      [](const HostValue& text) {
        std::istringstream in(text.as_string());
        HostValue::List out;
        for (std::string w; in >> w;) out.emplace_back(std::move(w));
        return HostValue(std::move(out));
      },
      "split");
  Block rnn_cell = Concat() >> Function(rnn);
  p.text2vec = split >> Map(p.word2vec) >>
               Fold(rnn_cell, Zeros(TensorType(dtype, Shape{d})));
  p.text2logits = p.text2vec >> Function(logits);
  p.loss = Record({{"text", p.text2logits}, {"label", Scalar(DType::kInt32)}}) >>
           Function("softmax_cross_entropy");
  return p;
}

HostValue TextExample(const std::string& text, int64_t label) {
  return HostValue(HostValue::Map{{"text", HostValue(text)}, {"label", HostValue(label)}});
}

}  // namespace dynbatch::models
