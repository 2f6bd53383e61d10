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

#include "dynbatch/models/attention.h"

#include "dynbatch/ops.h"

namespace dynbatch::models {

Block AttentionBlock(Block a) {
  Composition attention;
  Wire h = attention.input();
  Wire exp_e = attention.Add(Map(std::move(a) >> Function("exp")), {h});
  Wire z = attention.Add(Sum() >> Broadcast(), {exp_e});
  Wire alpha = attention.Add(ZipWith(Function("div")), {exp_e, z});
  Wire c = attention.Add(ZipWith(Function("mul")) >> Sum(), {alpha, h});
  attention.SetOutput({c});
  return attention.Build().WithName("attention");
}

Block AttentionScorer(const std::string& name, int64_t d, OperationRegistry& registry,
                      DType dtype) {
  registry.Register(FullyConnected(name, d, 1, std::nullopt, dtype));
  return Function(name);
}

Block AttentionOverHostSequence(Block a, int64_t d, DType dtype) {
  return Map(TensorInput(TensorType(dtype, Shape{d}))) >> AttentionBlock(std::move(a));
}

}  // namespace dynbatch::models
