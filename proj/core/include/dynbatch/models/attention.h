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

// Feed-forward attention over a sequence of states:
//   e_t = a(h_t),  alpha_t = exp(e_t) / sum_k exp(e_k),  c = sum_t alpha_t h_t

#ifndef DYNBATCH_MODELS_ATTENTION_H_
#define DYNBATCH_MODELS_ATTENTION_H_

#include <cstdint>
#include <string>

#include "dynbatch/block.h"
#include "dynbatch/operation.h"

namespace dynbatch::models {

// seq<t[d]> -> t[d]. `a` maps t[d] -> t[1]. Built as a composition:
//   exp_e = Map(a >> exp)
//   z     = Sum >> Broadcast          reads exp_e
//   alpha = ZipWith(div)              reads (exp_e, z)
//   c     = ZipWith(mul) >> Sum       reads (alpha, h)
Block AttentionBlock(Block a);

// Registers <name> as FC(d -> 1) and returns Function(<name>).
Block AttentionScorer(const std::string& name, int64_t d, OperationRegistry& registry,
                      DType dtype = DType::kFloat32);

// input (list of d-vectors) -> t[d]: Map(TensorInput) >> AttentionBlock(a).
Block AttentionOverHostSequence(Block a, int64_t d, DType dtype = DType::kFloat32);

}  // namespace dynbatch::models

#endif  // DYNBATCH_MODELS_ATTENTION_H_
