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

// Built-in operations.

#ifndef DYNBATCH_OPS_H_
#define DYNBATCH_OPS_H_

#include <memory>
#include <optional>
#include <string>

#include "dynbatch/kernels.h"
#include "dynbatch/operation.h"

namespace dynbatch {

// i32[] -> dtype[dim]: row lookup in the table parameter `name`. With a
// given table the parameter starts from it, else Glorot-uniform.
std::unique_ptr<Operation> Embedding(const std::string& name, int64_t vocab,
                                     int64_t dim, DType dtype = DType::kFloat32);
std::unique_ptr<Operation> Embedding(const std::string& name, Tensor table);

// dtype[in] -> dtype[out]: act(x W + b) with parameters name/weights
// (in x out) and name/bias (out).
std::unique_ptr<Operation> FullyConnected(
    const std::string& name, int64_t in_dim, int64_t out_dim,
    std::optional<kernels::UnaryKind> activation = std::nullopt,
    DType dtype = DType::kFloat32);

// The binary Tree-LSTM cell:
//   i   = s(W_i x + U_i^L h_L + U_i^R h_R + b_i)
//   f_k = s(W_f x + U_fk^L h_L + U_fk^R h_R + b_f),  k in {L, R}
//   o   = s(W_o x + U_o^L h_L + U_o^R h_R + b_o)
//   u   = tanh(W_u x + U_u^L h_L + U_u^R h_R + b_u)
//   c   = i*u + f_L*c_L + f_R*c_R,   h = o*tanh(c)
// Parameters (fused): name/W (input x 4s, gate blocks i|f|o|u),
// name/U (2s x 5s: rows U^L over U^R, column blocks i|f_L|f_R|o|u) and
// name/b (4s).
//
// Unpacked: (x[e], h_L[s], c_L[s], h_R[s], c_R[s]) -> (h[s], c[s]).
// Packed (input_dim 0, no x term): ([h_L;c_L][2s], [h_R;c_R][2s]) -> [h;c][2s].
struct TreeLstmOptions {
  int64_t input_dim = 0;
  int64_t state_dim = 0;
  bool packed = false;
  DType dtype = DType::kFloat32;
};
std::unique_ptr<Operation> TreeLstmCell(const std::string& name,
                                        const TreeLstmOptions& options);

}  // namespace dynbatch

#endif  // DYNBATCH_OPS_H_
