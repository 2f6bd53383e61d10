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

// Weave module for molecule graphs. With atom features a_i and pair
// features p_ij:
//
//   a'_i  = f_A(f_AA(a_i), sum_j f_PA(p_ij))
//   p'_ij = f_P(f_AP(a_i, a_j) + f_AP(a_j, a_i), f_PP(p_ij))
//
// Every f is an FC + relu layer; two-argument functions concatenate their
// arguments first. Input and output type: (seq<t[n]>, seq<seq<t[m]>>).

#ifndef DYNBATCH_MODELS_WEAVE_H_
#define DYNBATCH_MODELS_WEAVE_H_

#include <cstdint>
#include <string>

#include "dynbatch/block.h"
#include "dynbatch/operation.h"

namespace dynbatch::models {

struct WeaveConfig {
  int64_t atom_dim = 0;        // n
  int64_t pair_dim = 0;        // m
  int64_t atom_hidden = 0;     // f_AA and f_PA outputs
  int64_t pair_hidden = 0;     // f_AP and f_PP outputs
  int64_t atom_out = 0;        // f_A output
  int64_t pair_out = 0;        // f_P output
  DType dtype = DType::kFloat32;
  std::string prefix = "weave";
};

// Registers <prefix>/{f_a,f_p,f_a_a,f_a_p,f_p_a,f_p_p}.
Block WeaveModule(const WeaveConfig& config, OperationRegistry& registry);

// (a_i, seq<a_j>) -> seq<f_AP(a_i, a_j) + f_AP(a_j, a_i)>, f_AP given by name.
Block AtomToPairs(const std::string& f_a_p);

// {"atoms": [[..]..], "pairs": [[[..]..]..]} -> weave input.
Block MoleculeInput(int64_t atom_dim, int64_t pair_dim, DType dtype = DType::kFloat32);

}  // namespace dynbatch::models

#endif  // DYNBATCH_MODELS_WEAVE_H_
