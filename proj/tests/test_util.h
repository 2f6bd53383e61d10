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

#ifndef DYNBATCH_TESTS_TEST_UTIL_H_
#define DYNBATCH_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dynbatch/block.h"
#include "dynbatch/compiler.h"
#include "dynbatch/graph.h"
#include "dynbatch/host_value.h"
#include "dynbatch/parameters.h"
#include "dynbatch/schedule.h"
#include "dynbatch/tensor.h"

namespace dynbatch::testing {

// max|a - b| / max|b| over all elements (max|a - b| when b is all zeros).
double MaxRelErr(const Tensor& a, const Tensor& b);
double MaxRelErr(const std::vector<Tensor>& a, const std::vector<Tensor>& b);

Tensor RandomTensor(DType dtype, const Shape& shape, std::mt19937_64& rng,
                    double scale = 1.0);

// Binary tree over word ids: a leaf is an int, a pair is a 2-element list.
// Leaves go through Scalar >> Function(embed), pairs through
// Record(left, right) >> Function(cell).
Block ToyTreeBlock(const std::string& embed, const std::string& cell);

// ((1 3) 5): the three-leaf tree used throughout the depth examples.
HostValue Figure1Tree();

// Random binary tree with `leaves` leaves; word ids in [0, vocab).
HostValue RandomHostTree(int leaves, int vocab, std::mt19937_64& rng);

// Replaces every floating parameter with uniform values in [-scale, scale].
void RandomizeParameters(ParameterStore& params, std::mt19937_64& rng, double scale = 0.5);

// Random DAG over three operations, with A = f32[2] and B = f32[3]:
//   op0: (A) -> A,  op1: (A, B) -> B,  op2: (B) -> (A, B).
InvocationGraph RandomInvocationGraph(std::mt19937_64& rng, int max_nodes);
const std::vector<std::string>& RandomGraphOpNames();  // op0, op1, op2

// AssignDepths, InsertPassThroughs and BuildSchedule in sequence.
Schedule LowerGraph(const InvocationGraph& g, const std::vector<std::string>& op_names,
                    InvocationGraph* with_pass = nullptr,
                    std::vector<int32_t>* depths = nullptr);

// Lowers a graph from RandomInvocationGraph and checks the schedule: every
// edge spans one depth, every invocation sits in exactly one group at its
// depth, gather indices and labels index real rows, and a rebuild dumps the
// same bytes. Returns "" or the first violation.
std::string ScheduleViolation(const InvocationGraph& g);

// How GradientCheck turns differences into one relative error.
enum class ErrorScale {
  // Worst over parameters of max|analytic - numeric| / max|numeric| within
  // that parameter.
  kPerTensor,
  // max|analytic - numeric| / max|numeric| over the whole gradient vector;
  // well defined when some parameter's exact gradient is zero.
  kWholeGradient,
};

// Central finite differences of the model's mean loss with respect to every
// parameter element, compared with the analytic gradient. `worst` receives
// the parameter with the largest error.
double GradientCheck(const CompiledModel& model, const std::vector<HostValue>& batch,
                     ParameterStore& params, double step = 1e-5,
                     std::string* worst = nullptr,
                     ErrorScale scale = ErrorScale::kPerTensor);

}  // namespace dynbatch::testing

#endif  // DYNBATCH_TESTS_TEST_UTIL_H_
