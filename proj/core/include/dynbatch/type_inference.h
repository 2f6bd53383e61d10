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

#ifndef DYNBATCH_TYPE_INFERENCE_H_
#define DYNBATCH_TYPE_INFERENCE_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynbatch/block.h"
#include "dynbatch/types.h"

namespace dynbatch {

// Supplies operation signatures to type inference. Generic operations (e.g.
// elementwise "add") only have a signature once their input type is known.
class OpResolver {
 public:
  virtual ~OpResolver() = default;

  // Returns the concrete signature of `op` applied to `input`, or nullopt if
  // the operation is generic and `input` is not known yet. Throws
  // kValidation for unknown operation names.
  virtual std::optional<OpSignature> Resolve(
      std::string_view op, const std::optional<BlockType>& input) = 0;
};

// Deep copy of a block tree. Each forward declaration reachable from `root`
// is copied once and all copied references point at the copy.
Block CloneBlockTree(const Block& root);

// Assigns input/output BlockTypes to every block by propagating constraints
// to a fixpoint. Throws kType with "TypeMismatch at <path>: ..." or
// "Underdetermined at <path>" messages. Idempotent on an annotated tree.
void InferTypes(const Block& root, OpResolver& resolver);

// Structural checks that are not type checks: Concat placement, unresolved
// forward declarations, composition wiring. Non-fatal findings (an unread
// composition input) are appended to `warnings`.
void ValidateBlockTree(const Block& root, std::vector<std::string>* warnings);

// The operations reachable from `root`, depth-first and left-to-right, each
// listed once. Requires InferTypes to have succeeded.
std::vector<OpSignature> CheckSchedulable(const Block& root,
                                          OpResolver& resolver);

}  // namespace dynbatch

#endif  // DYNBATCH_TYPE_INFERENCE_H_
