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

// Small end-to-end runs of the four model families on user files.

#ifndef DYNBATCH_TOOLS_DEMOS_H_
#define DYNBATCH_TOOLS_DEMOS_H_

#include <cstdint>
#include <ostream>
#include <string>

namespace dynbatch::tools {

struct DemoOptions {
  std::string model;  // pipeline, attention, treelstm, weave
  std::string input;
  int epochs = 0;
  double learning_rate = 0.01;
  int64_t state_size = 16;
  uint64_t seed = 1;
  bool dump_block = false;
  bool dump_schedule = false;
};

// Input formats:
//   pipeline   lines "<label>\t<text>"
//   attention  JSON lines {"sequence": [[..], ..], "label": k}
//   treelstm   labeled s-expressions, e.g. 3:(2:(w1 w3) 1:w5)
//   weave      JSON lines {"atoms": .., "pairs": .., "label": k}
// Prints the dumps, the per-epoch loss and accuracy, then one prediction per
// input. Returns the process exit code.
int RunDemo(const DemoOptions& options, std::ostream& out);

}  // namespace dynbatch::tools

#endif  // DYNBATCH_TOOLS_DEMOS_H_
