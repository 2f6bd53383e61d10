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

// Parameter checkpoints: a text manifest followed by a little-endian binary
// payload. The layout is described in docs/checkpoint_format.md.

#ifndef DYNBATCH_CHECKPOINT_H_
#define DYNBATCH_CHECKPOINT_H_

#include <iosfwd>
#include <string>

#include "dynbatch/parameters.h"

namespace dynbatch {

void WriteCheckpoint(const ParameterStore& params, std::ostream& out);
ParameterStore ReadCheckpoint(std::istream& in);

// File forms; throw kIO when the file cannot be opened or is malformed.
void SaveCheckpoint(const ParameterStore& params, const std::string& path);
ParameterStore LoadCheckpoint(const std::string& path);

}  // namespace dynbatch

#endif  // DYNBATCH_CHECKPOINT_H_
