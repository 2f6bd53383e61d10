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

// Molecules as JSON lines: {"atoms": [[...] x N], "pairs": [[[...] x N] x N]}.

#ifndef DYNBATCH_IO_MOLECULE_H_
#define DYNBATCH_IO_MOLECULE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynbatch/host_value.h"

namespace dynbatch::io {

struct Molecule {
  std::vector<std::vector<double>> atoms;               // N x n
  std::vector<std::vector<std::vector<double>>> pairs;  // N x N x m
  std::optional<int64_t> label;                         // optional class

  size_t num_atoms() const { return atoms.size(); }
  size_t atom_features() const { return atoms.empty() ? 0 : atoms[0].size(); }
  size_t pair_features() const;
};

// Throws kIO on malformed JSON, ragged features, a pair table that is not
// N x N, or an asymmetric pair table (p[i][j] != p[j][i]).
Molecule ParseMolecule(std::string_view json_line);
std::string FormatMolecule(const Molecule& m);
// One molecule per non-empty line.
std::vector<Molecule> ReadMoleculeFile(const std::string& path);

// {"atoms": [...], "pairs": [...], ["label": k]} with nested number lists.
HostValue ToHostValue(const Molecule& m);

}  // namespace dynbatch::io

#endif  // DYNBATCH_IO_MOLECULE_H_
