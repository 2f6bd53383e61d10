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

// Binary trees as host values, and their s-expression text form.
//
// A leaf is the map {"word": id} and an internal node is
// {"left": tree, "right": tree}; either may carry an integer "label".
// Text form: a leaf is a token, an internal node is "(left right)", and any
// node may be prefixed with "label:", e.g. "3:(2:(w1 w3) 1:w5)".

#ifndef DYNBATCH_IO_TREE_H_
#define DYNBATCH_IO_TREE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dynbatch/host_value.h"

namespace dynbatch::io {

HostValue MakeLeaf(int64_t word, std::optional<int64_t> label = std::nullopt);
HostValue MakePair(HostValue left, HostValue right,
                   std::optional<int64_t> label = std::nullopt);

bool IsLeaf(const HostValue& tree);
// 1 for leaves, 2 for internal nodes; the dispatch key of tree blocks.
int64_t TreeArity(const HostValue& tree);
const HostValue& Left(const HostValue& tree);
const HostValue& Right(const HostValue& tree);
int64_t Word(const HostValue& tree);
std::optional<int64_t> Label(const HostValue& tree);

int64_t CountLeaves(const HostValue& tree);
int64_t CountNodes(const HostValue& tree);
// Leaves are at height 0.
int64_t TreeHeight(const HostValue& tree);
// True when both trees have the same topology (words and labels ignored).
bool SameShape(const HostValue& a, const HostValue& b);

struct SExpr {
  std::optional<int64_t> label;
  std::string token;                         // leaves
  std::vector<std::unique_ptr<SExpr>> kids;  // internal nodes: exactly two
};

// Throws kIO with the offending position on malformed input.
std::unique_ptr<SExpr> ParseSExpr(std::string_view text);
std::string FormatSExpr(const SExpr& e);

// Maps leaf tokens to word ids.
class Vocabulary {
 public:
  // Id of `token`, adding it when `grow` is set; nullopt for unknown tokens.
  std::optional<int64_t> Lookup(const std::string& token, bool grow = false);
  int64_t size() const { return static_cast<int64_t>(tokens_.size()); }
  const std::string& token(int64_t id) const { return tokens_.at(id); }

 private:
  std::map<std::string, int64_t> ids_;
  std::vector<std::string> tokens_;
};

// Unknown tokens become `unknown_id` unless the vocabulary grows.
HostValue ToHostTree(const SExpr& e, Vocabulary& vocab, bool grow,
                     int64_t unknown_id = 0);
// One tree per non-empty line; '#' starts a comment line.
std::vector<HostValue> ReadTreeFile(const std::string& path, Vocabulary& vocab,
                                    bool grow);

}  // namespace dynbatch::io

#endif  // DYNBATCH_IO_TREE_H_
