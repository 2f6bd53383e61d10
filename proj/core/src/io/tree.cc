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

#include "dynbatch/io/tree.h"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace dynbatch::io {

HostValue MakeLeaf(int64_t word, std::optional<int64_t> label) {
  HostValue::Map m{{"word", HostValue(word)}};
  if (label) m.emplace_back("label", HostValue(*label));
  return HostValue(std::move(m));
}

HostValue MakePair(HostValue left, HostValue right, std::optional<int64_t> label) {
  HostValue::Map m{{"left", std::move(left)}, {"right", std::move(right)}};
  if (label) m.emplace_back("label", HostValue(*label));
  return HostValue(std::move(m));
}

namespace {

const HostValue& Field(const HostValue& tree, std::string_view key) {
  const HostValue* v = tree.is_map() ? tree.Find(key) : nullptr;
  if (v == nullptr) {
    throw Error(ErrorCode::kTrace, "tree node has no '" + std::string(key) + "': " +
                                       tree.DebugString());
  }
  return *v;
}

}  // namespace

bool IsLeaf(const HostValue& tree) { return tree.is_map() && tree.Find("word") != nullptr; }

int64_t TreeArity(const HostValue& tree) {
  if (IsLeaf(tree)) return 1;
  if (tree.is_map() && tree.Find("left") && tree.Find("right")) return 2;
  throw Error(ErrorCode::kTrace, "not a tree node: " + tree.DebugString());
}

const HostValue& Left(const HostValue& tree) { return Field(tree, "left"); }
const HostValue& Right(const HostValue& tree) { return Field(tree, "right"); }
int64_t Word(const HostValue& tree) { return Field(tree, "word").as_int(); }

std::optional<int64_t> Label(const HostValue& tree) {
  const HostValue* v = tree.is_map() ? tree.Find("label") : nullptr;
  if (v == nullptr) return std::nullopt;
  return v->as_int();
}

int64_t CountLeaves(const HostValue& tree) {
  return IsLeaf(tree) ? 1 : CountLeaves(Left(tree)) + CountLeaves(Right(tree));
}

int64_t CountNodes(const HostValue& tree) {
  return IsLeaf(tree) ? 1 : 1 + CountNodes(Left(tree)) + CountNodes(Right(tree));
}

int64_t TreeHeight(const HostValue& tree) {
  if (IsLeaf(tree)) return 0;
  return 1 + std::max(TreeHeight(Left(tree)), TreeHeight(Right(tree)));
}

bool SameShape(const HostValue& a, const HostValue& b) {
  if (IsLeaf(a) || IsLeaf(b)) return IsLeaf(a) && IsLeaf(b);
  return SameShape(Left(a), Left(b)) && SameShape(Right(a), Right(b));
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::unique_ptr<SExpr> ParseAll() {
    auto e = ParseNode();
    SkipSpace();
    if (pos_ != text_.size()) Fail("trailing characters");
    return e;
  }

 private:
  [[noreturn]] void Fail(const std::string& what) const {
    throw Error(ErrorCode::kIO, "s-expression: " + what + " at offset " +
                                    std::to_string(pos_) + " in '" + std::string(text_) +
                                    "'");
  }

  void SkipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  static bool TokenChar(char c) {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')';
  }

  std::string Token() {
    const size_t start = pos_;
    while (pos_ < text_.size() && TokenChar(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::unique_ptr<SExpr> ParseNode() {
    SkipSpace();
    if (pos_ >= text_.size()) Fail("unexpected end of input");
    auto e = std::make_unique<SExpr>();
    // Optional "label:" prefix: digits (with sign) followed by ':'.
    size_t p = pos_;
    if (p < text_.size() && (text_[p] == '-' || text_[p] == '+')) ++p;
    const size_t digits = p;
    while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
    if (p > digits && p < text_.size() && text_[p] == ':') {
      e->label = std::stoll(std::string(text_.substr(pos_, p - pos_)));
      pos_ = p + 1;
    }
    if (pos_ >= text_.size()) Fail("missing node after label");
    if (text_[pos_] == '(') {
      ++pos_;
      e->kids.push_back(ParseNode());
      e->kids.push_back(ParseNode());
      SkipSpace();
      if (pos_ >= text_.size() || text_[pos_] != ')') Fail("expected ')' (nodes are binary)");
      ++pos_;
      return e;
    }
    if (text_[pos_] == ')') Fail("unexpected ')'");
    e->token = Token();
    if (e->token.empty()) Fail("empty token");
    return e;
  }

  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace

std::unique_ptr<SExpr> ParseSExpr(std::string_view text) { return Parser(text).ParseAll(); }

std::string FormatSExpr(const SExpr& e) {
  std::string out = e.label ? std::to_string(*e.label) + ":" : "";
  if (e.kids.empty()) return out + e.token;
  return out + "(" + FormatSExpr(*e.kids[0]) + " " + FormatSExpr(*e.kids[1]) + ")";
}

std::optional<int64_t> Vocabulary::Lookup(const std::string& token, bool grow) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  if (!grow) return std::nullopt;
  const auto id = static_cast<int64_t>(tokens_.size());
  ids_.emplace(token, id);
  tokens_.push_back(token);
  return id;
}

HostValue ToHostTree(const SExpr& e, Vocabulary& vocab, bool grow, int64_t unknown_id) {
  if (e.kids.empty()) {
    return MakeLeaf(vocab.Lookup(e.token, grow).value_or(unknown_id), e.label);
  }
  return MakePair(ToHostTree(*e.kids[0], vocab, grow, unknown_id),
                  ToHostTree(*e.kids[1], vocab, grow, unknown_id), e.label);
}

std::vector<HostValue> ReadTreeFile(const std::string& path, Vocabulary& vocab, bool grow) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIO, "cannot open " + path);
  std::vector<HostValue> trees;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      trees.push_back(ToHostTree(*ParseSExpr(line), vocab, grow));
    } catch (const Error& e) {
      throw e.WithContext(path + ":" + std::to_string(line_no));
    }
  }
  return trees;
}

}  // namespace dynbatch::io
