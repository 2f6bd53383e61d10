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

#include "dynbatch/io/molecule.h"

#include <fstream>

#include <nlohmann/json.hpp>

namespace dynbatch::io {

size_t Molecule::pair_features() const {
  return pairs.empty() || pairs[0].empty() ? 0 : pairs[0][0].size();
}

namespace {

[[noreturn]] void Bad(const std::string& what) {
  throw Error(ErrorCode::kIO, "molecule: " + what);
}

std::vector<double> Numbers(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) Bad(where + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) Bad(where + " must be a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Molecule ParseMolecule(std::string_view json_line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_line);
  } catch (const nlohmann::json::parse_error& e) {
    Bad(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("atoms") || !j.contains("pairs")) {
    Bad("expected an object with 'atoms' and 'pairs'");
  }
  Molecule m;
  const auto& atoms = j["atoms"];
  if (!atoms.is_array()) Bad("'atoms' must be a list");
  for (size_t i = 0; i < atoms.size(); ++i) {
    m.atoms.push_back(Numbers(atoms[i], "atoms[" + std::to_string(i) + "]"));
    if (m.atoms.back().size() != m.atoms.front().size()) Bad("ragged atom features");
  }
  const size_t n = m.atoms.size();
  const auto& pairs = j["pairs"];
  if (!pairs.is_array() || pairs.size() != n) Bad("'pairs' must be a " + std::to_string(n) +
                                                  " x " + std::to_string(n) + " table");
  size_t width = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!pairs[i].is_array() || pairs[i].size() != n) {
      Bad("pairs[" + std::to_string(i) + "] must have " + std::to_string(n) + " entries");
    }
    m.pairs.emplace_back();
    for (size_t k = 0; k < n; ++k) {
      m.pairs[i].push_back(
          Numbers(pairs[i][k], "pairs[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
      if (i == 0 && k == 0) width = m.pairs[0][0].size();
      if (m.pairs[i][k].size() != width) Bad("ragged pair features");
    }
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = i + 1; k < n; ++k) {
      if (m.pairs[i][k] != m.pairs[k][i]) {
        Bad("pair table is not symmetric at (" + std::to_string(i) + ", " +
            std::to_string(k) + ")");
      }
    }
  }
  if (j.contains("label")) {
    if (!j["label"].is_number_integer()) Bad("'label' must be an integer");
    m.label = j["label"].get<int64_t>();
  }
  return m;
}

std::string FormatMolecule(const Molecule& m) {
  nlohmann::json j;
  j["atoms"] = m.atoms;
  j["pairs"] = m.pairs;
  if (m.label) j["label"] = *m.label;
  return j.dump();
}

std::vector<Molecule> ReadMoleculeFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIO, "cannot open " + path);
  std::vector<Molecule> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ParseMolecule(line));
    } catch (const Error& e) {
      throw e.WithContext(path + ":" + std::to_string(line_no));
    }
  }
  return out;
}

HostValue ToHostValue(const Molecule& m) {
  auto vec = [](const std::vector<double>& v) {
    HostValue::List l;
    for (double x : v) l.emplace_back(x);
    return HostValue(std::move(l));
  };
  HostValue::List atoms;
  for (const auto& a : m.atoms) atoms.push_back(vec(a));
  HostValue::List pairs;
  for (const auto& row : m.pairs) {
    HostValue::List r;
    for (const auto& p : row) r.push_back(vec(p));
    pairs.emplace_back(std::move(r));
  }
  HostValue::Map out{{"atoms", HostValue(std::move(atoms))},
                     {"pairs", HostValue(std::move(pairs))}};
  if (m.label) out.emplace_back("label", HostValue(*m.label));
  return HostValue(std::move(out));
}

}  // namespace dynbatch::io
