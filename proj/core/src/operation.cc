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

#include "dynbatch/operation.h"

#include <set>

namespace dynbatch {

void OperationRegistry::Register(std::unique_ptr<Operation> op) {
  const std::string name = op->name();
  if (ops_.count(name) > 0 || generics_.count(name) > 0) {
    throw Error(ErrorCode::kContract, "operation '" + name + "' is already registered");
  }
  ops_.emplace(name, std::move(op));
}

void OperationRegistry::RegisterGeneric(std::string name, GenericFactory factory) {
  if (ops_.count(name) > 0 || generics_.count(name) > 0) {
    throw Error(ErrorCode::kContract, "operation '" + name + "' is already registered");
  }
  generics_.emplace(std::move(name), std::move(factory));
}

bool OperationRegistry::Contains(std::string_view name) const {
  return ops_.find(name) != ops_.end() || generics_.find(name) != generics_.end();
}

const Operation& OperationRegistry::Get(std::string_view name) const {
  auto it = ops_.find(name);
  if (it == ops_.end()) {
    throw Error(ErrorCode::kValidation,
                "no operation instance named '" + std::string(name) + "'");
  }
  return *it->second;
}

std::optional<OpSignature> OperationRegistry::Resolve(
    std::string_view op, const std::optional<BlockType>& input) {
  if (auto it = ops_.find(op); it != ops_.end()) return it->second->signature();
  auto g = generics_.find(op);
  if (g == generics_.end()) {
    throw Error(ErrorCode::kValidation, "unknown operation '" + std::string(op) + "'");
  }
  if (!input) return std::nullopt;
  std::string type = input->ToString();
  std::erase(type, ' ');
  std::string name = std::string(op) + "<" + type + ">";
  if (auto it = ops_.find(name); it != ops_.end()) return it->second->signature();
  std::unique_ptr<Operation> instance = g->second(name, *input);
  if (!instance) {
    throw Error(ErrorCode::kType, "operation '" + std::string(op) +
                                      "' does not accept " + input->ToString());
  }
  OpSignature sig = instance->signature();
  ops_.emplace(name, std::move(instance));
  return sig;
}

std::vector<ParameterSpec> OperationRegistry::ParametersOf(
    std::span<const OpSignature> ops) const {
  std::vector<ParameterSpec> out;
  std::set<std::string> seen;
  for (const OpSignature& sig : ops) {
    for (ParameterSpec& p : Get(sig.name).parameters()) {
      if (seen.insert(p.name).second) out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace dynbatch
