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

// Operations: batched kernels over fixed tensor types. Every operation is
// polymorphic in the leading (batch) dimension.

#ifndef DYNBATCH_OPERATION_H_
#define DYNBATCH_OPERATION_H_

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynbatch/parameters.h"
#include "dynbatch/type_inference.h"
#include "dynbatch/types.h"

namespace dynbatch {

class Operation {
 public:
  explicit Operation(OpSignature signature) : signature_(std::move(signature)) {}
  virtual ~Operation() = default;

  const OpSignature& signature() const { return signature_; }
  const std::string& name() const { return signature_.name; }

  virtual std::vector<ParameterSpec> parameters() const { return {}; }

  // inputs[k] has shape (b, signature().inputs[k].shape...).
  virtual std::vector<Tensor> Forward(std::span<const Tensor> inputs,
                                      const ParameterStore& params) const = 0;

  // Returns one gradient per input (a default-constructed tensor for Int32
  // inputs) and adds parameter gradients to `grads`.
  virtual std::vector<Tensor> Backward(std::span<const Tensor> inputs,
                                       std::span<const Tensor> outputs,
                                       std::span<const Tensor> output_grads,
                                       const ParameterStore& params,
                                       GradientStore* grads) const = 0;

 protected:
  void set_signature(OpSignature s) { signature_ = std::move(s); }

 private:
  OpSignature signature_;
};

// Builds the instance of a generic operation for a concrete input type, or
// returns nullptr if the input type is unsupported. `name` is the instance
// name to give the operation.
using GenericFactory = std::function<std::unique_ptr<Operation>(
    const std::string& name, const BlockType& input)>;

class OperationRegistry : public OpResolver {
 public:
  OperationRegistry() = default;
  OperationRegistry(const OperationRegistry&) = delete;
  OperationRegistry& operator=(const OperationRegistry&) = delete;
  OperationRegistry(OperationRegistry&&) = default;
  OperationRegistry& operator=(OperationRegistry&&) = default;

  // Registry with the elementwise generics, identity and
  // softmax_cross_entropy.
  static OperationRegistry WithBuiltins();

  // Throws kContract on a duplicate name.
  void Register(std::unique_ptr<Operation> op);
  void RegisterGeneric(std::string name, GenericFactory factory);

  bool Contains(std::string_view name) const;
  // Concrete operations and instantiated generics.
  const Operation& Get(std::string_view name) const;

  // Generic instances are named "<op><<input type>>", e.g. "add<(f32[4],f32[4])>".
  std::optional<OpSignature> Resolve(std::string_view op,
                                     const std::optional<BlockType>& input) override;

  // Parameters of the listed operations, each name once.
  std::vector<ParameterSpec> ParametersOf(std::span<const OpSignature> ops) const;

 private:
  std::map<std::string, std::unique_ptr<Operation>, std::less<>> ops_;
  std::map<std::string, GenericFactory, std::less<>> generics_;
};

}  // namespace dynbatch

#endif  // DYNBATCH_OPERATION_H_
