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

#ifndef DYNBATCH_PARAMETERS_H_
#define DYNBATCH_PARAMETERS_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dynbatch/tensor.h"

namespace dynbatch {

enum class Initializer {
  kGlorotUniform,  // U(-r, r), r = sqrt(6 / (fan_in + fan_out))
  kZeros,
  kGiven,          // ParameterSpec::value
};

struct ParameterSpec {
  std::string name;
  DType dtype = DType::kFloat32;
  Shape shape;
  Initializer init = Initializer::kGlorotUniform;
  Tensor value;  // kGiven only
};

// Named tensors shared by every invocation of the operations that use them.
class ParameterStore {
 public:
  bool Has(const std::string& name) const { return values_.count(name) > 0; }
  const Tensor& Get(const std::string& name) const;
  Tensor& Mutable(const std::string& name);
  void Set(const std::string& name, Tensor value);

  // Creates the parameters that do not exist yet. Each parameter draws from
  // its own generator seeded by (seed, name), so the result does not depend
  // on creation order. Existing parameters must match the ParameterSpec's shape.
  void Initialize(const std::vector<ParameterSpec>& specs, uint64_t seed);

  std::vector<std::string> names() const;
  const std::map<std::string, Tensor>& values() const { return values_; }
  int64_t num_elements() const;

 private:
  std::map<std::string, Tensor> values_;
};

// Parameter gradients accumulated over a backward sweep.
class GradientStore {
 public:
  // grads[name] += g (creates a zero entry first).
  void Add(const std::string& name, const Tensor& g);
  const Tensor* Find(const std::string& name) const;
  // Zeros for parameters that received no gradient.
  Tensor GetOrZeros(const std::string& name, const ParameterStore& params) const;
  void Clear() { grads_.clear(); }
  const std::map<std::string, Tensor>& grads() const { return grads_; }

 private:
  std::map<std::string, Tensor> grads_;
};

}  // namespace dynbatch

#endif  // DYNBATCH_PARAMETERS_H_
