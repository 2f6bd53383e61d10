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

#include "dynbatch/parameters.h"

#include <cmath>
#include <random>

#include "dynbatch/kernels.h"

namespace dynbatch {

const Tensor& ParameterStore::Get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) {
    throw Error(ErrorCode::kContract, "unknown parameter '" + name + "'");
  }
  return it->second;
}

Tensor& ParameterStore::Mutable(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).Get(name));
}

void ParameterStore::Set(const std::string& name, Tensor value) {
  values_[name] = std::move(value);
}

namespace {

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void ParameterStore::Initialize(const std::vector<ParameterSpec>& specs,
                                uint64_t seed) {
  for (const ParameterSpec& spec : specs) {
    auto it = values_.find(spec.name);
    if (it != values_.end()) {
      if (it->second.shape() != spec.shape || it->second.dtype() != spec.dtype) {
        throw Error(ErrorCode::kShape,
                    "parameter '" + spec.name + "' exists with shape " +
                        it->second.shape().ToString() + ", requested " +
                        spec.shape.ToString());
      }
      continue;
    }
    switch (spec.init) {
      case Initializer::kZeros:
        values_.emplace(spec.name, Tensor(spec.dtype, spec.shape));
        break;
      case Initializer::kGiven:
        if (spec.value.shape() != spec.shape) {
          throw Error(ErrorCode::kShape, "initial value of '" + spec.name +
                                             "' has shape " +
                                             spec.value.shape().ToString());
        }
        values_.emplace(spec.name, spec.value.Cast(spec.dtype));
        break;
      case Initializer::kGlorotUniform: {
        const auto& dims = spec.shape.dims();
        int64_t fan_out = dims.empty() ? 1 : dims.back();
        int64_t fan_in = 1;
        for (size_t i = 0; i + 1 < dims.size(); ++i) fan_in *= dims[i];
        const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                          static_cast<uint32_t>(Fnv1a(spec.name)),
                          static_cast<uint32_t>(Fnv1a(spec.name) >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> dist(-r, r);
        std::vector<double> v(static_cast<size_t>(spec.shape.num_elements()));
        for (double& x : v) x = dist(rng);
        values_.emplace(spec.name, Tensor::FromDoubles(spec.dtype, spec.shape, v));
        break;
      }
    }
  }
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : values_) out.push_back(name);
  return out;
}

int64_t ParameterStore::num_elements() const {
  int64_t n = 0;
  for (const auto& [_, t] : values_) n += t.num_elements();
  return n;
}

void GradientStore::Add(const std::string& name, const Tensor& g) {
  auto it = grads_.find(name);
  if (it == grads_.end()) {
    grads_.emplace(name, g);
    return;
  }
  kernels::AddInto(it->second, g);
}

const Tensor* GradientStore::Find(const std::string& name) const {
  auto it = grads_.find(name);
  return it == grads_.end() ? nullptr : &it->second;
}

Tensor GradientStore::GetOrZeros(const std::string& name,
                                 const ParameterStore& params) const {
  if (const Tensor* g = Find(name)) return *g;
  const Tensor& p = params.Get(name);
  return Tensor(p.dtype(), p.shape());
}

}  // namespace dynbatch
