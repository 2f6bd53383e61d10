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

#include "dynbatch/optimizer.h"

#include <cmath>

namespace dynbatch {
namespace {

void CheckAligned(const std::string& name, const Tensor& p, const Tensor& g) {
  if (p.num_elements() != g.num_elements() || p.dtype() != g.dtype()) {
    throw Error(ErrorCode::kShape, "gradient of '" + name + "' does not match the parameter");
  }
}

}  // namespace

void Sgd::Step(ParameterStore& params, const GradientStore& grads) {
  for (const auto& [name, g] : grads.grads()) {
    Tensor& p = params.Mutable(name);
    CheckAligned(name, p, g);
    DispatchFloating(p.dtype(), "Sgd", [&](auto tag) {
      using T = decltype(tag);
      auto pv = p.mutable_data<T>();
      auto gv = g.data<T>();
      for (size_t i = 0; i < pv.size(); ++i) pv[i] -= static_cast<T>(lr_ * gv[i]);
    });
  }
}

void Adam::Step(ParameterStore& params, const GradientStore& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(o_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(o_.beta2, static_cast<double>(t_));
  for (const auto& [name, g] : grads.grads()) {
    Tensor& p = params.Mutable(name);
    CheckAligned(name, p, g);
    Slots& s = slots_[name];
    const auto n = static_cast<size_t>(p.num_elements());
    if (s.m.size() != n) {
      s.m.assign(n, 0.0);
      s.v.assign(n, 0.0);
    }
    DispatchFloating(p.dtype(), "Adam", [&](auto tag) {
      using T = decltype(tag);
      auto pv = p.mutable_data<T>();
      auto gv = g.data<T>();
      for (size_t i = 0; i < n; ++i) {
        const double gi = gv[i];
        s.m[i] = o_.beta1 * s.m[i] + (1.0 - o_.beta1) * gi;
        s.v[i] = o_.beta2 * s.v[i] + (1.0 - o_.beta2) * gi * gi;
        const double mhat = s.m[i] / c1;
        const double vhat = s.v[i] / c2;
        pv[i] -= static_cast<T>(o_.learning_rate * mhat / (std::sqrt(vhat) + o_.epsilon));
      }
    });
  }
}

}  // namespace dynbatch
