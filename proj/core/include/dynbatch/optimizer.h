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

#ifndef DYNBATCH_OPTIMIZER_H_
#define DYNBATCH_OPTIMIZER_H_

#include <cstdint>
#include <map>
#include <string>

#include "dynbatch/parameters.h"

namespace dynbatch {

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // Updates every parameter with a gradient in `grads`.
  virtual void Step(ParameterStore& params, const GradientStore& grads) = 0;
};

// p -= lr * g.
class Sgd : public Optimizer {
 public:
  explicit Sgd(double learning_rate) : lr_(learning_rate) {}
  void Step(ParameterStore& params, const GradientStore& grads) override;

 private:
  double lr_;
};

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam with per-parameter moment slots.
class Adam : public Optimizer {
 public:
  explicit Adam(AdamOptions options = {}) : o_(options) {}
  void Step(ParameterStore& params, const GradientStore& grads) override;

  int64_t steps() const { return t_; }

 private:
  struct Slots {
    std::vector<double> m;
    std::vector<double> v;
  };

  AdamOptions o_;
  int64_t t_ = 0;
  std::map<std::string, Slots> slots_;
};

}  // namespace dynbatch

#endif  // DYNBATCH_OPTIMIZER_H_
