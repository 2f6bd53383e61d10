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

#include "dynbatch/trainer.h"

namespace dynbatch {
namespace {

double SumElements(std::span<const Tensor> results) {
  double total = 0.0;
  for (const Tensor& t : results) {
    for (double v : t.ToDoubles()) total += v;
  }
  return total;
}

size_t BatchSize(const BatchPlan& plan) {
  return plan.result_begin.empty() ? 0 : plan.result_begin.size() - 1;
}

}  // namespace

double LossAndGradients(const CompiledModel& model, const BatchPlan& plan,
                        const ParameterStore& params, GradientStore* grads,
                        const ExecutorOptions& options) {
  const size_t batch = BatchSize(plan);
  if (batch == 0) return 0.0;
  Executor exec = model.MakeExecutor(options);
  ForwardResult fwd = exec.Forward(plan.schedule, params, Mode::kTrain);
  const double scale = 1.0 / static_cast<double>(batch);
  std::vector<Tensor> dresults;
  dresults.reserve(fwd.results.size());
  for (const Tensor& r : fwd.results) {
    dresults.push_back(Tensor::Filled(r.dtype(), r.shape(), IsFloating(r.dtype()) ? scale : 0));
  }
  exec.Backward(plan.schedule, *fwd.tape, params, dresults, grads);
  return SumElements(fwd.results) * scale;
}

double Loss(const CompiledModel& model, const BatchPlan& plan, const ParameterStore& params) {
  const size_t batch = BatchSize(plan);
  if (batch == 0) return 0.0;
  ForwardResult fwd = model.MakeExecutor().Forward(plan.schedule, params, Mode::kInfer);
  return SumElements(fwd.results) / static_cast<double>(batch);
}

double TrainStep(const CompiledModel& model, std::span<const HostValue> batch,
                 ParameterStore& params, Optimizer& optimizer) {
  BatchPlan plan = model.Plan(batch);
  GradientStore grads;
  const double loss = LossAndGradients(model, plan, params, &grads);
  optimizer.Step(params, grads);
  return loss;
}

}  // namespace dynbatch
