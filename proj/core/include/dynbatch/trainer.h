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

// Training helpers. A model's loss for one input is the sum of the elements
// of its outputs (for loss blocks: the per-example loss); a batch minimizes
// the mean over its inputs.

#ifndef DYNBATCH_TRAINER_H_
#define DYNBATCH_TRAINER_H_

#include <span>

#include "dynbatch/compiler.h"
#include "dynbatch/optimizer.h"

namespace dynbatch {

// Forward and backward over `plan`; returns the mean loss and adds its
// parameter gradients to `grads`.
double LossAndGradients(const CompiledModel& model, const BatchPlan& plan,
                        const ParameterStore& params, GradientStore* grads,
                        const ExecutorOptions& options = {});

// Mean loss without gradients.
double Loss(const CompiledModel& model, const BatchPlan& plan,
            const ParameterStore& params);

// One optimizer step on a batch; returns the mean loss before the step.
double TrainStep(const CompiledModel& model, std::span<const HostValue> batch,
                 ParameterStore& params, Optimizer& optimizer);

}  // namespace dynbatch

#endif  // DYNBATCH_TRAINER_H_
