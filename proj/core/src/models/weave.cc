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

#include "dynbatch/models/weave.h"

#include "dynbatch/ops.h"

namespace dynbatch::models {

Block AtomToPairs(const std::string& f_a_p) {
  Composition c;
  Wire a_x_i = c.Add(Broadcast(), {c.input(0)});
  Wire a_x = c.input(1);
  Wire f_i_j = c.Add(ZipWith(Concat() >> Function(f_a_p)), {a_x_i, a_x});
  Wire f_j_i = c.Add(ZipWith(Concat() >> Function(f_a_p)), {a_x, a_x_i});
  // Elementwise sum of two sequences; Sum() would reduce over a sequence.
  Wire p = c.Add(ZipWith(Function("add")), {f_i_j, f_j_i});
  c.SetOutput({p});
  return c.Build().WithName("a_i_to_p");
}

Block WeaveModule(const WeaveConfig& config, OperationRegistry& registry) {
  const auto relu = kernels::UnaryKind::kRelu;
  const std::string& pre = config.prefix;
  const int64_t ha = config.atom_hidden, hp = config.pair_hidden;
  if (config.atom_dim <= 0 || config.pair_dim <= 0 || ha <= 0 || hp <= 0 ||
      config.atom_out <= 0 || config.pair_out <= 0) {
    throw Error(ErrorCode::kConfig, "weave dimensions must be positive");
  }
  auto fc = [&](const char* name, int64_t in, int64_t out) {
    registry.Register(FullyConnected(pre + "/" + name, in, out, relu, config.dtype));
    return Function(pre + "/" + name);
  };
  Block f_a_a = fc("f_a_a", config.atom_dim, ha);
  Block f_p_a = fc("f_p_a", config.pair_dim, ha);
  Block f_a = fc("f_a", 2 * ha, config.atom_out);
  fc("f_a_p", 2 * config.atom_dim, hp);
  Block f_p_p = fc("f_p_p", config.pair_dim, hp);
  Block f_p = fc("f_p", 2 * hp, config.pair_out);

  Composition weave;
  Wire a_x = weave.input(0);
  Wire p_x = weave.input(1);
  Wire a_to_a = weave.Add(Map(f_a_a), {a_x});
  Wire p_to_a = weave.Add(Map(Map(f_p_a) >> Sum()), {p_x});
  Wire a_y = weave.Add(ZipWith(Concat() >> f_a), {a_to_a, p_to_a});
  Wire a_x_all = weave.Add(Broadcast(), {a_x});
  Wire a_to_p = weave.Add(ZipWith(AtomToPairs(pre + "/f_a_p")), {a_x, a_x_all});
  Wire p_to_p = weave.Add(Map(Map(f_p_p)), {p_x});
  Wire p_y = weave.Add(ZipWith(ZipWith(Concat() >> f_p)), {a_to_p, p_to_p});
  weave.SetOutput({a_y, p_y});
  return weave.Build().WithName(pre);
}

Block MoleculeInput(int64_t atom_dim, int64_t pair_dim, DType dtype) {
  return Record({{"atoms", Map(TensorInput(TensorType(dtype, Shape{atom_dim})))},
                 {"pairs", Map(Map(TensorInput(TensorType(dtype, Shape{pair_dim}))))}});
}

}  // namespace dynbatch::models
