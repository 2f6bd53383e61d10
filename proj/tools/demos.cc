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

#include "demos.h"

#include <algorithm>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include "dynbatch/compiler.h"
#include "dynbatch/io/json_value.h"
#include "dynbatch/io/molecule.h"
#include "dynbatch/io/tree.h"
#include "dynbatch/models/attention.h"
#include "dynbatch/models/text_pipeline.h"
#include "dynbatch/models/tree_lstm.h"
#include "dynbatch/models/weave.h"
#include "dynbatch/ops.h"
#include "dynbatch/optimizer.h"
#include "dynbatch/trainer.h"

namespace dynbatch::tools {
namespace {

// Both blocks read the same host inputs.
struct Demo {
  OperationRegistry registry = OperationRegistry::WithBuiltins();
  Block logits;  // input -> f[classes]
  Block loss;    // input -> f[]
  std::vector<HostValue> inputs;
  std::vector<int64_t> labels;
};

Block FieldOf(const std::string& name) {
  return InputTransform(
      [name](const HostValue& v) {
        const HostValue* f = v.Find(name);
        if (!f) throw Error(ErrorCode::kIO, "input has no '" + name + "' field");
        return *f;
      },
      name);
}

Block LossOf(Block logits, Block label) {
  return AllOf({std::move(logits), std::move(label) >> Scalar(DType::kInt32)}) >>
         Function("softmax_cross_entropy");
}

int64_t LabelField(const HostValue& v) {
  const HostValue* l = v.Find("label");
  if (!l || !l->is_int()) throw Error(ErrorCode::kIO, "input has no integer 'label'");
  return l->as_int();
}

int64_t NumClasses(const std::vector<int64_t>& labels) {
  int64_t n = 2;
  for (int64_t l : labels) {
    if (l < 0) throw Error(ErrorCode::kIO, "labels must be non-negative");
    n = std::max(n, l + 1);
  }
  return n;
}

void Pipeline(const DemoOptions& o, Demo& demo) {
  std::ifstream in(o.input);
  if (!in) throw Error(ErrorCode::kIO, "cannot open " + o.input);
  models::TextPipelineConfig config;
  std::vector<std::string> texts;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    try {
      if (tab == std::string::npos) throw std::invalid_argument("no tab");
      demo.labels.push_back(std::stoll(line.substr(0, tab)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIO, o.input + ":" + std::to_string(line_no) +
                                      ": expected '<label>\\t<text>'");
    }
    texts.push_back(line.substr(tab + 1));
    std::istringstream words(texts.back());
    for (std::string w; words >> w;) {
      config.word_idx.emplace(w, static_cast<int64_t>(config.word_idx.size()) + 1);
    }
  }
  const int64_t vocab = static_cast<int64_t>(config.word_idx.size()) + 1;
  const int64_t dim = 8;
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 0.3);
  std::vector<double> table(vocab * dim);
  for (double& x : table) x = normal(rng);
  config.word_matrix = Tensor::FromDoubles(DType::kFloat32, Shape{vocab, dim}, table);
  config.state_dim = o.state_size;
  config.num_classes = NumClasses(demo.labels);
  models::TextPipeline p = models::BuildTextPipeline(config, demo.registry);
  for (size_t i = 0; i < texts.size(); ++i) {
    demo.inputs.push_back(models::TextExample(texts[i], demo.labels[i]));
  }
  demo.logits = FieldOf("text") >> p.text2logits;
  demo.loss = p.loss;
}

void Attention(const DemoOptions& o, Demo& demo) {
  demo.inputs = io::ReadJsonLines(o.input);
  if (demo.inputs.empty()) throw Error(ErrorCode::kIO, o.input + " has no inputs");
  for (const HostValue& v : demo.inputs) demo.labels.push_back(LabelField(v));
  const HostValue* seq = demo.inputs[0].Find("sequence");
  if (!seq || !seq->is_list() || seq->size() == 0 || !seq->as_list()[0].is_list()) {
    throw Error(ErrorCode::kIO, "first input needs a non-empty 'sequence' of vectors");
  }
  const int64_t d = seq->as_list()[0].size();
  Block a = models::AttentionScorer("attention/a", d, demo.registry);
  demo.registry.Register(
      FullyConnected("attention/head", d, NumClasses(demo.labels), std::nullopt));
  demo.logits = FieldOf("sequence") >> models::AttentionOverHostSequence(a, d) >>
                Function("attention/head");
  demo.loss = LossOf(demo.logits, FieldOf("label"));
}

void TreeLstm(const DemoOptions& o, Demo& demo) {
  io::Vocabulary vocab;
  demo.inputs = io::ReadTreeFile(o.input, vocab, /*grow=*/true);
  if (demo.inputs.empty()) throw Error(ErrorCode::kIO, o.input + " has no trees");
  for (const HostValue& t : demo.inputs) {
    const auto label = io::Label(t);
    if (!label) throw Error(ErrorCode::kIO, "every tree needs a root label");
    demo.labels.push_back(*label);
  }
  models::TreeLstmConfig config;
  config.vocab_size = std::max<int64_t>(vocab.size(), 1);
  config.embedding_dim = 16;
  config.state_dim = o.state_size;
  config.num_classes = std::max<int64_t>(5, NumClasses(demo.labels));
  models::TreeLstmModel m = models::BuildTreeLstm(config, demo.registry);
  demo.logits = m.root_logits;
  demo.loss = m.root_loss;
}

void Weave(const DemoOptions& o, Demo& demo) {
  const std::vector<io::Molecule> molecules = io::ReadMoleculeFile(o.input);
  if (molecules.empty()) throw Error(ErrorCode::kIO, o.input + " has no molecules");
  for (const io::Molecule& m : molecules) {
    if (!m.label) throw Error(ErrorCode::kIO, "every molecule needs a 'label'");
    if (m.num_atoms() == 0) throw Error(ErrorCode::kIO, "a molecule needs atoms");
    demo.labels.push_back(*m.label);
    demo.inputs.push_back(io::ToHostValue(m));
  }
  models::WeaveConfig config;
  config.atom_dim = static_cast<int64_t>(molecules[0].atom_features());
  config.pair_dim = static_cast<int64_t>(molecules[0].pair_features());
  config.atom_hidden = config.pair_hidden = o.state_size;
  config.atom_out = config.pair_out = o.state_size;
  Block weave = models::WeaveModule(config, demo.registry);
  demo.registry.Register(FullyConnected("weave/head", config.atom_out,
                                        NumClasses(demo.labels), std::nullopt));
  demo.logits = models::MoleculeInput(config.atom_dim, config.pair_dim) >> weave >>
                GetItem(0) >> Sum() >> Function("weave/head");
  demo.loss = LossOf(demo.logits, FieldOf("label"));
}

int64_t ArgMax(const Tensor& t) {
  const std::vector<double> v = t.ToDoubles();
  return std::max_element(v.begin(), v.end()) - v.begin();
}

}  // namespace

int RunDemo(const DemoOptions& o, std::ostream& out) {
  Demo demo;
  if (o.model == "pipeline") {
    Pipeline(o, demo);
  } else if (o.model == "attention") {
    Attention(o, demo);
  } else if (o.model == "treelstm") {
    TreeLstm(o, demo);
  } else if (o.model == "weave") {
    Weave(o, demo);
  } else {
    throw Error(ErrorCode::kConfig, "unknown demo '" + o.model + "'");
  }
  const CompiledModel loss = CompiledModel::Compile(demo.loss, demo.registry);
  const CompiledModel logits = CompiledModel::Compile(demo.logits, demo.registry);
  ParameterStore params;
  loss.InitializeParameters(params, o.seed);

  if (o.dump_block) out << loss.Dump() << "\n";
  if (o.dump_schedule) out << loss.Plan(demo.inputs).schedule.Dump() << "\n";

  auto accuracy = [&] {
    const auto results = logits.Evaluate(demo.inputs, params);
    int64_t right = 0;
    for (size_t i = 0; i < results.size(); ++i) right += ArgMax(results[i][0]) == demo.labels[i];
    return static_cast<double>(right) / static_cast<double>(results.size());
  };
  if (o.epochs > 0) {
    Adam adam({.learning_rate = o.learning_rate});
    for (int epoch = 1; epoch <= o.epochs; ++epoch) {
      const double l = TrainStep(loss, demo.inputs, params, adam);
      out << "epoch " << epoch << " loss " << l << " accuracy " << accuracy() << "\n";
    }
  }
  const auto results = logits.Evaluate(demo.inputs, params);
  for (size_t i = 0; i < results.size(); ++i) {
    out << "input " << i << " label " << demo.labels[i] << " predicted "
        << ArgMax(results[i][0]) << "\n";
  }
  return 0;
}

}  // namespace dynbatch::tools
