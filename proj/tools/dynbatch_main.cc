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

// dynbatch: benchmark harness, model demos and report checker.
//
//   dynbatch bench --mode manual,dynamic,full-dynamic --phase infer
//                  --batch-size 1,8,32,64,256 --tree-size 128 --state-size 64
//                  --repeats 5 --seed 1 --out report.csv
//   dynbatch demo treelstm --input data/trees.txt --train 50
//   dynbatch check-report report.csv

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "demos.h"
#include "dynbatch/bench/bench.h"
#include "dynbatch/error.h"

namespace dynbatch::tools {
namespace {

struct BenchArgs {
  std::vector<std::string> modes = {"manual", "dynamic", "full-dynamic"};
  std::string phase = "infer";
  std::vector<int64_t> batch_sizes = {1, 8, 32, 64, 256};
  std::string shape;
  std::string out;
  bool dump_block = false;
  bool dump_schedule = false;
};

int RunBench(const BenchArgs& args, bench::BenchConfig config) {
  config.modes.clear();
  for (const std::string& m : args.modes) config.modes.push_back(bench::ParseBatchMode(m));
  config.phase = bench::ParsePhase(args.phase);
  config.batch_sizes = args.batch_sizes;
  if (!args.shape.empty()) config.shape = bench::ParseShapeMode(args.shape);
  bench::ValidateConfig(config);

  if (args.dump_block || args.dump_schedule) {
    bench::TreeBench tb(config.state_size, config.vocab_size, config.seed);
    if (args.dump_block) std::cout << tb.model().Dump() << "\n";
    if (args.dump_schedule) {
      const HostValue tree = bench::GenRandomTree(
          config.tree_size, config.shape.value_or(bench::ShapeMode::kFixed),
          config.vocab_size, config.seed);
      std::cout << tb.model().Plan({&tree, 1}).schedule.Dump() << "\n";
    }
    return 0;
  }

  bench::KeepFreedMemoryForTiming();
  const bench::BenchReport report = bench::RunBenchmark(config);
  bench::WriteCsv(report, std::cout);
  if (!args.out.empty()) {
    std::ofstream f(args.out);
    if (!f) throw Error(ErrorCode::kIO, "cannot write " + args.out);
    bench::WriteCsv(report, f);
  }
  return 0;
}

int CheckReport(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIO, "cannot open " + path);
  const bench::BenchReport report = bench::ReadCsv(in);
  std::cout << path << ": " << report.rows.size() << " rows ok\n";
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Dynamic batching engine: benchmarks, demos and report checks"};
  app.require_subcommand(1);

  BenchArgs bench_args;
  bench::BenchConfig config;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time manual vs dynamic batching");
  bench_cmd->add_option("--mode", bench_args.modes, "manual, dynamic, full-dynamic")
      ->delimiter(',');
  bench_cmd->add_option("--phase", bench_args.phase, "infer or train")
      ->check(CLI::IsMember({"infer", "train"}));
  bench_cmd->add_option("--batch-size", bench_args.batch_sizes, "Batch sizes")
      ->delimiter(',');
  bench_cmd->add_option("--tree-size", config.tree_size, "Leaves per tree");
  bench_cmd->add_option("--state-size", config.state_size, "Tree-LSTM state size");
  bench_cmd->add_option("--vocab-size", config.vocab_size, "Toy vocabulary size");
  bench_cmd->add_option("--repeats", config.repeats, "Timed runs per row (median)");
  bench_cmd->add_option("--seed", config.seed, "Tree and parameter seed");
  bench_cmd->add_option("--shape", bench_args.shape, "Override tree shapes: fixed or random")
      ->check(CLI::IsMember({"fixed", "random"}));
  bench_cmd->add_option("--threads", config.threads, "Worker threads per depth");
  bench_cmd->add_flag("--include-compile", config.include_compile,
                      "Time tracing and scheduling too");
  bench_cmd->add_option("--out", bench_args.out, "CSV report path");
  bench_cmd->add_flag("--dump-block", bench_args.dump_block, "Print the block tree");
  bench_cmd->add_flag("--dump-schedule", bench_args.dump_schedule,
                      "Print the schedule of one tree");

  DemoOptions demo;
  CLI::App* demo_cmd = app.add_subcommand("demo", "Run a model on an input file");
  demo_cmd->add_option("model", demo.model, "pipeline, attention, treelstm or weave")
      ->required()
      ->check(CLI::IsMember({"pipeline", "attention", "treelstm", "weave"}));
  demo_cmd->add_option("--input", demo.input, "Input file")->required();
  demo_cmd->add_option("--train", demo.epochs, "Adam epochs over the whole file");
  demo_cmd->add_option("--lr", demo.learning_rate, "Adam learning rate");
  demo_cmd->add_option("--state-size", demo.state_size, "Hidden size");
  demo_cmd->add_option("--seed", demo.seed, "Parameter seed");
  demo_cmd->add_flag("--dump-block", demo.dump_block, "Print the compiled block tree");
  demo_cmd->add_flag("--dump-schedule", demo.dump_schedule,
                     "Print the schedule of the whole input batch");

  std::string report_path;
  CLI::App* check_cmd = app.add_subcommand("check-report", "Validate a bench CSV");
  check_cmd->add_option("file", report_path, "CSV report")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*bench_cmd) return RunBench(bench_args, config);
    if (*demo_cmd) return RunDemo(demo, std::cout);
    if (*check_cmd) return CheckReport(report_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace
}  // namespace dynbatch::tools

int main(int argc, char** argv) { return dynbatch::tools::Main(argc, argv); }
