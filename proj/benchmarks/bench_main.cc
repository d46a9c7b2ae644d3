// benchmarks/bench_main.cc

// Copyright 2026  The tslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "tslab/decoder.h"
#include "tslab/lattice.h"
#include "tslab/lm.h"
#include "tslab/model.h"
#include "tslab/oracle_suite.h"

namespace {

using namespace tslab;

// Default toy scale: |V| = 6, D = 4.
TransducerModel DefaultModel(int context) {
  ModelConfig c;
  c.context_size = context;
  return TransducerModel::Initialize(c, 7, 0.3);
}

LabelSequence Labels(int S) {
  LabelSequence out;
  for (int i = 0; i < S; ++i) out.push_back(1 + i % 6);
  return out;
}

void BM_SeqLogProb(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  auto model = DefaultModel(0);
  Matrix x = RandomFeatures(T, 4, 1);
  LabelSequence target = Labels(T / 2);
  for (auto _ : state) benchmark::DoNotOptimize(SeqLogProb(model, x, target));
}
BENCHMARK(BM_SeqLogProb)->Arg(8)->Arg(14)->Arg(28);

void BM_CeGradient(benchmark::State& state) {
  auto model = DefaultModel(static_cast<int>(state.range(0)));
  std::vector<Utterance> batch;
  for (int i = 0; i < 16; ++i)
    batch.push_back({"u", RandomFeatures(12, 4, 10 + i), Labels(2 + i % 5)});
  for (auto _ : state) benchmark::DoNotOptimize(CeLossAndGrad(model, batch));
}
BENCHMARK(BM_CeGradient)->Arg(0)->Arg(1);

void BM_BeamSearch(benchmark::State& state) {
  auto model = DefaultModel(0);
  Matrix x = RandomFeatures(14, 4, 3);
  NGramLM elm = TrainNGram(std::vector<LabelSequence>{{1, 2, 3}, {4, 5}, {6}}, 6, 2, 0.1);
  BeamConfig beam;
  beam.beam_size = static_cast<int>(state.range(0));
  beam.fusion = FusionMode::kSf;
  beam.lambda1 = 0.3;
  for (auto _ : state)
    benchmark::DoNotOptimize(BeamSearch(model, x, &elm, nullptr, beam));
}
BENCHMARK(BM_BeamSearch)->Arg(4)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
