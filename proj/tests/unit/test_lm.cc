// tests/unit/test_lm.cc

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

#include <algorithm>
#include <cmath>
#include <sstream>

#include <doctest.h>

#include "test_support.h"
#include "tslab/error.h"
#include "tslab/lattice.h"
#include "tslab/lm.h"
#include "tslab/numerics.h"

using namespace tslab;
using tslab::testing::RandomLabels;
using tslab::testing::Rng;

namespace {

// Scores a fixed sentence with probability one.
class CertainScorer : public SequenceScorer {
 public:
  explicit CertainScorer(LabelSequence s) : s_(std::move(s)) {}
  int NumLabels() const override { return 3; }
  std::vector<double> NextLogProbs(const LabelSequence& h) const override {
    std::vector<double> lp(4, kLogZero);
    lp[h.size() < s_.size() ? s_[h.size()] : kEos] = 0.0;
    return lp;
  }

 private:
  LabelSequence s_;
};

std::vector<LabelSequence> RandomCorpus(int V, int n, Rng& rng) {
  std::vector<LabelSequence> c;
  for (int i = 0; i < n; ++i)
    c.push_back(RandomLabels(V, static_cast<int>(rng() % 5), rng));
  return c;
}

}  // namespace

TEST_CASE("n-gram hand counts") {
  NGramLM lm(1, 1, 1.0);
  lm.AddEvent({}, 1);
  CHECK(lm.Prob({}, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(lm.Prob({}, kEos) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  NGramLM full = TrainNGram(std::vector<LabelSequence>{{1}}, 1, 1, 1.0);
  CHECK(full.Prob({}, 1) == doctest::Approx(0.5));
  CHECK(full.Prob({1}, kEos) == doctest::Approx(0.5));

  NGramLM flat = TrainNGram(std::vector<LabelSequence>{{1, 1, 2}}, 2, 2, 1e9);
  for (Label k = 0; k <= 2; ++k)
    CHECK(flat.Prob({1}, k) == doctest::Approx(1.0 / 3.0).epsilon(1e-8));

  NGramLM bigram = TrainNGram(std::vector<LabelSequence>{{1}}, 3, 2, 0.5);
  for (Label k = 0; k <= 3; ++k) CHECK(bigram.Prob({3}, k) == 0.25);
}

TEST_CASE("bigram chain rule on a toy corpus") {
  // Corpus: [1 2], [2], [1 1 2]. Counts by previous label (0 = start):
  //   start: 1 x2, 2 x1          -> 3 events
  //   1:     2 x2, 1 x1          -> 3 events
  //   2:     EOS x3              -> 3 events
  std::vector<LabelSequence> corpus{{1, 2}, {2}, {1, 1, 2}};
  const double d = 0.5;
  NGramLM lm = TrainNGram(corpus, 2, 2, d);
  auto p = [&](double c, double n) { return (c + d) / (n + 3 * d); };
  double expected = std::log(p(2, 3)) + std::log(p(1, 3)) + std::log(p(2, 3)) +
                    std::log(p(3, 3));
  CHECK(std::abs(LmLogProb(lm, {1, 1, 2}) - expected) < 1e-14);
  CHECK(std::abs(LmLogProb(lm, {}) - std::log(p(0, 3))) < 1e-14);

  std::vector<LabelSequence> held{{2, 1}, {1}};
  double ll = std::log(p(1, 3)) + std::log(p(0, 3)) + std::log(p(0, 3)) +
              std::log(p(2, 3)) + std::log(p(0, 3));
  auto ppl = ComputePerplexity(lm, held);
  CHECK_FALSE(ppl.infinite);
  CHECK(ppl.value == doctest::Approx(std::exp(-ll / 5.0)).epsilon(1e-13));
}

TEST_CASE("n-gram conditionals normalize for seen and unseen contexts") {
  Rng rng(101);
  for (int order = 1; order <= 3; ++order) {
    auto corpus = RandomCorpus(3, 20, rng);
    NGramLM lm = TrainNGram(corpus, 3, order, 0.3);
    for (int trial = 0; trial < 50; ++trial) {
      auto h = RandomLabels(3, static_cast<int>(rng() % 4), rng);
      auto lp = lm.NextLogProbs(h);
      double s = 0.0;
      for (Label k = 0; k <= 3; ++k) {
        s += lm.Prob(h, k);
        CHECK(std::exp(lp[k]) == doctest::Approx(lm.Prob(h, k)));
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("n-gram sequence distribution sums to one") {
  std::vector<LabelSequence> corpus;
  for (int i = 0; i < 10; ++i) {
    corpus.push_back({1});
    corpus.push_back({2});
    corpus.push_back({});
  }
  corpus.push_back({1, 2});
  NGramLM lm = TrainNGram(corpus, 2, 2, 0.01);
  double total = 0.0;
  for (int L = 0; L <= 8; ++L) {
    total = 0.0;
    for (const auto& a : AllLabelSequences(2, L)) total += std::exp(LmLogProb(lm, a));
    CHECK(total <= 1.0 + 1e-12);
  }
  CHECK(std::abs(total - 1.0) < 1e-6);
}

TEST_CASE("n-gram training is deterministic and validates input") {
  Rng rng(102);
  auto corpus = RandomCorpus(4, 30, rng);
  CHECK(TrainNGram(corpus, 4, 3, 0.1) == TrainNGram(corpus, 4, 3, 0.1));
  CHECK_THROWS_AS(TrainNGram(std::vector<LabelSequence>{}, 4, 2, 0.1), TrainingError);
  CHECK_THROWS_AS(NGramLM(4, 0, 0.1), ConfigError);
  CHECK_THROWS_AS(NGramLM(4, 2, 0.0), ConfigError);
  NGramLM lm(2, 2, 1.0);
  CHECK_THROWS_AS(lm.AddEvent({}, 3), VocabularyError);
  CHECK_THROWS_AS(LmLogProb(lm, {1, 5}), VocabularyError);
}

TEST_CASE("uniform and certain scorers") {
  UniformScorer u(4);
  CHECK(LmLogProb(u, {1, 2}) == doctest::Approx(3 * std::log(0.2)));
  CHECK(LmLogProb(u, {}) == doctest::Approx(std::log(0.2)));
  Rng rng(103);
  auto corpus = RandomCorpus(4, 12, rng);
  CHECK(ComputePerplexity(u, corpus).value == doctest::Approx(5.0));

  CertainScorer c({1, 3});
  std::vector<LabelSequence> only{{1, 3}};
  CHECK(ComputePerplexity(c, only).value == 1.0);
  std::vector<LabelSequence> miss{{1, 3}, {2}};
  auto inf = ComputePerplexity(c, miss);
  CHECK(inf.infinite);
  CHECK(std::isinf(inf.value));
  CHECK_THROWS_AS(ComputePerplexity(u, std::vector<LabelSequence>{}),
                  ContractViolation);
}

TEST_CASE("perplexity ignores corpus order") {
  Rng rng(104);
  auto corpus = RandomCorpus(3, 25, rng);
  NGramLM lm = TrainNGram(corpus, 3, 2, 0.2);
  auto held = RandomCorpus(3, 15, rng);
  double a = ComputePerplexity(lm, held).value;
  std::reverse(held.begin(), held.end());
  CHECK(ComputePerplexity(lm, held).value == doctest::Approx(a).epsilon(1e-13));
}

TEST_CASE("neural LM") {
  NeuralLmConfig cfg{3, 4, 5};
  auto lm = NeuralLM::Initialize(cfg, 7, 0.5);
  Rng rng(105);
  for (int i = 0; i < 20; ++i) {
    auto lp = lm.NextLogProbs(RandomLabels(3, i % 4, rng));
    double s = 0.0;
    for (double x : lp) s += std::exp(x);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  auto corpus = RandomCorpus(3, 6, rng);
  auto r = lm.CorpusLossAndGrad(corpus);
  std::vector<double> params(lm.params().values().begin(), lm.params().values().end());
  ScalarLoss f = [&](std::span<const double> p) {
    NeuralLM copy = lm;
    std::copy(p.begin(), p.end(), copy.params().values().begin());
    return copy.CorpusLossAndGrad(corpus).loss;
  };
  CHECK(CheckGradient(f, params, r.gradient).max_rel_error < 1e-4);

  NeuralLmTraining tr;
  tr.steps = 60;
  tr.seed = 3;
  auto big = RandomCorpus(3, 40, rng);
  auto a = TrainNeuralLM(big, cfg, tr);
  auto b = TrainNeuralLM(big, cfg, tr);
  CHECK(std::equal(a.params().values().begin(), a.params().values().end(),
                   b.params().values().begin()));
  auto init = NeuralLM::Initialize(cfg, tr.seed, tr.init_scale);
  CHECK(a.CorpusLossAndGrad(big).loss < init.CorpusLossAndGrad(big).loss);
  CHECK_THROWS_AS(TrainNeuralLM(std::vector<LabelSequence>{}, cfg, tr), TrainingError);
}

TEST_CASE("LM text format") {
  std::vector<LabelSequence> corpus{{1, 2, 3}, {}, {4}};
  std::stringstream ss;
  WriteLmText(ss, corpus);
  CHECK(ReadLmText(ss) == corpus);
  std::stringstream bad("1 2\n3 x\n");
  CHECK_THROWS_AS(ReadLmText(bad), FormatError);
}
