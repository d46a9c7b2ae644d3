// tests/unit/test_ilm.cc

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

#include <cmath>
#include <sstream>

#include <doctest.h>

#include "test_support.h"
#include "tslab/dataset.h"
#include "tslab/error.h"
#include "tslab/ilm.h"
#include "tslab/lattice.h"
#include "tslab/lm.h"
#include "tslab/numerics.h"
#include "tslab/oracle_suite.h"

using namespace tslab;
using tslab::testing::RandomLabels;
using tslab::testing::RandomModel;
using tslab::testing::Rng;

namespace {

std::vector<LabelSequence> RandomCorpus(int V, int n, Rng& rng) {
  std::vector<LabelSequence> c;
  for (int i = 0; i < n; ++i)
    c.push_back(RandomLabels(V, 1 + static_cast<int>(rng() % 4), rng));
  return c;
}

const TableScorer& AsTable(const IlmEstimate& e) {
  return dynamic_cast<const TableScorer&>(*e.scorer);
}

}  // namespace

TEST_CASE("zero-encoder ILM normalization") {
  Rng rng(201);
  for (int i = 0; i < 100; ++i) {
    auto m = RandomModel(3, i % 2, rng());
    auto ilm = ZeroEncoderIlm(m, true);
    CHECK(ilm.kind == IlmKind::kZeroEncoderRenorm);
    CHECK_FALSE(ilm.scorer->HasEos());
    auto lp = ilm.scorer->NextLogProbs(RandomLabels(3, i % 3, rng));
    CHECK(lp[0] == kLogZero);
    double s = 0.0;
    for (Label k = 1; k <= 3; ++k) s += std::exp(lp[k]);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("zero-encoder ILM uses the zero vector through the joint") {
  auto m = RandomModel(2, 0, 202);
  auto raw = ZeroEncoderIlm(m, false);
  LabelSequence h{2, 1};
  Vector p = m.StepPosterior(Vector::Zero(m.config().enc_dim), m.PredictContext(h));
  auto lp = raw.scorer->NextLogProbs(h);
  for (Label k = 1; k <= 2; ++k) CHECK(std::abs(std::exp(lp[k]) - p(k)) < 1e-14);
}

TEST_CASE("raw and renormalized variants agree without blank mass") {
  auto m = RandomModel(3, 0, 203);
  auto flat = m.Flatten();
  const auto& out_w = m.params().block(m.blocks().out_w);
  const auto& out_b = m.params().block(m.blocks().out_b);
  for (int j = 0; j < out_w.cols; ++j) flat[out_w.offset + j] = 0.0;
  flat[out_b.offset] = -900.0;
  TransducerModel no_blank(m.config());
  no_blank.Unflatten(flat);
  auto raw = ZeroEncoderIlm(no_blank, false);
  auto ren = ZeroEncoderIlm(no_blank, true);
  for (const LabelSequence& h : {LabelSequence{}, LabelSequence{3}, LabelSequence{1, 2}}) {
    auto a = raw.scorer->NextLogProbs(h);
    auto b = ren.scorer->NextLogProbs(h);
    for (Label k = 1; k <= 3; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-15);
  }
}

TEST_CASE("raw perplexity is never below renormalized perplexity") {
  Rng rng(204);
  for (int i = 0; i < 20; ++i) {
    auto m = RandomModel(3, i % 2, rng());
    auto corpus = RandomCorpus(3, 10, rng);
    double raw = ComputePerplexity(*ZeroEncoderIlm(m, false).scorer, corpus).value;
    double ren = ComputePerplexity(*ZeroEncoderIlm(m, true).scorer, corpus).value;
    CHECK(raw >= ren);
  }
}

TEST_CASE("density-ratio ILM") {
  Rng rng(205);
  auto corpus = RandomCorpus(3, 30, rng);
  auto dr = DensityRatioIlm(corpus, 3, {2, 0.1});
  CHECK(dr.kind == IlmKind::kDensityRatio);
  CHECK(dynamic_cast<const NGramLM&>(*dr.scorer) == TrainNGram(corpus, 3, 2, 0.1));
  CHECK_THROWS_AS(DensityRatioIlm(std::vector<LabelSequence>{}, 3, {}), TrainingError);

  LabelSequence only{1, 2, 2};
  auto single = DensityRatioIlm(std::vector<LabelSequence>{only}, 2, {2, 0.1});
  double best = LmLogProb(*single.scorer, only);
  for (const auto& a : AllLabelSequences(2, 3))
    if (a.size() == only.size() && a != only)
      CHECK(LmLogProb(*single.scorer, a) < best);
}

TEST_CASE("density ratio beats a disjoint-text LM on its own transcripts") {
  SyntheticDatasetConfig cfg;
  cfg.num_train = 200;
  cfg.num_dev = 0;
  cfg.num_text = 200;
  cfg.seed = 7;
  auto corpus = GenerateDataset(cfg);
  auto transcripts = Transcripts(corpus.train);
  auto dr = DensityRatioIlm(transcripts, cfg.num_labels, {});
  NGramLM elm = TrainNGram(corpus.text, cfg.num_labels, 2, 0.1);
  CHECK(ComputePerplexity(*dr.scorer, transcripts).value <
        ComputePerplexity(elm, transcripts).value);
}

TEST_CASE("mini-net ILM") {
  Rng rng(206);
  auto m = RandomModel(3, 0, rng());
  auto corpus = RandomCorpus(3, 12, rng);

  auto zero = MiniNetIlm(m, corpus, {0, 0.1});
  CHECK(zero.estimate.kind == IlmKind::kMiniNet);
  auto z = ZeroEncoderIlm(m, true);
  for (const LabelSequence& h : {LabelSequence{}, LabelSequence{2, 3}})
    CHECK(zero.estimate.scorer->NextLogProbs(h) == z.scorer->NextLogProbs(h));

  auto slow = MiniNetIlm(m, corpus, {50, 1e-3});
  for (std::size_t i = 1; i < slow.loss_trace.size(); ++i)
    CHECK(slow.loss_trace[i] <= slow.loss_trace[i - 1]);

  Vector v = Vector::Constant(m.config().enc_dim, 0.2);
  auto [loss, grad] = MiniNetLossAndGrad(m, v, corpus);
  ScalarLoss f = [&](std::span<const double> p) {
    Vector w = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
    return MiniNetLossAndGrad(m, w, corpus).first;
  };
  std::vector<double> at(v.data(), v.data() + v.size());
  std::vector<double> g(grad.data(), grad.data() + grad.size());
  CHECK(CheckGradient(f, at, g).max_rel_error < 1e-4);
  CHECK(loss > 0.0);

  auto trained = MiniNetIlm(m, corpus, {400, 0.5});
  CHECK(ComputePerplexity(*trained.estimate.scorer, corpus).value <=
        ComputePerplexity(*z.scorer, corpus).value);
  CHECK_THROWS_AS(MiniNetIlm(m, std::vector<LabelSequence>{}, {}), TrainingError);
  CHECK_THROWS_AS(MiniNetLossAndGrad(m, Vector::Zero(1), corpus), ConfigError);
}

TEST_CASE("exact ILM") {
  auto m = RandomModel(2, 0, 207);
  Matrix X = RandomFeatures(4, 2, 208);
  std::vector<WeightedFeatures> one{{X, 1.0}};
  auto e1 = ExactIlm(m, one, 4);
  CHECK(e1.kind == IlmKind::kExact);
  CHECK(AsTable(e1).table() == ComputePosteriorTable(m, X, 4));

  std::vector<WeightedFeatures> twice{{X, 0.5}, {X, 0.5}};
  auto e2 = ExactIlm(m, twice, 4);
  const auto& t2 = AsTable(e2).table();
  for (const auto& [a, p] : ComputePosteriorTable(m, X, 4))
    CHECK(std::abs(t2.at(a) - p) < 1e-15);

  std::vector<WeightedFeatures> eight;
  Rng rng(209);
  std::vector<double> w(8);
  double total = 0.0;
  for (double& x : w) total += (x = 0.1 + static_cast<double>(rng() % 100));
  for (int i = 0; i < 8; ++i)
    eight.push_back({RandomFeatures(1 + i % 4, 2, rng()), w[i] / total});
  auto e8 = ExactIlm(m, eight, 4);
  const auto& t8 = AsTable(e8);
  CHECK(std::abs(t8.Total() - 1.0) < 1e-9);
  PosteriorTable direct;
  for (const auto& item : eight)
    for (const auto& [a, p] : ComputePosteriorTable(m, item.features, 4))
      direct[a] += item.weight * p;
  for (const auto& [a, p] : direct) CHECK(std::abs(t8.table().at(a) - p) < 1e-15);
  for (const auto& [a, p] : t8.table())
    if (p > 0.0) CHECK(std::abs(LmLogProb(t8, a) - std::log(p)) < 1e-12);

  CHECK_THROWS_AS(ExactIlm(m, std::vector<WeightedFeatures>{{X, 0.5}}, 4),
                  ContractViolation);
  CHECK_THROWS_AS(ExactIlm(m, std::vector<WeightedFeatures>{}, 4), ContractViolation);
}

TEST_CASE("exact ILM is linear in the dataset weights") {
  auto m = RandomModel(2, 1, 210);
  Matrix A = RandomFeatures(3, 2, 211), B = RandomFeatures(4, 2, 212);
  const double lam = 0.3;
  auto ea = ExactIlm(m, std::vector<WeightedFeatures>{{A, 1.0}}, 4);
  auto eb = ExactIlm(m, std::vector<WeightedFeatures>{{B, 1.0}}, 4);
  const auto& ta = AsTable(ea).table();
  const auto& tb = AsTable(eb).table();
  auto mix = ExactIlm(m, std::vector<WeightedFeatures>{{A, lam}, {B, 1.0 - lam}}, 4);
  for (const auto& [a, p] : AsTable(mix).table()) {
    double pa = ta.count(a) ? ta.at(a) : 0.0;
    double pb = tb.count(a) ? tb.at(a) : 0.0;
    CHECK(std::abs(p - (lam * pa + (1.0 - lam) * pb)) < 1e-12);
  }
}

TEST_CASE("exact ILM table export") {
  PosteriorTable t{{{}, 0.5}, {{2}, 0.25}, {{1, 2}, 0.25}};
  TableScorer s(2, t);
  std::ostringstream os;
  WriteIlmTable(os, s);
  char expected[256];
  std::snprintf(expected, sizeof(expected), "\t%.17g\n1 2\t%.17g\n2\t%.17g\n",
                std::log(0.5), std::log(0.25), std::log(0.25));
  CHECK(os.str() == expected);
}

TEST_CASE("every estimate gives finite perplexity on training transcripts") {
  Rng rng(213);
  auto m = RandomModel(3, 0, rng());
  auto corpus = RandomCorpus(3, 15, rng);
  std::vector<IlmEstimate> estimates{
      ZeroEncoderIlm(m, true), ZeroEncoderIlm(m, false),
      DensityRatioIlm(corpus, 3, {}), MiniNetIlm(m, corpus, {20, 0.1}).estimate};
  for (const auto& e : estimates)
    CHECK_FALSE(ComputePerplexity(*e.scorer, corpus).infinite);
}
