// tests/unit/test_lattice.cc

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
#include <string_view>

#include <doctest.h>

#include "test_support.h"
#include "tslab/error.h"
#include "tslab/lattice.h"
#include "tslab/numerics.h"
#include "tslab/transducer_graph.h"

using namespace tslab;
using tslab::testing::RandomLabels;
using tslab::testing::RandomModel;
using tslab::testing::Rng;

namespace {

// log P(y_t | collapse(y_<t), h_t), evaluated step by step on the model.
double StepLogProb(const TransducerModel& m, const Matrix& H, int t,
                   const LabelSequence& history, Label y) {
  Vector h = H.row(t).transpose();
  return std::log(m.StepPosterior(h, m.PredictContext(history))(y));
}

// Sum over all positions of the S labels among T frames.
double EnumerateAlignments(const TransducerModel& m, const Matrix& X,
                           const LabelSequence& a) {
  const int T = static_cast<int>(X.rows());
  const int S = static_cast<int>(a.size());
  Matrix H = m.Encode(X);
  std::vector<double> terms;
  for (int mask = 0; mask < (1 << T); ++mask) {
    if (__builtin_popcount(mask) != S) continue;
    double lp = 0.0;
    LabelSequence hist;
    for (int t = 0; t < T; ++t) {
      Label y = (mask >> t) & 1 ? a[hist.size()] : kBlank;
      lp += StepLogProb(m, H, t, hist, y);
      if (y != kBlank) hist.push_back(y);
    }
    terms.push_back(lp);
  }
  return terms.empty() ? kLogZero : LogSumExp(terms);
}

}  // namespace

TEST_CASE("sequence log-probability special cases") {
  auto m = RandomModel(2, 0, 61);
  Matrix X = RandomFeatures(4, 2, 62);
  Matrix H = m.Encode(X);
  double all_blank = 0.0;
  for (int t = 0; t < 4; ++t) all_blank += StepLogProb(m, H, t, {}, kBlank);
  CHECK(std::abs(SeqLogProb(m, X, {}) - all_blank) < 1e-12);

  LabelSequence full{2, 1, 1, 2};
  double path = 0.0;
  LabelSequence hist;
  for (int t = 0; t < 4; ++t) {
    path += StepLogProb(m, H, t, hist, full[t]);
    hist.push_back(full[t]);
  }
  CHECK(std::abs(SeqLogProb(m, X, full) - path) < 1e-12);

  LabelSequence two{1, 2};
  CHECK(std::abs(SeqLogProb(m, X, two) - EnumerateAlignments(m, X, two)) < 1e-12);
  CHECK(std::abs(BruteForceSeqLogProb(m, X, two) - EnumerateAlignments(m, X, two)) <
        1e-12);

  Matrix X1 = RandomFeatures(1, 2, 63);
  double one = StepLogProb(m, m.Encode(X1), 0, {}, 2);
  CHECK(std::abs(BruteForceSeqLogProb(m, X1, {2}) - one) < 1e-12);
  CHECK(std::abs(SeqLogProb(m, X1, {2}) - one) < 1e-12);
}

TEST_CASE("impossible targets score exact zero") {
  auto m = RandomModel(2, 0, 64);
  Matrix X = RandomFeatures(2, 2, 65);
  CHECK(SeqLogProb(m, X, {1, 2, 1}) == kLogZero);
  CHECK(BruteForceSeqLogProb(m, X, {1, 2, 1}) == kLogZero);
  TransducerGraph g(m, X);
  Lattice lat(g, {1, 1, 1});
  CHECK(lat.Unreachable());
  TransducerGraph g2(m, X);
  CHECK_FALSE(Lattice(g2, {1, 1}).Unreachable());
}

TEST_CASE("brute-force and table guards") {
  auto m = RandomModel(3, 0, 66);
  CHECK_THROWS_AS(BruteForceSeqLogProb(m, RandomFeatures(25, 2, 1),
                                       LabelSequence(12, 1)),
                  OracleScaleError);
  CHECK_THROWS_AS(ComputePosteriorTable(m, RandomFeatures(10, 2, 1), 10),
                  OracleScaleError);
}

TEST_CASE("forward-backward equals enumeration over seeded cases") {
  Rng rng(67);
  for (int i = 0; i < 100; ++i) {
    const int V = 1 + i % 3;
    const int T = 1 + static_cast<int>(rng() % 5);
    const int S = static_cast<int>(rng() % (T + 1));
    auto m = RandomModel(V, i % 2, rng(),
                         i % 5 == 4 ? PredictionCell::kLstm : PredictionCell::kElman);
    Matrix X = RandomFeatures(T, 2, rng());
    auto a = RandomLabels(V, S, rng);
    double fb = SeqLogProb(m, X, a);
    CHECK(std::abs(fb - BruteForceSeqLogProb(m, X, a)) < 1e-10);
    CHECK(std::abs(fb - EnumerateAlignments(m, X, a)) < 1e-10);
  }
}

TEST_CASE("lattice cut invariance and boundary values") {
  Rng rng(68);
  for (int i = 0; i < 30; ++i) {
    auto m = RandomModel(3, i % 2, rng());
    const int T = 2 + static_cast<int>(rng() % 6);
    const int S = static_cast<int>(rng() % (T + 1));
    Matrix X = RandomFeatures(T, 2, rng());
    auto a = RandomLabels(3, S, rng);
    TransducerGraph g(m, X);
    Lattice lat(g, a);
    const double ll = lat.LogLikelihood();
    CHECK(std::abs(lat.Alpha(T, S) - ll) < 1e-12);
    CHECK(std::abs(lat.Beta(0, 0) - ll) < 1e-12);
    for (int t = 0; t <= T; ++t) CHECK(std::abs(lat.CutLogSum(t) - ll) < 1e-9);
    double blank = lat.ExpectedBlankProbability();
    CHECK(blank >= 0.0);
    CHECK(blank <= 1.0);
  }
}

TEST_CASE("posterior table") {
  for (int seed = 0; seed < 5; ++seed) {
    auto m = RandomModel(2, seed % 2, 70 + seed);
    Matrix X = RandomFeatures(4, 2, 80 + seed);
    auto table = ComputePosteriorTable(m, X, 4);
    CHECK(table.size() == 31);
    double total = 0.0;
    for (const auto& [a, p] : table) {
      total += p;
      CHECK(std::abs(std::log(p) - SeqLogProb(m, X, a)) < 1e-10);
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
    auto shorter = ComputePosteriorTable(m, X, 2);
    CHECK(shorter.size() == 7);
  }
  auto m1 = RandomModel(1, 0, 90);
  auto t1 = ComputePosteriorTable(m1, RandomFeatures(1, 2, 91), 1);
  CHECK(t1.size() == 2);
  CHECK(std::abs(t1[{}] + t1[{1}] - 1.0) < 1e-15);
}

TEST_CASE("all label sequences are ordered by length then lexicographically") {
  auto all = AllLabelSequences(2, 2);
  std::vector<LabelSequence> expected{{}, {1}, {2}, {1, 1}, {1, 2}, {2, 1}, {2, 2}};
  CHECK(all == expected);
  CHECK(AllLabelSequences(3, 0).size() == 1);
}

TEST_CASE("cross-entropy loss") {
  auto m = RandomModel(2, 0, 92);
  Matrix X = RandomFeatures(3, 2, 93);
  std::vector<Utterance> one{{"a", X, {1}}};
  std::vector<Utterance> two{{"a", X, {1}}, {"b", X, {1}}};
  auto l1 = CeLossAndGrad(m, one);
  auto l2 = CeLossAndGrad(m, two);
  CHECK(std::abs(l1.loss + SeqLogProb(m, X, {1})) < 1e-12);
  CHECK(std::abs(l1.loss - l2.loss) < 1e-12);
  REQUIRE(l1.gradient.size() == m.NumParams());
  for (std::size_t i = 0; i < l1.gradient.size(); ++i)
    CHECK(std::abs(l1.gradient[i] - l2.gradient[i]) < 1e-12);

  // Output bias that puts all mass on blank: the empty target is certain.
  auto flat = m.Flatten();
  const auto& out_w = m.params().block(m.blocks().out_w);
  std::fill(flat.begin() + out_w.offset, flat.begin() + out_w.offset + out_w.size(), 0.0);
  const auto& out_b = m.params().block(m.blocks().out_b);
  flat[out_b.offset] = 60.0;
  TransducerModel certain(m.config());
  certain.Unflatten(flat);
  std::vector<Utterance> empty_target{{"z", X, {}}};
  CHECK(CeLossAndGrad(certain, empty_target).loss < 1e-20);

  std::vector<Utterance> bad{{"ok", X, {1}}, {"too-long", X, {1, 1, 1, 1}}};
  try {
    CeLossAndGrad(m, bad);
    FAIL("expected TrainingDataError");
  } catch (const TrainingDataError& e) {
    CHECK(std::string_view(e.what()).find("too-long") != std::string_view::npos);
  }
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  Rng rng(94);
  for (auto [ctx, cell] : {std::pair{0, PredictionCell::kElman},
                           std::pair{0, PredictionCell::kLstm},
                           std::pair{1, PredictionCell::kElman}}) {
    auto m = RandomModel(2, ctx, rng(), cell);
    std::vector<Utterance> batch{{"a", RandomFeatures(4, 2, rng()), {1, 2}},
                                 {"b", RandomFeatures(2, 2, rng()), {}},
                                 {"c", RandomFeatures(3, 2, rng()), {2, 2, 1}}};
    auto r = CeLossAndGrad(m, batch);
    ScalarLoss f = [&](std::span<const double> p) {
      TransducerModel copy = m;
      copy.Unflatten(p);
      return CeLossAndGrad(copy, batch).loss;
    };
    auto params = m.Flatten();
    CHECK(CheckGradient(f, params, r.gradient).max_rel_error < 1e-4);
  }
}
