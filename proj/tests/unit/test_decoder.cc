// tests/unit/test_decoder.cc

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
#include <numeric>

#include <doctest.h>

#include "test_support.h"
#include "tslab/decoder.h"
#include "tslab/error.h"
#include "tslab/ilm.h"
#include "tslab/lattice.h"
#include "tslab/lm.h"
#include "tslab/oracle_suite.h"

using namespace tslab;
using tslab::testing::RandomDoubles;
using tslab::testing::RandomLabels;
using tslab::testing::RandomModel;
using tslab::testing::Rng;

namespace {

std::vector<double> RandomDist(int n, Rng& rng) {
  auto p = RandomDoubles(n, 0.01, 1.0, rng);
  double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= z;
  return p;
}

NGramLM SmallBigram() {
  return TrainNGram(std::vector<LabelSequence>{{1, 2}, {2, 2, 1}, {1}}, 2, 2, 0.5);
}

}  // namespace

TEST_CASE("blank reduction examples") {
  std::vector<double> p{0.5, 0.3, 0.2};
  auto r = ReduceBlank(p, BlankReduction::Linear(0.5));
  CHECK(std::abs(r[0] - 1.0 / 3.0) < 1e-15);
  CHECK(std::abs(r[1] - 0.4) < 1e-15);
  CHECK(std::abs(r[2] - 0.8 / 3.0) < 1e-15);

  CHECK(ReduceBlank(p, BlankReduction::Linear(1.0)) == p);
  CHECK(ReduceBlank(p, BlankReduction::Exponential(1.0)) == p);
  CHECK(ReduceBlank(p, BlankReduction::Off()) == p);
  auto zero = ReduceBlank(p, BlankReduction::Linear(0.0));
  CHECK(zero[0] == 0.0);
  CHECK(std::abs(zero[1] - 0.6) < 1e-15);
  CHECK(std::abs(zero[2] - 0.4) < 1e-15);
  auto sq = ReduceBlank(p, BlankReduction::Exponential(2.0));
  CHECK(std::abs(sq[0] - 0.25 / 0.75) < 1e-15);
}

TEST_CASE("blank reduction errors") {
  std::vector<double> p{0.5, 0.3, 0.2};
  CHECK_THROWS_AS(ReduceBlank(p, BlankReduction::Linear(1.5)), ConfigError);
  CHECK_THROWS_AS(ReduceBlank(p, BlankReduction::Linear(-0.1)), ConfigError);
  CHECK_THROWS_AS(ReduceBlank(p, BlankReduction::Exponential(0.9)), ConfigError);
  std::vector<double> bad{0.5, 0.3, 0.3};
  CHECK_THROWS_AS(ReduceBlank(bad, BlankReduction::Linear(0.5)), ContractViolation);
}

TEST_CASE("blank reduction properties") {
  Rng rng(401);
  for (int i = 0; i < 500; ++i) {
    auto p = RandomDist(4, rng);
    double rho = RandomDoubles(1, 0.0, 1.0, rng)[0];
    double gamma = 1.0 + RandomDoubles(1, 0.0, 4.0, rng)[0];
    for (auto red : {BlankReduction::Linear(rho), BlankReduction::Exponential(gamma)}) {
      auto q = ReduceBlank(p, red);
      CHECK(std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0) < 1e-12);
      for (int a = 1; a < 4; ++a)
        for (int b = 1; b < 4; ++b)
          if (p[a] < p[b]) CHECK(q[a] < q[b]);
    }
    double lower = rho * 0.5;
    CHECK(ReduceBlank(p, BlankReduction::Linear(lower))[0] <
          ReduceBlank(p, BlankReduction::Linear(rho))[0]);
  }
}

TEST_CASE("fusion mode names") {
  for (auto m : {FusionMode::kNone, FusionMode::kSf, FusionMode::kSfIlm,
                 FusionMode::kSfDr, FusionMode::kSfReduceBlank})
    CHECK(ParseFusionMode(FusionModeName(m)) == m);
  CHECK(FusionModeName(FusionMode::kSfIlm) == "sf_ilm");
  CHECK_THROWS_AS(ParseFusionMode("lm"), ConfigError);
}

TEST_CASE("beam configuration errors") {
  auto m = RandomModel(2, 0, 402);
  Matrix X = RandomFeatures(3, 2, 403);
  NGramLM elm = SmallBigram();
  auto ilm = ZeroEncoderIlm(m, true);
  BeamConfig c;
  c.beam_size = 0;
  CHECK_THROWS_AS(BeamSearch(m, X, nullptr, nullptr, c), ConfigError);
  c.beam_size = 2;
  c.n_best_out = 0;
  CHECK_THROWS_AS(BeamSearch(m, X, nullptr, nullptr, c), ConfigError);
  c.n_best_out = 1;
  c.lambda1 = -0.1;
  CHECK_THROWS_AS(BeamSearch(m, X, nullptr, nullptr, c), ConfigError);
  c.lambda1 = 0.3;
  c.fusion = FusionMode::kSf;
  CHECK_THROWS_AS(BeamSearch(m, X, nullptr, nullptr, c), ConfigError);
  c.fusion = FusionMode::kSfIlm;
  CHECK_THROWS_AS(BeamSearch(m, X, &elm, nullptr, c), ConfigError);
  CHECK_NOTHROW(BeamSearch(m, X, &elm, &ilm, c));
  NGramLM wide = TrainNGram(std::vector<LabelSequence>{{3}}, 3, 2, 0.5);
  c.fusion = FusionMode::kSf;
  CHECK_THROWS_AS(BeamSearch(m, X, &wide, nullptr, c), VocabularyError);
  CHECK_THROWS_AS(BeamSearch(m, Matrix(0, 2), nullptr, nullptr, BeamConfig{}),
                  EmptyInputError);
}

TEST_CASE("exhaustive beam without LM finds the posterior argmax") {
  Rng rng(404);
  for (int i = 0; i < 10; ++i) {
    auto m = RandomModel(2, i % 2, rng());
    Matrix X = RandomFeatures(4, 2, rng());
    BeamConfig c;
    c.beam_size = 81;
    c.n_best_out = 3;
    auto hyps = BeamSearch(m, X, nullptr, nullptr, c);
    auto table = ComputePosteriorTable(m, X, 4);
    auto best = std::max_element(table.begin(), table.end(), [](auto& a, auto& b) {
      return a.second < b.second;
    });
    CHECK(hyps[0].labels == best->first);
    CHECK(std::abs(hyps[0].transducer - std::log(best->second)) < 1e-10);
    for (std::size_t k = 1; k < hyps.size(); ++k)
      CHECK(hyps[k - 1].combined >= hyps[k].combined);
  }
}

TEST_CASE("decoder oracle checks") {
  for (const auto& check : CheckDecoderExactness(11)) {
    INFO(check.name << ": " << check.detail);
    CHECK(check.passed);
  }
}

TEST_CASE("hypothesis scores recombine from their components") {
  Rng rng(405);
  NGramLM elm = SmallBigram();
  for (int i = 0; i < 10; ++i) {
    auto m = RandomModel(2, i % 2, rng());
    Matrix X = RandomFeatures(5, 2, rng());
    auto zero = ZeroEncoderIlm(m, true);
    for (auto mode : {FusionMode::kSf, FusionMode::kSfIlm}) {
      BeamConfig c;
      c.beam_size = 4;
      c.n_best_out = 4;
      c.fusion = mode;
      c.lambda1 = 0.45;
      c.lambda2 = mode == FusionMode::kSfIlm ? 0.25 : 0.0;
      auto hyps = BeamSearch(m, X, &elm, &zero, c);
      for (const auto& h : hyps) {
        CHECK(std::abs(h.combined - (h.transducer + c.lambda1 * h.elm -
                                     c.lambda2 * h.ilm)) < 1e-12);
        CHECK(std::abs(h.elm - LmLogProb(elm, h.labels)) < 1e-12);
        if (mode == FusionMode::kSfIlm) {
          double ilm = 0.0;
          LabelSequence prefix;
          for (Label l : h.labels) {
            ilm += zero.scorer->NextLogProbs(prefix)[l];
            prefix.push_back(l);
          }
          CHECK(std::abs(h.ilm - ilm) < 1e-12);
        }
      }
      // A common positive scale on all three terms keeps the ranking.
      for (double scale : {0.1, 3.0}) {
        std::vector<double> scaled;
        for (const auto& h : hyps)
          scaled.push_back(scale * h.transducer + scale * c.lambda1 * h.elm -
                           scale * c.lambda2 * h.ilm);
        CHECK(std::is_sorted(scaled.rbegin(), scaled.rend()));
      }
    }
  }
}

TEST_CASE("edit distance") {
  CHECK(EditDistance({1, 2, 3}, {1, 2, 3}) == 0);
  CHECK(EditDistance({}, {1, 2}) == 2);
  CHECK(EditDistance({1, 2, 3}, {1, 3}) == 1);
  CHECK(EditDistance({1, 2}, {2, 1}) == 2);
  CHECK(EditDistance({1, 1, 2, 3}, {3, 1, 2}) == 2);
  Rng rng(406);
  for (int i = 0; i < 200; ++i) {
    auto a = RandomLabels(3, static_cast<int>(rng() % 6), rng);
    auto b = RandomLabels(3, static_cast<int>(rng() % 6), rng);
    auto c = RandomLabels(3, static_cast<int>(rng() % 6), rng);
    int ab = EditDistance(a, b);
    CHECK(ab == EditDistance(b, a));
    CHECK(ab <= EditDistance(a, c) + EditDistance(c, b));
    CHECK(ab >= static_cast<int>(std::max(a.size(), b.size()) -
                                 std::min(a.size(), b.size())));
  }
}

TEST_CASE("word error rate") {
  std::vector<LabelSequence> refs{{1, 2}, {3}, {1, 1, 2}};
  CHECK(WordErrorRate(refs, refs) == 0.0);
  std::vector<LabelSequence> r1{{1, 2}}, h1{{1}};
  CHECK(WordErrorRate(r1, h1) == 50.0);
  // 1 + 1 + 2 edits over 6 reference labels.
  std::vector<LabelSequence> hyps{{1}, {2}, {2, 1, 2, 3}};
  CHECK(std::abs(WordErrorRate(refs, hyps) - 100.0 * 4.0 / 6.0) < 1e-12);
  std::vector<LabelSequence> empty{{}, {}};
  CHECK_THROWS_AS(WordErrorRate(empty, empty), UndefinedMetricError);
  CHECK_THROWS_AS(WordErrorRate(refs, r1), ContractViolation);
}
