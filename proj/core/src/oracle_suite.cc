// core/src/oracle_suite.cc

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

#include "tslab/oracle_suite.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "tslab/dataset.h"
#include "tslab/decoder.h"
#include "tslab/ilm.h"
#include "tslab/lattice.h"
#include "tslab/lm.h"
#include "tslab/numerics.h"
#include "tslab/seqtrain.h"

namespace tslab {

namespace {

constexpr double kGradEps = 1e-5;
constexpr double kGradTol = 1e-4;

TransducerModel MicroModel(int V, int context, PredictionCell cell,
                           std::uint64_t seed) {
  return TransducerModel::Initialize(ModelConfig::Micro(V, context, cell),
                                     seed, 0.5);
}

LabelSequence RandomLabels(int V, int len, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(1, V);
  LabelSequence out(len);
  for (auto& l : out) l = pick(rng);
  return out;
}

NGramLM ToyBigram(int V) {
  std::vector<LabelSequence> corpus;
  for (int a = 1; a <= V; ++a) {
    corpus.push_back({a});
    for (int b = 1; b <= V; ++b) corpus.push_back({a, b, a});
  }
  corpus.push_back({1, 1});
  return TrainNGram(corpus, V, 2, 0.5);
}

OracleCheck Finish(std::string name, double metric, double tol,
                   std::string detail = {}) {
  return {std::move(name), metric < tol, metric, tol, std::move(detail)};
}

template <typename LossFn>
double GradError(const TransducerModel& base, LossFn loss) {
  LossResult r = loss(base);
  auto params = base.Flatten();
  ScalarLoss f = [&](std::span<const double> p) {
    TransducerModel m = base;
    m.Unflatten(p);
    return loss(m).loss;
  };
  return CheckGradient(f, params, r.gradient, kGradEps).max_rel_error;
}

// log P(a | X) for every label sequence, by direct step products over all
// alignments; the step distribution may be blank-reduced.
std::map<LabelSequence, double> BruteForcePosteriors(
    const TransducerModel& model, const Matrix& features,
    const BlankReduction& reduction) {
  const int V = model.config().num_labels;
  const int T = static_cast<int>(features.rows());
  Matrix enc = model.Encode(features);
  std::map<LabelSequence, double> out;
  std::vector<int> y(T, 0);
  for (;;) {
    LabelSequence history;
    double lp = 0.0;
    for (int t = 0; t < T; ++t) {
      Vector h = enc.row(t).transpose();
      Vector dist = model.StepPosterior(h, model.PredictContext(history));
      std::vector<double> p(dist.data(), dist.data() + dist.size());
      if (reduction.kind != BlankReduction::Kind::kOff)
        p = ReduceBlank(p, reduction);
      lp += std::log(p[y[t]]);
      if (y[t] != kBlank) history.push_back(y[t]);
    }
    auto [it, fresh] = out.try_emplace(history, lp);
    if (!fresh) it->second = LogAdd(it->second, lp);
    int t = 0;
    while (t < T && y[t] == V) y[t++] = 0;
    if (t == T) break;
    ++y[t];
  }
  return out;
}

double LabelOnlyScore(const SequenceScorer& s, const LabelSequence& a) {
  double v = 0.0;
  LabelSequence h;
  for (Label l : a) {
    v += s.NextLogProbs(h)[l];
    h.push_back(l);
  }
  return v;
}

bool SameHyps(const std::vector<Hypothesis>& a,
              const std::vector<Hypothesis>& b, bool compare_elm) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].labels != b[i].labels || a[i].transducer != b[i].transducer ||
        a[i].combined != b[i].combined)
      return false;
    if (compare_elm && a[i].elm != b[i].elm) return false;
  }
  return true;
}

}  // namespace

Matrix RandomFeatures(int frames, int input_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(frames, input_dim);
  for (int t = 0; t < frames; ++t)
    for (int d = 0; d < input_dim; ++d) x(t, d) = n(rng);
  return x;
}

OracleCheck CheckPosteriorNormalization(std::uint64_t seed) {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    std::uint64_t s = DeriveSeed(seed, "norm-" + std::to_string(i));
    auto model = MicroModel(2, i % 2 ? 1 : 0, PredictionCell::kElman, s);
    auto table = ComputePosteriorTable(model, RandomFeatures(4, 2, s + 1), 4);
    double total = 0.0;
    for (const auto& [a, p] : table) total += p;
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return Finish("posterior normalization (20 models, |V|=2, T=4)", worst,
                1e-9);
}

OracleCheck CheckAlignmentSums(std::uint64_t seed) {
  std::mt19937_64 rng(DeriveSeed(seed, "align"));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    int V = 1 + i % 3;
    int T = 1 + static_cast<int>(rng() % 5);
    int S = static_cast<int>(rng() % (T + 1));
    PredictionCell cell = i % 4 == 3 ? PredictionCell::kLstm
                                     : PredictionCell::kElman;
    auto model = MicroModel(V, i % 2, cell, rng());
    Matrix x = RandomFeatures(T, 2, rng());
    LabelSequence a = RandomLabels(V, S, rng);
    double fb = SeqLogProb(model, x, a);
    double bf = BruteForceSeqLogProb(model, x, a);
    worst = std::max(worst, std::abs(fb - bf));
  }
  return Finish("forward-backward vs alignment enumeration (100 cases)", worst,
                1e-10);
}

std::vector<OracleCheck> CheckGradients(std::uint64_t seed) {
  std::vector<OracleCheck> out;
  std::mt19937_64 rng(DeriveSeed(seed, "grad"));

  double ce = 0.0;
  for (auto [ctx, cell] : {std::pair{0, PredictionCell::kElman},
                           std::pair{0, PredictionCell::kLstm},
                           std::pair{1, PredictionCell::kElman}}) {
    auto model = MicroModel(2, ctx, cell, rng());
    std::vector<Utterance> batch{{"a", RandomFeatures(4, 2, rng()), {1, 2}},
                                 {"b", RandomFeatures(3, 2, rng()), {2}}};
    ce = std::max(ce, GradError(model, [&](const TransducerModel& m) {
                    return CeLossAndGrad(m, batch);
                  }));
  }
  out.push_back(Finish("gradient: CE", ce, kGradTol));

  NGramLM lm = ToyBigram(2);
  {
    auto model = MicroModel(2, 0, PredictionCell::kElman, rng());
    EmpiricalDistribution e{
        {RandomFeatures(3, 2, rng()), 0.6, {{{1, 2}, 0.7}, {{2}, 0.3}}},
        {RandomFeatures(2, 2, rng()), 0.4, {{{1}, 1.0}}}};
    SeqScales scales{0.7, 0.4};
    out.push_back(Finish("gradient: exact MMI",
                         GradError(model,
                                   [&](const TransducerModel& m) {
                                     return MmiLossExact(m, lm, scales, e, 3);
                                   }),
                         kGradTol));
  }
  NBestList list{"u", {{{1, 2}, 0, 0}, {{2}, 0, 0}, {{}, 0, 0}, {{2, 2, 1}, 0, 0}}};
  for (auto& h : list.hyps) h.log_p_lm = LmLogProb(lm, h.labels);
  const LabelSequence ref{1, 1};
  {
    auto model = MicroModel(2, 0, PredictionCell::kElman, rng());
    Matrix x = RandomFeatures(4, 2, rng());
    SeqScales scales{0.8, 0.3};
    out.push_back(Finish(
        "gradient: N-best MMI",
        GradError(model,
                  [&](const TransducerModel& m) {
                    return MmiLossNbest(m, lm, scales, list, ref, x);
                  }),
        kGradTol));
    out.push_back(Finish(
        "gradient: N-best MBR",
        GradError(model,
                  [&](const TransducerModel& m) {
                    return MbrLossNbest(m, lm, scales, list, ref, x,
                                        EditDistanceRisk());
                  }),
        kGradTol));
  }
  {
    auto model = MicroModel(2, 1, PredictionCell::kElman, rng());
    Matrix x = RandomFeatures(4, 2, rng());
    SeqScales scales{0.9, 0.5};
    out.push_back(Finish(
        "gradient: LF-MMI (unpruned)",
        GradError(model,
                  [&](const TransducerModel& m) {
                    return LfMmiLoss(m, lm, scales, x, ref, kNoPruning);
                  }),
        kGradTol));
  }
  return out;
}

OracleCheck CheckMmiCeEquivalence(std::uint64_t seed) {
  std::mt19937_64 rng(DeriveSeed(seed, "mmi-ce"));
  NGramLM lm = ToyBigram(2);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    auto model = MicroModel(2, i % 2, PredictionCell::kElman, rng());
    std::vector<Utterance> data;
    for (int m = 0; m < 3; ++m) {
      int T = 2 + static_cast<int>(rng() % 3);
      int S = static_cast<int>(rng() % (T + 1));
      data.push_back({"u" + std::to_string(m), RandomFeatures(T, 2, rng()),
                      RandomLabels(2, S, rng)});
    }
    double ce = CeLossAndGrad(model, data).loss;
    double mmi = MmiLossExact(model, lm, {1.0, 0.0},
                              EmpiricalFromUtterances(data), 4)
                     .loss;
    worst = std::max(worst, std::abs(ce - mmi));
  }
  return Finish("exact MMI (alpha=1, beta=0) equals CE", worst, 1e-10);
}

std::vector<OracleCheck> CheckLfMmiDenominator(std::uint64_t seed) {
  std::mt19937_64 rng(DeriveSeed(seed, "lfmmi"));
  double worst = 0.0, worst_pruned = 0.0;
  for (int i = 0; i < 10; ++i) {
    int V = 2 + i % 2;
    NGramLM lm = ToyBigram(V);
    auto model = MicroModel(V, 1, PredictionCell::kElman, rng());
    int T = 3 + i % 2;
    Matrix x = RandomFeatures(T, 2, rng());
    SeqScales scales{1.0, 0.2 * (i % 4)};
    std::vector<double> s;
    for (const auto& a : AllLabelSequences(V, T))
      s.push_back(SeqLogProb(model, x, a) + scales.beta * LmLogProb(lm, a));
    double exact = LogSumExp(s);
    worst = std::max(worst, std::abs(exact - LfMmiLogDenominator(
                                                 model, lm, scales, x,
                                                 kNoPruning)));
    worst_pruned = std::max(
        worst_pruned,
        std::abs(exact - LfMmiLogDenominator(model, lm, scales, x, 20)));
  }
  std::vector<OracleCheck> out;
  out.push_back(Finish("LF-MMI unpruned denominator equals enumeration", worst,
                       1e-9));
  OracleCheck report{"LF-MMI top-20 denominator error (reported only)", true,
                     worst_pruned, 0.0, "no tolerance"};
  out.push_back(report);
  return out;
}

std::vector<OracleCheck> CheckDecoderExactness(std::uint64_t seed) {
  std::mt19937_64 rng(DeriveSeed(seed, "decoder"));
  const int V = 2, T = 4;
  NGramLM elm = ToyBigram(V);
  struct Mode {
    FusionMode mode;
    double l1, l2;
    BlankReduction red;
  };
  const std::vector<Mode> modes = {
      {FusionMode::kNone, 0, 0, {}},
      {FusionMode::kSf, 0.5, 0, {}},
      {FusionMode::kSfIlm, 0.5, 0.3, {}},
      {FusionMode::kSfDr, 0.6, 0.4, {}},
      {FusionMode::kSfReduceBlank, 0.5, 0, BlankReduction::Linear(0.5)},
      {FusionMode::kSfReduceBlank, 0.4, 0, BlankReduction::Exponential(2.0)}};
  double worst = 0.0;
  int mismatches = 0;
  bool l1_identity = true, l2_identity = true;
  std::vector<LabelSequence> dr_corpus{{1}, {1, 2}, {2, 2, 1}, {2}};
  IlmEstimate dr = DensityRatioIlm(dr_corpus, V, {2, 0.5});
  for (int i = 0; i < 5; ++i) {
    auto model = MicroModel(V, i % 2, PredictionCell::kElman, rng());
    Matrix x = RandomFeatures(T, 2, rng());
    IlmEstimate zero = ZeroEncoderIlm(model, true);
    for (const Mode& m : modes) {
      const IlmEstimate* ilm = m.mode == FusionMode::kSfIlm ? &zero
                               : m.mode == FusionMode::kSfDr ? &dr
                                                             : nullptr;
      BeamConfig beam;
      beam.beam_size = 81;
      beam.fusion = m.mode;
      beam.lambda1 = m.l1;
      beam.lambda2 = m.l2;
      beam.blank_reduction = m.red;
      auto top = BeamSearch(model, x, &elm, ilm, beam)[0];

      auto post = BruteForcePosteriors(model, x, m.red);
      LabelSequence best;
      double best_score = kLogZero;
      bool first = true;
      for (const auto& [a, lp] : post) {
        double s = lp;
        if (m.mode != FusionMode::kNone) s += m.l1 * LmLogProb(elm, a);
        if (ilm) s -= m.l2 * LabelOnlyScore(*ilm->scorer, a);
        bool better = first || s > best_score ||
                      (s == best_score &&
                       (a.size() < best.size() ||
                        (a.size() == best.size() && a < best)));
        if (better) {
          best = a;
          best_score = s;
          first = false;
        }
      }
      if (top.labels != best) ++mismatches;
      worst = std::max(worst, std::abs(top.combined - best_score));
    }
    // Zero-scale identities, full output lists.
    BeamConfig none;
    none.beam_size = 6;
    none.n_best_out = 6;
    BeamConfig sf = none;
    sf.fusion = FusionMode::kSf;
    sf.lambda1 = 0.0;
    l1_identity = l1_identity &&
                  SameHyps(BeamSearch(model, x, nullptr, nullptr, none),
                           BeamSearch(model, x, &elm, nullptr, sf), false);
    sf.lambda1 = 0.4;
    BeamConfig sf_ilm = sf;
    sf_ilm.fusion = FusionMode::kSfIlm;
    sf_ilm.lambda2 = 0.0;
    l2_identity = l2_identity &&
                  SameHyps(BeamSearch(model, x, &elm, nullptr, sf),
                           BeamSearch(model, x, &elm, &zero, sf_ilm), true);
  }
  std::vector<OracleCheck> out;
  OracleCheck exact = Finish("exhaustive beam equals brute-force fused argmax",
                             worst, 1e-9,
                             std::to_string(mismatches) + " argmax mismatches");
  exact.passed = exact.passed && mismatches == 0;
  out.push_back(exact);
  out.push_back({"lambda1 = 0 reduces sf to none (bitwise)", l1_identity,
                 l1_identity ? 0.0 : 1.0, 0.5, ""});
  out.push_back({"lambda2 = 0 reduces sf_ilm to sf (bitwise)", l2_identity,
                 l2_identity ? 0.0 : 1.0, 0.5, ""});
  return out;
}

std::vector<OracleCheck> RunOracleSuite(std::uint64_t seed) {
  std::vector<OracleCheck> out;
  out.push_back(CheckPosteriorNormalization(seed));
  out.push_back(CheckAlignmentSums(seed));
  for (auto& c : CheckGradients(seed)) out.push_back(std::move(c));
  out.push_back(CheckMmiCeEquivalence(seed));
  for (auto& c : CheckLfMmiDenominator(seed)) out.push_back(std::move(c));
  for (auto& c : CheckDecoderExactness(seed)) out.push_back(std::move(c));
  return out;
}

}  // namespace tslab
