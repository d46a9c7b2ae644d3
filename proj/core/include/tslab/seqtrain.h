// core/include/tslab/seqtrain.h

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

#ifndef TSLAB_SEQTRAIN_H_
#define TSLAB_SEQTRAIN_H_

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tslab/lattice.h"
#include "tslab/lm.h"
#include "tslab/model.h"

namespace tslab {

// Exponents of the combined distribution
//   P_seq(a | X) = P_RNNT(a | X)^alpha P_LM(a)^beta / Z(X).
struct SeqScales {
  double alpha = 1.0;
  double beta = 0.3;

  void Validate() const;
};

using RiskFn =
    std::function<double(const LabelSequence& hyp, const LabelSequence& ref)>;

// Edit distance as a risk.
RiskFn EditDistanceRisk();

// Loss over an explicit hypothesis space and its derivative with respect to
// each hypothesis' log P_RNNT.
struct SpaceCriterion {
  double loss = 0.0;
  std::vector<double> p_seq;
  std::vector<double> d_log_p_rnnt;
};

// Normalized P_seq over the space. Throws DegenerateSpaceError when every
// entry is an exact zero.
std::vector<double> CombinedPosterior(std::span<const double> log_p_rnnt,
                                      std::span<const double> log_p_lm,
                                      const SeqScales& scales);

// -sum_i w_i log P_seq(i).
SpaceCriterion MmiOverSpace(std::span<const double> log_p_rnnt,
                            std::span<const double> log_p_lm,
                            const SeqScales& scales,
                            std::span<const double> target_weights);

// sum_i P_seq(i) risk_i.
SpaceCriterion MbrOverSpace(std::span<const double> log_p_rnnt,
                            std::span<const double> log_p_lm,
                            const SeqScales& scales,
                            std::span<const double> risks);

// P_seq over the given space for one utterance. Throws ContractViolation on
// an empty space or duplicates.
std::vector<double> PSeq(const TransducerModel& model,
                         const SequenceScorer& lm, const SeqScales& scales,
                         std::span<const LabelSequence> space,
                         const Matrix& features);

using SequenceDistribution = std::vector<std::pair<LabelSequence, double>>;

struct EmpiricalEntry {
  Matrix features;
  double weight = 0.0;             // Pr(X)
  SequenceDistribution targets;    // Pr(a | X)
};
using EmpiricalDistribution = std::vector<EmpiricalEntry>;

// Throws ContractViolation unless weights are non-negative and normalized.
void ValidateEmpirical(const EmpiricalDistribution& empirical);

// Empirical distribution of a training set: Pr(X) = 1/M, Pr(a|X) = 1 on the
// transcript.
EmpiricalDistribution EmpiricalFromUtterances(std::span<const Utterance> data);

// Exact MMI with the full space of sequences of length <= min(max_len, T).
// Throws OracleScaleError when (|V|+1)^T > 1e6.
LossResult MmiLossExact(const TransducerModel& model, const SequenceScorer& lm,
                        const SeqScales& scales,
                        const EmpiricalDistribution& empirical, int max_len);

// Exact MBR over the same full space.
LossResult MbrLossExact(const TransducerModel& model, const SequenceScorer& lm,
                        const SeqScales& scales,
                        const EmpiricalDistribution& empirical, int max_len,
                        const RiskFn& risk);

struct NBestHypothesis {
  LabelSequence labels;
  double log_p_rnnt = 0.0;
  double log_p_lm = 0.0;
};

struct NBestList {
  std::string utt_id;
  std::vector<NBestHypothesis> hyps;
};

// Hypothesis space used by the N-best criteria: the list plus the reference
// when it is missing.
struct NBestSpace {
  std::vector<LabelSequence> sequences;
  std::vector<double> log_p_lm;
  bool reference_appended = false;
  int reference_index = 0;
};

NBestSpace BuildNBestSpace(const NBestList& nbest, const LabelSequence& reference,
                           const SequenceScorer& lm);

// -log P_seq(reference) normalized over the N-best space. Transducer scores
// are recomputed (and differentiated); LM scores come from the list.
LossResult MmiLossNbest(const TransducerModel& model, const SequenceScorer& lm,
                        const SeqScales& scales, const NBestList& nbest,
                        const LabelSequence& reference, const Matrix& features);

// Expected risk against the reference under P_seq over the N-best space.
LossResult MbrLossNbest(const TransducerModel& model, const SequenceScorer& lm,
                        const SeqScales& scales, const NBestList& nbest,
                        const LabelSequence& reference, const Matrix& features,
                        const RiskFn& risk);

// Sentinel for "keep every state".
inline constexpr int kNoPruning = 1 << 30;

// log Z of the lattice-free denominator: a time-synchronous recursion over
// (frame, last label) states with per-arc weight p^alpha * P_bigram^beta and
// per-frame top_k pruning by forward score (ties: smaller label first).
// Requires a context-1 model and an n-gram of order <= 2.
double LfMmiLogDenominator(const TransducerModel& model, const NGramLM& lm,
                           const SeqScales& scales, const Matrix& features,
                           int top_k);

// alpha * (-log P_RNNT(ref)) - beta * log P_LM(ref) + log Z.
LossResult LfMmiLoss(const TransducerModel& model, const NGramLM& lm,
                     const SeqScales& scales, const Matrix& features,
                     const LabelSequence& reference, int top_k = 20);

// Global optimum of the transducer posterior under MMI with a fixed LM:
//   P(a) proportional to (Pr(a | X) / P_LM(a)^beta)^(1/alpha)
// over the support of Pr. Throws SingularityError if the LM gives zero
// probability to a supported sequence.
PosteriorTable MmiOptimumTarget(const SequenceDistribution& empirical,
                                const SequenceScorer& lm,
                                const SeqScales& scales);

// argmin_c sum_a Pr(a) R(a, c); ties go to the shorter, then
// lexicographically smaller candidate. Throws ContractViolation on an empty
// candidate set.
LabelSequence BayesOptimalSequence(const SequenceDistribution& empirical,
                                   const RiskFn& risk,
                                   std::span<const LabelSequence> candidates);

// A posterior parameterized directly by one free logit per sequence of a
// fixed space, P_RNNT = softmax(logits). Used to test global optima without
// the parameter coupling of a neural model.
struct TableModel {
  std::vector<LabelSequence> space;
  std::vector<double> logits;

  std::vector<double> Posterior() const;
};

enum class TableCriterion { kMmi, kMbr };

// MMI (weights = Pr(a|X)) or MBR (weights = expected risks) loss of a table
// model and the gradient with respect to its logits.
LossResult TableModelLoss(const TableModel& model,
                          std::span<const double> log_p_lm,
                          const SeqScales& scales, TableCriterion criterion,
                          std::span<const double> weights);

struct TableTrainingResult {
  TableModel model;
  int steps_run = 0;
  double final_loss = 0.0;
};

// Plain gradient descent with a fixed step size. stop(posterior, step) may
// end training early.
TableTrainingResult TrainTableModel(
    TableModel model, std::span<const double> log_p_lm,
    const SeqScales& scales, TableCriterion criterion,
    std::span<const double> weights, int max_steps, double step_size,
    const std::function<bool(const std::vector<double>&, int)>& stop = {});

double TotalVariation(std::span<const double> p, std::span<const double> q);

// N-best file: per utterance "UTT <id> <n>" then n lines
// "log_p_rnnt<TAB>log_p_lm<TAB>labels". Numbers use %.17g so they round-trip
// exactly.
void WriteNBest(std::ostream& os, std::span<const NBestList> lists);
std::vector<NBestList> ReadNBest(std::istream& is);

}  // namespace tslab

#endif  // TSLAB_SEQTRAIN_H_
