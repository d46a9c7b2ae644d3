// core/include/tslab/lattice.h

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

#ifndef TSLAB_LATTICE_H_
#define TSLAB_LATTICE_H_

#include <map>
#include <span>
#include <vector>

#include "tslab/model.h"
#include "tslab/numerics.h"
#include "tslab/transducer_graph.h"

namespace tslab {

// Strictly monotonic alignment grid for one target over T frames. Node (t, s)
// means t frames consumed and s labels emitted; every frame emits either
// blank ((t, s) -> (t+1, s)) or the next label ((t, s) -> (t+1, s+1)).
class Lattice {
 public:
  Lattice(TransducerGraph& graph, const LabelSequence& target);

  int NumFrames() const { return num_frames_; }
  int TargetLength() const { return target_length_; }

  // S > T: no path exists. LogLikelihood() is then kLogZero.
  bool Unreachable() const { return unreachable_; }
  LogProb LogLikelihood() const { return log_likelihood_; }

  LogProb Alpha(int t, int s) const { return alpha_[Index(t, s)]; }
  LogProb Beta(int t, int s) const { return beta_[Index(t, s)]; }
  LogProb BlankArc(int t, int s) const { return blank_arc_[Index(t, s)]; }
  LogProb LabelArc(int t, int s) const { return label_arc_[Index(t, s)]; }
  int NodeAt(int s) const { return nodes_[s]; }

  // log sum_s exp(alpha(t, s) + beta(t, s)); equals LogLikelihood() for
  // every t.
  LogProb CutLogSum(int t) const;

  // Adds scale * d LogLikelihood() / d log p(arc) for every arc.
  void AccumulateGradient(TransducerGraph& graph, double scale) const;

  // Posterior-weighted per-frame blank probability averaged over frames.
  double ExpectedBlankProbability() const;

 private:
  int Index(int t, int s) const { return t * (target_length_ + 1) + s; }

  int num_frames_;
  int target_length_;
  bool unreachable_ = false;
  LogProb log_likelihood_ = kLogZero;
  LabelSequence target_;
  std::vector<int> nodes_;
  std::vector<double> alpha_, beta_, blank_arc_, label_arc_;
  std::vector<double> blank_log_prob_;
};

// log P(target | features) by forward-backward. Returns kLogZero when
// S > T (see Lattice::Unreachable for the flag).
LogProb SeqLogProb(const TransducerModel& model, const Matrix& features,
                   const LabelSequence& target);

// Same quantity by enumerating every alignment. Throws OracleScaleError if
// C(T, S) * T > 1e6.
LogProb BruteForceSeqLogProb(const TransducerModel& model,
                             const Matrix& features,
                             const LabelSequence& target);

using PosteriorTable = std::map<LabelSequence, double>;

// Probabilities of every label sequence of length 0..min(max_len, T),
// accumulated by enumerating all (|V|+1)^T alignments. Throws
// OracleScaleError if (|V|+1)^T > 1e6.
PosteriorTable ComputePosteriorTable(const TransducerModel& model,
                                     const Matrix& features, int max_len);

// All label sequences of length 0..max_len, shortest first, then
// lexicographic.
std::vector<LabelSequence> AllLabelSequences(int num_labels, int max_len);

// -(1/M) sum_m log P(labels_m | features_m) and its gradient. Throws
// TrainingDataError naming the utterance if any target has S > T.
LossResult CeLossAndGrad(const TransducerModel& model,
                         std::span<const Utterance> batch);

// Mean over utterances of Lattice::ExpectedBlankProbability on references.
double MeanBlankProbability(const TransducerModel& model,
                            std::span<const Utterance> data);

}  // namespace tslab

#endif  // TSLAB_LATTICE_H_
