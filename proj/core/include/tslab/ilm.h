// core/include/tslab/ilm.h

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

#ifndef TSLAB_ILM_H_
#define TSLAB_ILM_H_

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tslab/lattice.h"
#include "tslab/lm.h"
#include "tslab/model.h"

namespace tslab {

enum class IlmKind {
  kZeroEncoderRenorm,
  kZeroEncoderRaw,
  kDensityRatio,
  kMiniNet,
  kExact,
};

std::string IlmKindName(IlmKind kind);

struct IlmEstimate {
  IlmKind kind = IlmKind::kZeroEncoderRenorm;
  std::shared_ptr<const SequenceScorer> scorer;
};

// Chain-rule label prior read off the prediction + joint networks with a
// fixed vector in place of the encoder output. With renormalize the blank
// mass is removed and the labels rescaled to sum to one; without it the raw
// label probabilities are used. Neither variant predicts EOS.
class EncoderVectorIlm : public SequenceScorer {
 public:
  EncoderVectorIlm(TransducerModel model, Vector encoder_vector,
                   bool renormalize);

  int NumLabels() const override { return model_.config().num_labels; }
  std::vector<double> NextLogProbs(
      const LabelSequence& history) const override;
  bool HasEos() const override { return false; }

  const Vector& encoder_vector() const { return encoder_vector_; }

 private:
  TransducerModel model_;
  Vector encoder_vector_;
  bool renormalize_;
};

// A distribution given as an explicit table over sequences, exposed through
// prefix-mass conditionals (so LmLogProb reproduces the table entries).
class TableScorer : public SequenceScorer {
 public:
  TableScorer(int num_labels, PosteriorTable table);

  int NumLabels() const override { return num_labels_; }
  std::vector<double> NextLogProbs(
      const LabelSequence& history) const override;

  const PosteriorTable& table() const { return table_; }
  double Total() const;

 private:
  int num_labels_;
  PosteriorTable table_;
  std::map<LabelSequence, double> prefix_mass_;
};

IlmEstimate ZeroEncoderIlm(const TransducerModel& model, bool renormalize);

struct DensityRatioConfig {
  int order = 2;
  double delta = 0.1;
};

// A standalone n-gram LM trained on the acoustic training transcripts only.
IlmEstimate DensityRatioIlm(std::span<const LabelSequence> transcripts,
                            int num_labels, const DensityRatioConfig& config);

struct MiniNetConfig {
  int steps = 200;
  double step_size = 0.1;
};

struct MiniNetResult {
  IlmEstimate estimate;
  Vector encoder_vector;
  std::vector<double> loss_trace;  // loss before each step, then final
};

// Label cross-entropy (blank renormalized away) of the frozen prediction +
// joint networks with encoder vector v, averaged over transcript tokens, and
// its gradient with respect to v.
std::pair<double, Vector> MiniNetLossAndGrad(
    const TransducerModel& model, const Vector& encoder_vector,
    std::span<const LabelSequence> transcripts);

// Learns one replacement encoder vector by gradient descent from v = 0.
// Throws TrainingError if the loss becomes non-finite.
MiniNetResult MiniNetIlm(const TransducerModel& model,
                         std::span<const LabelSequence> transcripts,
                         const MiniNetConfig& config);

struct WeightedFeatures {
  Matrix features;
  double weight = 0.0;
};

// P_ILM(a) = sum_m w_m P(a | X_m), by enumeration. Weights must be
// non-negative and sum to one. Throws OracleScaleError when an utterance is
// too long to enumerate.
IlmEstimate ExactIlm(const TransducerModel& model,
                     std::span<const WeightedFeatures> dataset, int max_len);

// "label label ...<TAB>log-probability" lines, sorted lexicographically by
// label sequence.
void WriteIlmTable(std::ostream& os, const TableScorer& table);

}  // namespace tslab

#endif  // TSLAB_ILM_H_
