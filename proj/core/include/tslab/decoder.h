// core/include/tslab/decoder.h

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

#ifndef TSLAB_DECODER_H_
#define TSLAB_DECODER_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tslab/ilm.h"
#include "tslab/lm.h"
#include "tslab/model.h"
#include "tslab/transducer_graph.h"

namespace tslab {

enum class FusionMode { kNone, kSf, kSfIlm, kSfDr, kSfReduceBlank };

std::string FusionModeName(FusionMode mode);
FusionMode ParseFusionMode(const std::string& name);

struct BlankReduction {
  enum class Kind { kOff, kLinear, kExponential };
  Kind kind = Kind::kOff;
  double value = 1.0;  // rho for linear, gamma for exponential

  static BlankReduction Off() { return {}; }
  static BlankReduction Linear(double rho) { return {Kind::kLinear, rho}; }
  static BlankReduction Exponential(double gamma) {
    return {Kind::kExponential, gamma};
  }
  void Validate() const;
};

// Scales the blank probability by rho (linear) or raises it to gamma
// (exponential), then renormalizes over {blank} + labels. Throws ConfigError
// for rho outside [0, 1] or gamma < 1, ContractViolation if the input does
// not sum to one within 1e-9.
std::vector<double> ReduceBlank(std::span<const double> step_dist,
                                const BlankReduction& reduction);

struct BeamConfig {
  int beam_size = 8;
  FusionMode fusion = FusionMode::kNone;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  BlankReduction blank_reduction;
  int n_best_out = 1;

  void Validate() const;
};

// A search hypothesis. combined = transducer + lambda1 * elm - lambda2 * ilm;
// after finalization elm includes the EOS term.
struct Hypothesis {
  LabelSequence labels;
  double transducer = 0.0;
  double elm = 0.0;
  double ilm = 0.0;
  double combined = 0.0;
  int pred_node = 0;
};

// Time-synchronous search over the strictly monotonic topology. Every frame
// extends each hypothesis by blank and by every label, recombines equal label
// sequences (log-sum of transducer scores) and keeps beam_size hypotheses by
// combined score; ties go to the shorter, then lexicographically smaller,
// sequence. The ILM is subtracted per emitted label and has no EOS term.
// Throws EmptyInputError for T = 0 and ConfigError if a scorer required by
// the fusion mode is missing.
std::vector<Hypothesis> BeamSearch(const TransducerModel& model,
                                   const Matrix& features,
                                   const SequenceScorer* elm,
                                   const IlmEstimate* ilm,
                                   const BeamConfig& config);

// Same search on an existing graph, so repeated searches over one utterance
// share cached network evaluations.
std::vector<Hypothesis> BeamSearch(TransducerGraph& graph,
                                   const SequenceScorer* elm,
                                   const IlmEstimate* ilm,
                                   const BeamConfig& config);

// Levenshtein distance with unit costs.
int EditDistance(const LabelSequence& a, const LabelSequence& b);

// 100 * total edits / total reference length. Throws UndefinedMetricError
// when the references are all empty, ContractViolation on length mismatch.
double WordErrorRate(std::span<const LabelSequence> references,
                     std::span<const LabelSequence> hypotheses);

}  // namespace tslab

#endif  // TSLAB_DECODER_H_
