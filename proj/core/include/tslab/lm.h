// core/include/tslab/lm.h

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

#ifndef TSLAB_LM_H_
#define TSLAB_LM_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "tslab/numerics.h"
#include "tslab/params.h"
#include "tslab/types.h"

namespace tslab {

// Anything that assigns log-probabilities to label sequences through the
// chain rule. Next-token distributions are indexed like transducer outputs:
// index 0 is EOS and index k is label k.
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;

  virtual int NumLabels() const = 0;
  virtual std::vector<double> NextLogProbs(
      const LabelSequence& history) const = 0;
  // Scorers without EOS (renormalized internal LMs) score labels only.
  virtual bool HasEos() const { return true; }
};

// sum_s log P(a_s | a_<s) + log P(EOS | a) (EOS term only if HasEos()).
// Throws VocabularyError on labels outside 1..NumLabels().
LogProb LmLogProb(const SequenceScorer& scorer, const LabelSequence& sequence);

struct Perplexity {
  double value = 0.0;
  bool infinite = false;  // some sequence scored exactly zero
};

// exp(-sum log P / sum (S_m + 1)), EOS counted as a token when the scorer
// predicts it. Throws ContractViolation on an empty corpus.
Perplexity ComputePerplexity(const SequenceScorer& scorer,
                             std::span<const LabelSequence> corpus);

class UniformScorer : public SequenceScorer {
 public:
  explicit UniformScorer(int num_labels) : num_labels_(num_labels) {}
  int NumLabels() const override { return num_labels_; }
  std::vector<double> NextLogProbs(const LabelSequence&) const override;

 private:
  int num_labels_;
};

// Additively smoothed n-gram model:
//   P(w | ctx) = (c(ctx, w) + delta) / (c(ctx) + delta * (|V| + 1))
// with ctx the last order-1 tokens, padded with BOS.
class NGramLM : public SequenceScorer {
 public:
  NGramLM(int num_labels, int order, double delta);

  // Counts one (history, next) event; history is truncated to the context.
  void AddEvent(const LabelSequence& history, Label next);
  // Counts every label of the sentence and its EOS.
  void AddSentence(const LabelSequence& sentence);

  double Prob(const LabelSequence& history, Label next) const;

  int NumLabels() const override { return num_labels_; }
  std::vector<double> NextLogProbs(
      const LabelSequence& history) const override;

  int order() const { return order_; }
  double delta() const { return delta_; }

  bool operator==(const NGramLM& other) const;

 private:
  LabelSequence ContextOf(const LabelSequence& history) const;

  int num_labels_;
  int order_;
  double delta_;
  // Per context: counts of EOS and labels, plus the total in the last slot.
  std::map<LabelSequence, std::vector<double>> counts_;
};

// Throws TrainingError on an empty corpus, ConfigError on order < 1 or
// delta <= 0.
NGramLM TrainNGram(std::span<const LabelSequence> corpus, int num_labels,
                   int order, double delta);

struct NeuralLmConfig {
  int num_labels = 6;
  int embed_dim = 8;
  int hidden_dim = 16;
};

struct NeuralLmTraining {
  int steps = 300;
  double learning_rate = 0.02;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
};

// Embedding + Elman recurrent layer + softmax over {EOS} + labels.
class NeuralLM : public SequenceScorer {
 public:
  explicit NeuralLM(const NeuralLmConfig& config);
  static NeuralLM Initialize(const NeuralLmConfig& config, std::uint64_t seed,
                             double scale);

  int NumLabels() const override { return config_.num_labels; }
  std::vector<double> NextLogProbs(
      const LabelSequence& history) const override;

  // Mean per-token negative log-likelihood (EOS included) and its gradient.
  LossResult CorpusLossAndGrad(std::span<const LabelSequence> corpus) const;

  const NeuralLmConfig& config() const { return config_; }
  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }

 private:
  NeuralLmConfig config_;
  ParamSet params_;
  int embed_ = -1, wx_ = -1, wh_ = -1, b_ = -1, out_w_ = -1, out_b_ = -1;
};

// Full-batch Adam on CorpusLossAndGrad for a fixed step budget.
NeuralLM TrainNeuralLM(std::span<const LabelSequence> corpus,
                       const NeuralLmConfig& config,
                       const NeuralLmTraining& training);

// One sequence per line, labels separated by whitespace.
std::vector<LabelSequence> ReadLmText(std::istream& is);
void WriteLmText(std::ostream& os, std::span<const LabelSequence> corpus);

}  // namespace tslab

#endif  // TSLAB_LM_H_
