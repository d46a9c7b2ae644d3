// core/include/tslab/dataset.h

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

#ifndef TSLAB_DATASET_H_
#define TSLAB_DATASET_H_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tslab/types.h"

namespace tslab {

// Independent stream seed for a named purpose.
std::uint64_t DeriveSeed(std::uint64_t master, const std::string& purpose);

struct SyntheticDatasetConfig {
  int num_labels = 6;
  int prior_order = 3;            // n-gram order of the label prior, 1..3
  double prior_concentration = 0.3;  // Dirichlet parameter of each row
  double eos_prob = 0.25;         // P(EOS | label); EOS never follows BOS
  int max_label_len = 6;          // longer samples are redrawn
  int max_frames_per_label = 2;   // r
  int feature_dim = 4;
  double prototype_scale = 1.0;
  double noise_stddev = 0.6;
  int num_train = 1024;
  int num_dev = 256;
  int num_text = 16384;
  std::uint64_t seed = 1;

  void Validate() const;
};

// Generative n-gram label prior. One row per context of the last
// max(order - 1, 1) labels, BOS padded; row 0 is the empty history. With
// order 1 every row past the first is the same distribution.
class LabelPrior {
 public:
  LabelPrior(int num_labels, int order,
             std::vector<std::vector<double>> probs);

  static LabelPrior Random(const SyntheticDatasetConfig& config,
                           std::mt19937_64& rng);

  int NumLabels() const { return num_labels_; }
  int order() const { return order_; }
  int NumContexts() const { return static_cast<int>(probs_.size()); }
  int ContextIndex(const LabelSequence& history) const;
  // P(next | history); next = 0 is EOS.
  double Prob(const LabelSequence& history, Label next) const {
    return probs_[ContextIndex(history)][next];
  }
  double SequenceProb(const LabelSequence& seq) const;

  // Draws until the sequence has at most max_len labels.
  LabelSequence Sample(std::mt19937_64& rng, int max_len) const;

 private:
  int num_labels_;
  int order_;
  std::vector<std::vector<double>> probs_;
};

struct SyntheticCorpus {
  LabelPrior prior;
  Matrix prototypes;  // row k-1 belongs to label k
  std::vector<Utterance> train;
  std::vector<Utterance> dev;
  std::vector<LabelSequence> text;  // LM training text, sampled separately
};

// Each label emits U{1..r} frames of prototype + N(0, sigma^2) noise.
// Bit-identical for identical configs.
SyntheticCorpus GenerateDataset(const SyntheticDatasetConfig& config);

Utterance SynthesizeUtterance(const std::string& id,
                              const LabelSequence& labels,
                              const Matrix& prototypes, int max_frames,
                              double noise_stddev, std::mt19937_64& rng);

std::vector<LabelSequence> Transcripts(std::span<const Utterance> data);

// "UTT <id> T=<int> S=<int>", T lines of D floats, one transcript line.
void WriteDataset(std::ostream& os, std::span<const Utterance> data);
std::vector<Utterance> ReadDataset(std::istream& is);

}  // namespace tslab

#endif  // TSLAB_DATASET_H_
