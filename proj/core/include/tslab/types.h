// core/include/tslab/types.h

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

#ifndef TSLAB_TYPES_H_
#define TSLAB_TYPES_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tslab {

// Labels are 1..num_labels. Id 0 is reserved: it is blank in transducer
// outputs, end-of-sentence in LM outputs and start-of-sentence in histories.
using Label = std::int32_t;
using LabelSequence = std::vector<Label>;

inline constexpr Label kBlank = 0;
inline constexpr Label kEos = 0;
inline constexpr Label kBos = 0;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;

struct Vocabulary {
  int num_labels = 0;

  bool Contains(Label label) const {
    return label >= 1 && label <= num_labels;
  }
  // Joint network / LM output dimension: labels plus blank (or EOS).
  int OutputDim() const { return num_labels + 1; }
};

// One acoustic utterance: T x D features and its transcript.
struct Utterance {
  std::string id;
  Matrix features;
  LabelSequence labels;

  int NumFrames() const { return static_cast<int>(features.rows()); }
};

// Loss value and its gradient over a flat parameter vector.
struct LossResult {
  double loss = 0.0;
  std::vector<double> gradient;
};

// Throws VocabularyError naming the offending label.
void CheckLabels(const Vocabulary& vocab, const LabelSequence& labels);

std::string FormatLabels(const LabelSequence& labels);

}  // namespace tslab

#endif  // TSLAB_TYPES_H_
