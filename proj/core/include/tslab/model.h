// core/include/tslab/model.h

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

#ifndef TSLAB_MODEL_H_
#define TSLAB_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tslab/params.h"
#include "tslab/types.h"

namespace tslab {

enum class PredictionCell { kElman, kLstm };

// Shapes of a strictly monotonic transducer.
//
// Encoder: per frame, the 2*window+1 surrounding feature rows (zero padded at
// the edges) go through a tanh layer of size enc_hidden and an affine layer
// of size enc_dim.
// Prediction network: context_size == 1 embeds the last label (or a learned
// start-of-sequence row) and applies two tanh layers of size pred_dim;
// context_size == 0 runs one recurrent layer of size pred_dim over the whole
// history.
// Joint network: tanh layer of size joint_hidden over [h_t; context], then
// logits over {blank} + labels.
struct ModelConfig {
  int num_labels = 6;
  int input_dim = 4;
  int window = 1;
  int enc_hidden = 32;
  int enc_dim = 16;
  int context_size = 0;
  PredictionCell cell = PredictionCell::kElman;
  int embed_dim = 8;
  int pred_dim = 16;
  int joint_hidden = 16;

  bool full_context() const { return context_size == 0; }
  Vocabulary vocabulary() const { return Vocabulary{num_labels}; }
  int window_width() const { return 2 * window + 1; }

  void Validate() const;
  std::string ToText() const;
  static ModelConfig FromText(const std::string& text);

  // A tiny configuration for enumeration and finite-difference checks
  // (a few hundred parameters).
  static ModelConfig Micro(int num_labels, int context_size,
                           PredictionCell cell = PredictionCell::kElman);

  bool operator==(const ModelConfig&) const = default;
};

class TransducerModel {
 public:
  // Block indices into params().
  struct Blocks {
    int enc_w1 = -1, enc_b1 = -1, enc_w2 = -1, enc_b2 = -1;
    int embed = -1;
    // context-1: w1/b1, w2/b2. recurrent: wx, wh, b.
    int pred_w1 = -1, pred_b1 = -1, pred_w2 = -1, pred_b2 = -1;
    int pred_wx = -1, pred_wh = -1, pred_b = -1;
    int joint_w = -1, joint_b = -1, out_w = -1, out_b = -1;
  };

  // All-zero parameters.
  explicit TransducerModel(const ModelConfig& config);

  // Uniform [-scale, scale] initialization from a seeded mt19937_64.
  static TransducerModel Initialize(const ModelConfig& config,
                                    std::uint64_t seed, double scale = 0.1);

  const ModelConfig& config() const { return config_; }
  Vocabulary vocabulary() const { return config_.vocabulary(); }
  const Blocks& blocks() const { return blocks_; }
  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }

  std::size_t NumParams() const { return params_.size(); }
  std::vector<double> Flatten() const;
  void Unflatten(std::span<const double> flat);

  // T x D features -> T x enc_dim encoder outputs.
  Matrix Encode(const Matrix& features) const;

  // Prediction-network output for a label history.
  Vector PredictContext(const LabelSequence& history) const;

  Vector JointLogits(const Vector& h, const Vector& context) const;

  // Distribution over {blank} + labels; index 0 is blank.
  Vector StepPosterior(const Vector& h, const Vector& context) const;

  // True for blocks that belong to the encoder.
  static bool IsEncoderBlock(const std::string& name);

 private:
  ModelConfig config_;
  ParamSet params_;
  Blocks blocks_;
};

// Removes blanks; strictly monotonic topology so repeated labels stay.
LabelSequence Collapse(std::span<const Label> alignment);

// Encoder from the first model, prediction + joint networks from the second.
// Throws SwapError if the configurations differ.
TransducerModel SwapComponents(const TransducerModel& encoder_source,
                               const TransducerModel& predjoint_source);

}  // namespace tslab

#endif  // TSLAB_MODEL_H_
