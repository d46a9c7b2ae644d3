// core/include/tslab/experiment_config.h

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

#ifndef TSLAB_EXPERIMENT_CONFIG_H_
#define TSLAB_EXPERIMENT_CONFIG_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tslab/dataset.h"
#include "tslab/decoder.h"
#include "tslab/lm.h"
#include "tslab/model.h"
#include "tslab/seqtrain.h"

namespace tslab {

enum class FinetuneCriterion { kMmiNbest, kMbrNbest, kLfMmi, kMmiExact, kMbrExact };

std::string FinetuneCriterionName(FinetuneCriterion c);
FinetuneCriterion ParseFinetuneCriterion(const std::string& name);

enum class TrainingLm { kNeural, kBigram };

// Every knob of an experiment. Configuration files are flat "key = value"
// lines with '#' comments; each key also exists as a command-line flag.
struct ExperimentConfig {
  std::uint64_t seed = 1;

  // data
  int num_labels = 6;
  int prior_order = 3;
  double prior_concentration = 0.3;
  double eos_prob = 0.25;
  int max_label_len = 6;
  int max_frames_per_label = 2;
  int feature_dim = 4;
  double prototype_scale = 1.0;
  double noise_stddev = 0.6;
  int num_train = 1024;
  int num_dev = 256;
  int num_text = 16384;

  // transducer
  int context_size = 0;
  std::string cell = "elman";
  int window = 1;
  int enc_hidden = 32;
  int enc_dim = 16;
  int embed_dim = 8;
  int pred_dim = 16;
  int joint_hidden = 16;
  double init_scale = 0.1;

  // cross-entropy phase (minibatch Adam)
  int ce_epochs = 100;
  int ce_batch_size = 16;
  double ce_learning_rate = 0.01;

  // external LM
  int lm_embed_dim = 8;
  int lm_hidden_dim = 16;
  int lm_steps = 300;
  double lm_learning_rate = 0.02;

  // sequence training (minibatch SGD, fixed step size)
  std::string finetune_criterion = "mmi_nbest";
  std::string mmi_criterion = "mmi_nbest";
  std::string mbr_criterion = "mbr_nbest";
  std::string training_lm = "neural";
  int finetune_steps = 200;
  int finetune_batch_size = 16;
  double finetune_step_size = 0.05;
  double alpha = 1.0;
  double beta = 0.3;
  int nbest_size = 4;
  int nbest_beam = 8;
  double nbest_lambda = 0.3;
  int lf_mmi_top_k = 20;
  int exact_max_len = 6;
  bool table_model = false;
  int table_steps = 10000;
  double table_step_size = 1.0;

  // decoding sweep
  int beam_size = 4;
  std::string fusion_modes = "none,sf,sf_ilm,sf_dr,sf_reduce_blank";
  std::string lambda_grid = "0,0.1,0.2,0.3,0.4,0.5,0.6";
  std::string blank_reduction = "linear";
  std::string blank_reduction_grid = "0.2,0.4,0.6,0.8,1";

  // density-ratio ILM
  int dr_order = 2;
  double dr_delta = 0.1;

  struct Key {
    std::string name;
    std::string help;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
  };
  static const std::vector<Key>& Keys();

  // ConfigError on an unknown key or unparsable value.
  void Set(const std::string& key, const std::string& value);
  std::string Get(const std::string& key) const;

  // Applies "key = value" lines; ConfigError names the line.
  void Apply(const std::string& text);
  static ExperimentConfig FromText(const std::string& text);
  static ExperimentConfig LoadFile(const std::string& path);

  // Canonical text of every key, in registration order.
  std::string ToText() const;
  unsigned long long Hash() const;

  void Validate() const;

  SyntheticDatasetConfig DatasetConfig() const;
  ModelConfig TransducerConfig() const;
  NeuralLmConfig LmConfig() const;
  NeuralLmTraining LmTraining() const;
  SeqScales Scales() const;
  TrainingLm TrainingLmKind() const;
  std::vector<FusionMode> FusionModes() const;
  std::vector<double> LambdaGrid() const;
  std::vector<BlankReduction> BlankReductionGrid() const;
};

// Comma-separated list helpers.
std::vector<std::string> SplitList(const std::string& text);
std::vector<double> ParseDoubleList(const std::string& text);

}  // namespace tslab

#endif  // TSLAB_EXPERIMENT_CONFIG_H_
