// core/src/experiment_config.cc

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

#include "tslab/experiment_config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tslab/error.h"
#include "tslab/numerics.h"

namespace tslab {

namespace {

std::string Trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string Format(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename T>
T ParseValue(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("bad value '" + text + "' for " + key);
  return v;
}

template <typename T>
using Member = T ExperimentConfig::*;

template <typename T>
ExperimentConfig::Key Field(const char* name, const char* help, Member<T> m) {
  ExperimentConfig::Key k;
  k.name = name;
  k.help = help;
  k.set = [m, key = std::string(name)](ExperimentConfig& c,
                                       const std::string& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      c.*m = v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1") {
        c.*m = true;
      } else if (v == "false" || v == "0") {
        c.*m = false;
      } else {
        throw ConfigError("bad value '" + v + "' for " + key);
      }
    } else {
      c.*m = ParseValue<T>(key, v);
    }
  };
  k.get = [m](const ExperimentConfig& c) -> std::string {
    if constexpr (std::is_same_v<T, std::string>) {
      return c.*m;
    } else if constexpr (std::is_same_v<T, bool>) {
      return c.*m ? "true" : "false";
    } else if constexpr (std::is_floating_point_v<T>) {
      return Format(c.*m);
    } else {
      return std::to_string(c.*m);
    }
  };
  return k;
}

}  // namespace

std::string FinetuneCriterionName(FinetuneCriterion c) {
  switch (c) {
    case FinetuneCriterion::kMmiNbest: return "mmi_nbest";
    case FinetuneCriterion::kMbrNbest: return "mbr_nbest";
    case FinetuneCriterion::kLfMmi: return "lf_mmi";
    case FinetuneCriterion::kMmiExact: return "mmi_exact";
    case FinetuneCriterion::kMbrExact: return "mbr_exact";
  }
  return "unknown";
}

FinetuneCriterion ParseFinetuneCriterion(const std::string& name) {
  for (auto c : {FinetuneCriterion::kMmiNbest, FinetuneCriterion::kMbrNbest,
                 FinetuneCriterion::kLfMmi, FinetuneCriterion::kMmiExact,
                 FinetuneCriterion::kMbrExact})
    if (FinetuneCriterionName(c) == name) return c;
  throw ConfigError("unknown fine-tune criterion '" + name + "'");
}

const std::vector<ExperimentConfig::Key>& ExperimentConfig::Keys() {
  using C = ExperimentConfig;
  static const std::vector<Key> keys = {
      Field("seed", "master seed", &C::seed),
      Field("num_labels", "vocabulary size", &C::num_labels),
      Field("prior_order", "label prior order (1 to 3)", &C::prior_order),
      Field("prior_concentration", "Dirichlet parameter of the prior",
            &C::prior_concentration),
      Field("eos_prob", "P(EOS | label) of the prior", &C::eos_prob),
      Field("max_label_len", "maximum transcript length", &C::max_label_len),
      Field("max_frames_per_label", "frames per label drawn from 1..r",
            &C::max_frames_per_label),
      Field("feature_dim", "feature dimension", &C::feature_dim),
      Field("prototype_scale", "std of label prototypes", &C::prototype_scale),
      Field("noise_stddev", "feature noise std", &C::noise_stddev),
      Field("num_train", "training utterances", &C::num_train),
      Field("num_dev", "dev utterances", &C::num_dev),
      Field("num_text", "LM text sentences", &C::num_text),
      Field("context_size", "0 = full context, 1 = context-1",
            &C::context_size),
      Field("cell", "recurrent cell: elman or lstm", &C::cell),
      Field("window", "encoder half window", &C::window),
      Field("enc_hidden", "encoder hidden size", &C::enc_hidden),
      Field("enc_dim", "encoder output size", &C::enc_dim),
      Field("embed_dim", "label embedding size", &C::embed_dim),
      Field("pred_dim", "prediction network size", &C::pred_dim),
      Field("joint_hidden", "joint hidden size", &C::joint_hidden),
      Field("init_scale", "uniform init half width", &C::init_scale),
      Field("ce_epochs", "CE epochs", &C::ce_epochs),
      Field("ce_batch_size", "CE minibatch size", &C::ce_batch_size),
      Field("ce_learning_rate", "CE Adam learning rate", &C::ce_learning_rate),
      Field("lm_embed_dim", "LM embedding size", &C::lm_embed_dim),
      Field("lm_hidden_dim", "LM hidden size", &C::lm_hidden_dim),
      Field("lm_steps", "LM full-batch steps", &C::lm_steps),
      Field("lm_learning_rate", "LM Adam learning rate", &C::lm_learning_rate),
      Field("finetune_criterion", "criterion of train-seq",
            &C::finetune_criterion),
      Field("mmi_criterion", "criterion of the MMI column", &C::mmi_criterion),
      Field("mbr_criterion", "criterion of the MBR column", &C::mbr_criterion),
      Field("training_lm", "LM of sequence training: neural or bigram",
            &C::training_lm),
      Field("finetune_steps", "fine-tune updates", &C::finetune_steps),
      Field("finetune_batch_size", "fine-tune minibatch size",
            &C::finetune_batch_size),
      Field("finetune_step_size", "fine-tune SGD step size",
            &C::finetune_step_size),
      Field("alpha", "transducer scale of P_seq", &C::alpha),
      Field("beta", "LM scale of P_seq", &C::beta),
      Field("nbest_size", "hypotheses per utterance", &C::nbest_size),
      Field("nbest_beam", "beam of N-best generation", &C::nbest_beam),
      Field("nbest_lambda", "LM scale of N-best generation", &C::nbest_lambda),
      Field("lf_mmi_top_k", "states kept per frame in LF-MMI",
            &C::lf_mmi_top_k),
      Field("exact_max_len", "length limit of exact criteria",
            &C::exact_max_len),
      Field("table_model", "exact MMI on a free table model", &C::table_model),
      Field("table_steps", "table model step budget", &C::table_steps),
      Field("table_step_size", "table model step size", &C::table_step_size),
      Field("beam_size", "decoding beam", &C::beam_size),
      Field("fusion_modes", "decoded fusion modes", &C::fusion_modes),
      Field("lambda_grid", "grid of lambda1 and lambda2", &C::lambda_grid),
      Field("blank_reduction", "linear or exponential", &C::blank_reduction),
      Field("blank_reduction_grid", "rho or gamma values",
            &C::blank_reduction_grid),
      Field("dr_order", "density-ratio LM order", &C::dr_order),
      Field("dr_delta", "density-ratio LM smoothing", &C::dr_delta),
  };
  return keys;
}

void ExperimentConfig::Set(const std::string& key, const std::string& value) {
  for (const auto& k : Keys()) {
    if (k.name == key) {
      k.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string ExperimentConfig::Get(const std::string& key) const {
  for (const auto& k : Keys())
    if (k.name == key) return k.get(*this);
  throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::Apply(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    try {
      Set(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
}

ExperimentConfig ExperimentConfig::FromText(const std::string& text) {
  ExperimentConfig c;
  c.Apply(text);
  return c;
}

ExperimentConfig ExperimentConfig::LoadFile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return FromText(ss.str());
}

std::string ExperimentConfig::ToText() const {
  std::string out;
  for (const auto& k : Keys()) out += k.name + " = " + k.get(*this) + "\n";
  return out;
}

unsigned long long ExperimentConfig::Hash() const {
  std::string text = ToText();
  return Fnv1a64(text);
}

void ExperimentConfig::Validate() const {
  DatasetConfig().Validate();
  TransducerConfig().Validate();
  if (TransducerConfig().num_labels != num_labels)
    throw ConfigError("model and data vocabularies differ");
  if (ce_epochs < 0 || ce_batch_size < 1 || !(ce_learning_rate > 0.0))
    throw ConfigError("bad CE schedule");
  if (lm_steps < 0 || lm_embed_dim < 1 || lm_hidden_dim < 1)
    throw ConfigError("bad LM settings");
  ParseFinetuneCriterion(finetune_criterion);
  ParseFinetuneCriterion(mmi_criterion);
  ParseFinetuneCriterion(mbr_criterion);
  TrainingLmKind();
  if (finetune_steps < 0 || finetune_batch_size < 1 ||
      !(finetune_step_size > 0.0))
    throw ConfigError("bad fine-tune schedule");
  Scales().Validate();
  if (nbest_size < 1 || nbest_beam < nbest_size)
    throw ConfigError("need 1 <= nbest_size <= nbest_beam");
  if (lf_mmi_top_k < 1) throw ConfigError("lf_mmi_top_k must be >= 1");
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  FusionModes();
  for (double l : LambdaGrid())
    if (!(l >= 0.0)) throw ConfigError("lambda grid values must be >= 0");
  for (const auto& r : BlankReductionGrid()) r.Validate();
  if (dr_order < 1 || !(dr_delta > 0.0)) throw ConfigError("bad DR LM");
}

SyntheticDatasetConfig ExperimentConfig::DatasetConfig() const {
  SyntheticDatasetConfig d;
  d.num_labels = num_labels;
  d.prior_order = prior_order;
  d.prior_concentration = prior_concentration;
  d.eos_prob = eos_prob;
  d.max_label_len = max_label_len;
  d.max_frames_per_label = max_frames_per_label;
  d.feature_dim = feature_dim;
  d.prototype_scale = prototype_scale;
  d.noise_stddev = noise_stddev;
  d.num_train = num_train;
  d.num_dev = num_dev;
  d.num_text = num_text;
  d.seed = DeriveSeed(seed, "data");
  return d;
}

ModelConfig ExperimentConfig::TransducerConfig() const {
  ModelConfig m;
  m.num_labels = num_labels;
  m.input_dim = feature_dim;
  m.window = window;
  m.enc_hidden = enc_hidden;
  m.enc_dim = enc_dim;
  m.context_size = context_size;
  if (cell == "elman") {
    m.cell = PredictionCell::kElman;
  } else if (cell == "lstm") {
    m.cell = PredictionCell::kLstm;
  } else {
    throw ConfigError("unknown cell '" + cell + "'");
  }
  m.embed_dim = embed_dim;
  m.pred_dim = pred_dim;
  m.joint_hidden = joint_hidden;
  return m;
}

NeuralLmConfig ExperimentConfig::LmConfig() const {
  return NeuralLmConfig{num_labels, lm_embed_dim, lm_hidden_dim};
}

NeuralLmTraining ExperimentConfig::LmTraining() const {
  NeuralLmTraining t;
  t.steps = lm_steps;
  t.learning_rate = lm_learning_rate;
  t.seed = DeriveSeed(seed, "lm-init");
  t.init_scale = init_scale;
  return t;
}

SeqScales ExperimentConfig::Scales() const { return SeqScales{alpha, beta}; }

TrainingLm ExperimentConfig::TrainingLmKind() const {
  if (training_lm == "neural") return TrainingLm::kNeural;
  if (training_lm == "bigram") return TrainingLm::kBigram;
  throw ConfigError("training_lm must be neural or bigram");
}

std::vector<FusionMode> ExperimentConfig::FusionModes() const {
  std::vector<FusionMode> out;
  for (const auto& name : SplitList(fusion_modes))
    out.push_back(ParseFusionMode(name));
  return out;
}

std::vector<double> ExperimentConfig::LambdaGrid() const {
  auto grid = ParseDoubleList(lambda_grid);
  if (grid.empty()) throw ConfigError("empty lambda grid");
  return grid;
}

std::vector<BlankReduction> ExperimentConfig::BlankReductionGrid() const {
  std::vector<BlankReduction> out;
  for (double v : ParseDoubleList(blank_reduction_grid)) {
    if (blank_reduction == "linear") {
      out.push_back(BlankReduction::Linear(v));
    } else if (blank_reduction == "exponential") {
      out.push_back(BlankReduction::Exponential(v));
    } else {
      throw ConfigError("blank_reduction must be linear or exponential");
    }
  }
  if (out.empty()) throw ConfigError("empty blank reduction grid");
  return out;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> ParseDoubleList(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : SplitList(text))
    out.push_back(ParseValue<double>("list", item));
  return out;
}

}  // namespace tslab
