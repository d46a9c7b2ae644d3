// core/src/lm.cc

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

#include "tslab/lm.h"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "tslab/error.h"
#include "tslab/optim.h"

namespace tslab {

LogProb LmLogProb(const SequenceScorer& scorer, const LabelSequence& sequence) {
  CheckLabels(Vocabulary{scorer.NumLabels()}, sequence);
  double total = 0.0;
  LabelSequence history;
  history.reserve(sequence.size());
  for (Label l : sequence) {
    total += scorer.NextLogProbs(history)[l];
    history.push_back(l);
  }
  if (scorer.HasEos()) total += scorer.NextLogProbs(history)[kEos];
  return total;
}

Perplexity ComputePerplexity(const SequenceScorer& scorer,
                             std::span<const LabelSequence> corpus) {
  if (corpus.empty())
    throw ContractViolation("ComputePerplexity: empty corpus");
  double log_sum = 0.0;
  double tokens = 0.0;
  for (const LabelSequence& seq : corpus) {
    log_sum += LmLogProb(scorer, seq);
    tokens += static_cast<double>(seq.size()) + (scorer.HasEos() ? 1.0 : 0.0);
  }
  Perplexity ppl;
  if (log_sum == kLogZero) {
    ppl.infinite = true;
    ppl.value = std::numeric_limits<double>::infinity();
    return ppl;
  }
  if (tokens == 0.0)
    throw ContractViolation("ComputePerplexity: corpus has no tokens");
  ppl.value = std::exp(-log_sum / tokens);
  return ppl;
}

std::vector<double> UniformScorer::NextLogProbs(const LabelSequence&) const {
  return std::vector<double>(num_labels_ + 1, -std::log(num_labels_ + 1.0));
}

NGramLM::NGramLM(int num_labels, int order, double delta)
    : num_labels_(num_labels), order_(order), delta_(delta) {
  if (num_labels < 1) throw ConfigError("NGramLM: num_labels must be >= 1");
  if (order < 1) throw ConfigError("NGramLM: order must be >= 1");
  if (!(delta > 0.0)) throw ConfigError("NGramLM: delta must be > 0");
}

LabelSequence NGramLM::ContextOf(const LabelSequence& history) const {
  LabelSequence ctx(order_ - 1, kBos);
  const int n = static_cast<int>(history.size());
  for (int i = 0; i < order_ - 1; ++i) {
    int src = n - (order_ - 1) + i;
    if (src >= 0) ctx[i] = history[src];
  }
  return ctx;
}

void NGramLM::AddEvent(const LabelSequence& history, Label next) {
  if (next != kEos && (next < 1 || next > num_labels_))
    throw VocabularyError("NGramLM: label " + std::to_string(next) +
                          " outside the vocabulary");
  auto& row = counts_[ContextOf(history)];
  if (row.empty()) row.assign(num_labels_ + 2, 0.0);
  row[next] += 1.0;
  row[num_labels_ + 1] += 1.0;
}

void NGramLM::AddSentence(const LabelSequence& sentence) {
  CheckLabels(Vocabulary{num_labels_}, sentence);
  LabelSequence history;
  for (Label l : sentence) {
    AddEvent(history, l);
    history.push_back(l);
  }
  AddEvent(history, kEos);
}

double NGramLM::Prob(const LabelSequence& history, Label next) const {
  const double smooth = delta_ * (num_labels_ + 1);
  auto it = counts_.find(ContextOf(history));
  if (it == counts_.end()) return delta_ / smooth;
  return (it->second[next] + delta_) / (it->second[num_labels_ + 1] + smooth);
}

std::vector<double> NGramLM::NextLogProbs(const LabelSequence& history) const {
  std::vector<double> out(num_labels_ + 1);
  for (Label k = 0; k <= num_labels_; ++k) out[k] = std::log(Prob(history, k));
  return out;
}

bool NGramLM::operator==(const NGramLM& other) const {
  return num_labels_ == other.num_labels_ && order_ == other.order_ &&
         delta_ == other.delta_ && counts_ == other.counts_;
}

NGramLM TrainNGram(std::span<const LabelSequence> corpus, int num_labels,
                   int order, double delta) {
  if (corpus.empty()) throw TrainingError("TrainNGram: empty corpus");
  NGramLM lm(num_labels, order, delta);
  for (const LabelSequence& s : corpus) lm.AddSentence(s);
  return lm;
}

NeuralLM::NeuralLM(const NeuralLmConfig& config) : config_(config) {
  if (config.num_labels < 1 || config.embed_dim < 1 || config.hidden_dim < 1)
    throw ConfigError("NeuralLM: dimensions must be >= 1");
  const int out = config.num_labels + 1;
  embed_ = params_.AddBlock("lm.embed", out, config.embed_dim);
  wx_ = params_.AddBlock("lm.wx", config.hidden_dim, config.embed_dim);
  wh_ = params_.AddBlock("lm.wh", config.hidden_dim, config.hidden_dim);
  b_ = params_.AddBlock("lm.b", config.hidden_dim, 1);
  out_w_ = params_.AddBlock("lm.out_w", out, config.hidden_dim);
  out_b_ = params_.AddBlock("lm.out_b", out, 1);
}

NeuralLM NeuralLM::Initialize(const NeuralLmConfig& config, std::uint64_t seed,
                              double scale) {
  NeuralLM lm(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& v : lm.params_.values()) v = dist(rng);
  return lm;
}

std::vector<double> NeuralLM::NextLogProbs(const LabelSequence& history) const {
  CheckLabels(Vocabulary{config_.num_labels}, history);
  const auto embed = params_.Mat(embed_);
  const auto wx = params_.Mat(wx_);
  const auto wh = params_.Mat(wh_);
  const auto b = params_.Vec(b_);
  Vector s = Vector::Zero(config_.hidden_dim);
  s = (wx * embed.row(kBos).transpose() + wh * s + b).array().tanh().matrix();
  for (Label l : history)
    s = (wx * embed.row(l).transpose() + wh * s + b).array().tanh().matrix();
  Vector logits = params_.Mat(out_w_) * s + params_.Vec(out_b_);
  return LogSoftmax({logits.data(), static_cast<std::size_t>(logits.size())});
}

LossResult NeuralLM::CorpusLossAndGrad(
    std::span<const LabelSequence> corpus) const {
  LossResult result;
  result.gradient.assign(params_.size(), 0.0);
  double tokens = 0.0;
  for (const LabelSequence& s : corpus) tokens += s.size() + 1.0;
  if (tokens == 0.0) return result;
  const double w = 1.0 / tokens;

  const auto embed = params_.Mat(embed_);
  const auto wx = params_.Mat(wx_);
  const auto wh = params_.Mat(wh_);
  const auto b = params_.Vec(b_);
  const auto out_w = params_.Mat(out_w_);
  const auto out_b = params_.Vec(out_b_);
  std::span<double> g = result.gradient;
  auto g_embed = params_.View(g, embed_);
  auto g_wx = params_.View(g, wx_);
  auto g_wh = params_.View(g, wh_);
  auto g_b = params_.VecView(g, b_);
  auto g_out_w = params_.View(g, out_w_);
  auto g_out_b = params_.VecView(g, out_b_);

  const int H = config_.hidden_dim;
  for (const LabelSequence& sentence : corpus) {
    const int S = static_cast<int>(sentence.size());
    std::vector<Label> inputs{kBos};
    inputs.insert(inputs.end(), sentence.begin(), sentence.end());
    std::vector<Vector> states;
    std::vector<Vector> d_logits;
    Vector s = Vector::Zero(H);
    for (int j = 0; j <= S; ++j) {
      s = (wx * embed.row(inputs[j]).transpose() + wh * s + b)
              .array().tanh().matrix();
      states.push_back(s);
      Vector logits = out_w * s + out_b;
      std::vector<double> lp = LogSoftmax(
          {logits.data(), static_cast<std::size_t>(logits.size())});
      const Label target = j < S ? sentence[j] : kEos;
      result.loss -= w * lp[target];
      Vector d(lp.size());
      for (std::size_t k = 0; k < lp.size(); ++k) d[k] = w * std::exp(lp[k]);
      d[target] -= w;
      d_logits.push_back(std::move(d));
    }
    Vector d_next = Vector::Zero(H);
    for (int j = S; j >= 0; --j) {
      g_out_w.noalias() += d_logits[j] * states[j].transpose();
      g_out_b += d_logits[j];
      Vector d_s = out_w.transpose() * d_logits[j] + d_next;
      Vector d_pre = d_s.cwiseProduct(
          (1.0 - states[j].array().square()).matrix());
      Vector prev = j > 0 ? states[j - 1] : Vector::Zero(H);
      g_wx.noalias() += d_pre * embed.row(inputs[j]);
      g_wh.noalias() += d_pre * prev.transpose();
      g_b += d_pre;
      g_embed.row(inputs[j]) += (wx.transpose() * d_pre).transpose();
      d_next = wh.transpose() * d_pre;
    }
  }
  return result;
}

NeuralLM TrainNeuralLM(std::span<const LabelSequence> corpus,
                       const NeuralLmConfig& config,
                       const NeuralLmTraining& training) {
  if (corpus.empty()) throw TrainingError("TrainNeuralLM: empty corpus");
  NeuralLM lm = NeuralLM::Initialize(config, training.seed, training.init_scale);
  Adam adam(lm.params().size(), training.learning_rate);
  for (int step = 0; step < training.steps; ++step) {
    LossResult r = lm.CorpusLossAndGrad(corpus);
    if (!std::isfinite(r.loss))
      throw TrainingError("TrainNeuralLM: loss diverged at step " +
                          std::to_string(step));
    adam.Step(lm.params().values(), r.gradient);
  }
  return lm;
}

std::vector<LabelSequence> ReadLmText(std::istream& is) {
  std::vector<LabelSequence> corpus;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    LabelSequence seq;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        long v = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        seq.push_back(static_cast<Label>(v));
      } catch (const std::exception&) {
        throw FormatError("LM text: bad label token '" + tok + "'");
      }
    }
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

void WriteLmText(std::ostream& os, std::span<const LabelSequence> corpus) {
  for (const LabelSequence& s : corpus) os << FormatLabels(s) << '\n';
}

}  // namespace tslab
