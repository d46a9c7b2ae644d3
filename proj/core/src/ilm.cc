// core/src/ilm.cc

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

#include "tslab/ilm.h"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "tslab/error.h"
#include "tslab/transducer_graph.h"

namespace tslab {

std::string IlmKindName(IlmKind kind) {
  switch (kind) {
    case IlmKind::kZeroEncoderRenorm: return "zero_encoder_renorm";
    case IlmKind::kZeroEncoderRaw: return "zero_encoder_raw";
    case IlmKind::kDensityRatio: return "density_ratio";
    case IlmKind::kMiniNet: return "mini_net";
    case IlmKind::kExact: return "exact";
  }
  return "unknown";
}

EncoderVectorIlm::EncoderVectorIlm(TransducerModel model,
                                   Vector encoder_vector, bool renormalize)
    : model_(std::move(model)),
      encoder_vector_(std::move(encoder_vector)),
      renormalize_(renormalize) {
  if (encoder_vector_.size() != model_.config().enc_dim)
    throw ConfigError("EncoderVectorIlm: vector has wrong dimension");
}

std::vector<double> EncoderVectorIlm::NextLogProbs(
    const LabelSequence& history) const {
  Vector logits =
      model_.JointLogits(encoder_vector_, model_.PredictContext(history));
  std::vector<double> lp =
      LogSoftmax({logits.data(), static_cast<std::size_t>(logits.size())});
  if (renormalize_) {
    double label_mass =
        LogSumExp(std::span<const double>(lp).subspan(1));
    for (std::size_t k = 1; k < lp.size(); ++k) lp[k] -= label_mass;
  }
  lp[0] = kLogZero;
  return lp;
}

TableScorer::TableScorer(int num_labels, PosteriorTable table)
    : num_labels_(num_labels), table_(std::move(table)) {
  for (const auto& [seq, prob] : table_) {
    CheckLabels(Vocabulary{num_labels_}, seq);
    if (prob < 0.0) throw ContractViolation("TableScorer: negative entry");
    for (std::size_t n = 0; n <= seq.size(); ++n)
      prefix_mass_[LabelSequence(seq.begin(), seq.begin() + n)] += prob;
  }
}

double TableScorer::Total() const {
  double total = 0.0;
  for (const auto& [seq, prob] : table_) total += prob;
  return total;
}

std::vector<double> TableScorer::NextLogProbs(
    const LabelSequence& history) const {
  std::vector<double> out(num_labels_ + 1, kLogZero);
  auto mass_of = [&](const LabelSequence& h) {
    auto it = prefix_mass_.find(h);
    return it == prefix_mass_.end() ? 0.0 : it->second;
  };
  const double mass = mass_of(history);
  if (mass <= 0.0) return out;
  auto exact = table_.find(history);
  if (exact != table_.end() && exact->second > 0.0)
    out[kEos] = std::log(exact->second / mass);
  LabelSequence next = history;
  next.push_back(0);
  for (Label k = 1; k <= num_labels_; ++k) {
    next.back() = k;
    const double m = mass_of(next);
    if (m > 0.0) out[k] = std::log(m / mass);
  }
  return out;
}

IlmEstimate ZeroEncoderIlm(const TransducerModel& model, bool renormalize) {
  IlmEstimate est;
  est.kind = renormalize ? IlmKind::kZeroEncoderRenorm : IlmKind::kZeroEncoderRaw;
  est.scorer = std::make_shared<EncoderVectorIlm>(
      model, Vector::Zero(model.config().enc_dim), renormalize);
  return est;
}

IlmEstimate DensityRatioIlm(std::span<const LabelSequence> transcripts,
                            int num_labels, const DensityRatioConfig& config) {
  if (transcripts.empty())
    throw TrainingError("DensityRatioIlm: no transcripts");
  IlmEstimate est;
  est.kind = IlmKind::kDensityRatio;
  est.scorer = std::make_shared<NGramLM>(
      TrainNGram(transcripts, num_labels, config.order, config.delta));
  return est;
}

std::pair<double, Vector> MiniNetLossAndGrad(
    const TransducerModel& model, const Vector& encoder_vector,
    std::span<const LabelSequence> transcripts) {
  const int E = model.config().enc_dim;
  if (encoder_vector.size() != E)
    throw ConfigError("MiniNetLossAndGrad: vector has wrong dimension");
  double tokens = 0.0;
  for (const auto& s : transcripts) tokens += s.size();
  if (tokens == 0.0) return {0.0, Vector::Zero(E)};
  const double w = 1.0 / tokens;

  Matrix enc(1, E);
  enc.row(0) = encoder_vector.transpose();
  TransducerGraph graph = TransducerGraph::FromEncoderOutput(model, enc);
  const int V = model.config().num_labels;
  double loss = 0.0;
  for (const LabelSequence& s : transcripts) {
    CheckLabels(model.vocabulary(), s);
    int node = TransducerGraph::kRoot;
    for (Label l : s) {
      auto lp = graph.LogPosterior(0, node);
      const double label_mass = LogSumExp(lp.subspan(1));
      loss -= w * (lp[l] - label_mass);
      for (Label k = 1; k <= V; ++k)
        graph.AddLogProbGrad(0, node, k, w * std::exp(lp[k] - label_mass));
      graph.AddLogProbGrad(0, node, l, -w);
      node = graph.Extend(node, l);
    }
  }
  std::vector<double> unused(model.NumParams(), 0.0);
  graph.Backward(unused);
  return {loss, graph.EncoderOutputGrad().row(0).transpose()};
}

MiniNetResult MiniNetIlm(const TransducerModel& model,
                         std::span<const LabelSequence> transcripts,
                         const MiniNetConfig& config) {
  if (transcripts.empty()) throw TrainingError("MiniNetIlm: no transcripts");
  MiniNetResult result;
  Vector v = Vector::Zero(model.config().enc_dim);
  for (int step = 0; step <= config.steps; ++step) {
    auto [loss, grad] = MiniNetLossAndGrad(model, v, transcripts);
    if (!std::isfinite(loss))
      throw TrainingError("MiniNetIlm: loss diverged at step " +
                          std::to_string(step));
    result.loss_trace.push_back(loss);
    if (step == config.steps) break;
    v -= config.step_size * grad;
  }
  result.encoder_vector = v;
  result.estimate.kind = IlmKind::kMiniNet;
  result.estimate.scorer = std::make_shared<EncoderVectorIlm>(model, v, true);
  return result;
}

IlmEstimate ExactIlm(const TransducerModel& model,
                     std::span<const WeightedFeatures> dataset, int max_len) {
  if (dataset.empty()) throw ContractViolation("ExactIlm: empty dataset");
  double total_weight = 0.0;
  for (const auto& item : dataset) {
    if (item.weight < 0.0)
      throw ContractViolation("ExactIlm: negative weight");
    total_weight += item.weight;
  }
  if (std::abs(total_weight - 1.0) > 1e-9)
    throw ContractViolation("ExactIlm: weights must sum to one");
  PosteriorTable mixed;
  for (const auto& item : dataset) {
    PosteriorTable t = ComputePosteriorTable(model, item.features, max_len);
    for (const auto& [seq, prob] : t) mixed[seq] += item.weight * prob;
  }
  IlmEstimate est;
  est.kind = IlmKind::kExact;
  est.scorer =
      std::make_shared<TableScorer>(model.config().num_labels, std::move(mixed));
  return est;
}

void WriteIlmTable(std::ostream& os, const TableScorer& table) {
  char buf[64];
  for (const auto& [seq, prob] : table.table()) {
    std::snprintf(buf, sizeof(buf), "%.17g", std::log(prob));
    os << FormatLabels(seq) << '\t' << buf << '\n';
  }
}

}  // namespace tslab
