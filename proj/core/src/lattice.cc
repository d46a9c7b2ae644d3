// core/src/lattice.cc

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

#include "tslab/lattice.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "tslab/error.h"

namespace tslab {

namespace {

constexpr double kOracleBudget = 1e6;

double Binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

Lattice::Lattice(TransducerGraph& graph, const LabelSequence& target)
    : num_frames_(graph.NumFrames()),
      target_length_(static_cast<int>(target.size())),
      target_(target) {
  CheckLabels(graph.model().vocabulary(), target);
  const int T = num_frames_;
  const int S = target_length_;
  const std::size_t n = static_cast<std::size_t>(T + 1) * (S + 1);
  alpha_.assign(n, kLogZero);
  beta_.assign(n, kLogZero);
  blank_arc_.assign(n, kLogZero);
  label_arc_.assign(n, kLogZero);
  blank_log_prob_.assign(n, kLogZero);
  if (S > T) {
    unreachable_ = true;
    return;
  }
  nodes_.resize(S + 1);
  nodes_[0] = TransducerGraph::kRoot;
  for (int s = 0; s < S; ++s)
    nodes_[s + 1] = graph.Extend(nodes_[s], target[s]);

  // Node (t, s) lies on a complete path iff s <= t and S - s <= T - t.
  auto live = [&](int t, int s) { return s <= t && S - s <= T - t; };
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s <= S; ++s) {
      if (!live(t, s)) continue;
      auto lp = graph.LogPosterior(t, nodes_[s]);
      blank_log_prob_[Index(t, s)] = lp[kBlank];
      if (live(t + 1, s)) blank_arc_[Index(t, s)] = lp[kBlank];
      if (s < S && live(t + 1, s + 1))
        label_arc_[Index(t, s)] = lp[target[s]];
    }
  }

  alpha_[Index(0, 0)] = 0.0;
  for (int t = 1; t <= T; ++t) {
    for (int s = 0; s <= S; ++s) {
      if (!live(t, s)) continue;
      double a = kLogZero;
      if (live(t - 1, s))
        a = LogAdd(a, alpha_[Index(t - 1, s)] + blank_arc_[Index(t - 1, s)]);
      if (s > 0 && live(t - 1, s - 1))
        a = LogAdd(a, alpha_[Index(t - 1, s - 1)] +
                          label_arc_[Index(t - 1, s - 1)]);
      alpha_[Index(t, s)] = a;
    }
  }
  beta_[Index(T, S)] = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    for (int s = 0; s <= S; ++s) {
      if (!live(t, s)) continue;
      double b = kLogZero;
      if (live(t + 1, s))
        b = LogAdd(b, blank_arc_[Index(t, s)] + beta_[Index(t + 1, s)]);
      if (s < S && live(t + 1, s + 1))
        b = LogAdd(b, label_arc_[Index(t, s)] + beta_[Index(t + 1, s + 1)]);
      beta_[Index(t, s)] = b;
    }
  }
  log_likelihood_ = alpha_[Index(T, S)];
}

LogProb Lattice::CutLogSum(int t) const {
  std::vector<double> terms;
  for (int s = 0; s <= target_length_; ++s)
    terms.push_back(alpha_[Index(t, s)] + beta_[Index(t, s)]);
  return LogSumExp(terms);
}

void Lattice::AccumulateGradient(TransducerGraph& graph, double scale) const {
  if (unreachable_ || scale == 0.0 || log_likelihood_ == kLogZero) return;
  const int T = num_frames_;
  const int S = target_length_;
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s <= S; ++s) {
      const double a = alpha_[Index(t, s)];
      if (a == kLogZero) continue;
      const double blank = blank_arc_[Index(t, s)];
      if (blank != kLogZero) {
        double occ =
            std::exp(a + blank + beta_[Index(t + 1, s)] - log_likelihood_);
        graph.AddLogProbGrad(t, nodes_[s], kBlank, scale * occ);
      }
      const double label = label_arc_[Index(t, s)];
      if (label != kLogZero) {
        double occ = std::exp(a + label + beta_[Index(t + 1, s + 1)] -
                              log_likelihood_);
        graph.AddLogProbGrad(t, nodes_[s], target_[s], scale * occ);
      }
    }
  }
}

double Lattice::ExpectedBlankProbability() const {
  if (unreachable_ || log_likelihood_ == kLogZero) return 0.0;
  double total = 0.0;
  for (int t = 0; t < num_frames_; ++t) {
    for (int s = 0; s <= target_length_; ++s) {
      const double a = alpha_[Index(t, s)];
      if (a == kLogZero) continue;
      double occ = std::exp(a + beta_[Index(t, s)] - log_likelihood_);
      total += occ * std::exp(blank_log_prob_[Index(t, s)]);
    }
  }
  return total / num_frames_;
}

LogProb SeqLogProb(const TransducerModel& model, const Matrix& features,
                   const LabelSequence& target) {
  TransducerGraph graph(model, features);
  return Lattice(graph, target).LogLikelihood();
}

LogProb BruteForceSeqLogProb(const TransducerModel& model,
                             const Matrix& features,
                             const LabelSequence& target) {
  CheckLabels(model.vocabulary(), target);
  const int T = static_cast<int>(features.rows());
  const int S = static_cast<int>(target.size());
  if (S > T) return kLogZero;
  if (Binomial(T, S) * T > kOracleBudget)
    throw OracleScaleError("BruteForceSeqLogProb: C(" + std::to_string(T) +
                           "," + std::to_string(S) +
                           ") alignments exceed the oracle budget");
  Matrix enc = model.Encode(features);
  std::vector<Vector> contexts;
  for (int s = 0; s <= S; ++s)
    contexts.push_back(model.PredictContext(
        LabelSequence(target.begin(), target.begin() + s)));
  // step[t][s] = log posterior at frame t after s labels.
  std::vector<std::vector<Vector>> step(T);
  for (int t = 0; t < T; ++t)
    for (int s = 0; s <= S; ++s)
      step[t].push_back(model.StepPosterior(enc.row(t).transpose(),
                                            contexts[s])
                            .array().log().matrix());

  // Enumerate emission frames as combinations of S out of T.
  std::vector<double> path_scores;
  std::vector<int> emit(S);
  for (int i = 0; i < S; ++i) emit[i] = i;
  while (true) {
    double score = 0.0;
    int s = 0;
    for (int t = 0; t < T; ++t) {
      if (s < S && emit[s] == t) {
        score += step[t][s][target[s]];
        ++s;
      } else {
        score += step[t][s][kBlank];
      }
    }
    path_scores.push_back(score);
    int i = S - 1;
    while (i >= 0 && emit[i] == T - S + i) --i;
    if (i < 0) break;
    ++emit[i];
    for (int j = i + 1; j < S; ++j) emit[j] = emit[j - 1] + 1;
  }
  return LogSumExp(path_scores);
}

PosteriorTable ComputePosteriorTable(const TransducerModel& model,
                                     const Matrix& features, int max_len) {
  const int T = static_cast<int>(features.rows());
  const int V = model.config().num_labels;
  if (std::pow(V + 1.0, T) > kOracleBudget)
    throw OracleScaleError("ComputePosteriorTable: (|V|+1)^T = " +
                           std::to_string(std::pow(V + 1.0, T)) +
                           " alignments exceed the oracle budget");
  Matrix enc = model.Encode(features);
  std::map<LabelSequence, Vector> context_cache;
  auto context = [&](const LabelSequence& h) -> const Vector& {
    auto it = context_cache.find(h);
    if (it == context_cache.end())
      it = context_cache.emplace(h, model.PredictContext(h)).first;
    return it->second;
  };
  PosteriorTable table;
  LabelSequence history;
  // Depth-first over alignments, multiplying per-frame posteriors.
  std::function<void(int, double)> visit = [&](int t, double prob) {
    if (t == T) {
      if (static_cast<int>(history.size()) <= max_len) table[history] += prob;
      return;
    }
    Vector p = model.StepPosterior(enc.row(t).transpose(), context(history));
    visit(t + 1, prob * p[kBlank]);
    for (Label l = 1; l <= V; ++l) {
      history.push_back(l);
      visit(t + 1, prob * p[l]);
      history.pop_back();
    }
  };
  visit(0, 1.0);
  return table;
}

std::vector<LabelSequence> AllLabelSequences(int num_labels, int max_len) {
  std::vector<LabelSequence> out{LabelSequence{}};
  std::size_t level_begin = 0;
  for (int len = 1; len <= max_len; ++len) {
    std::size_t level_end = out.size();
    for (std::size_t i = level_begin; i < level_end; ++i) {
      for (Label l = 1; l <= num_labels; ++l) {
        LabelSequence next = out[i];
        next.push_back(l);
        out.push_back(std::move(next));
      }
    }
    level_begin = level_end;
  }
  return out;
}

LossResult CeLossAndGrad(const TransducerModel& model,
                         std::span<const Utterance> batch) {
  LossResult result;
  result.gradient.assign(model.NumParams(), 0.0);
  if (batch.empty()) return result;
  const double weight = 1.0 / static_cast<double>(batch.size());
  for (const Utterance& utt : batch) {
    if (utt.labels.size() > static_cast<std::size_t>(utt.NumFrames()))
      throw TrainingDataError("utterance '" + utt.id + "' has S=" +
                              std::to_string(utt.labels.size()) + " > T=" +
                              std::to_string(utt.NumFrames()));
    TransducerGraph graph(model, utt.features);
    Lattice lattice(graph, utt.labels);
    result.loss -= weight * lattice.LogLikelihood();
    lattice.AccumulateGradient(graph, -weight);
    graph.Backward(result.gradient);
  }
  return result;
}

double MeanBlankProbability(const TransducerModel& model,
                            std::span<const Utterance> data) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const Utterance& utt : data) {
    TransducerGraph graph(model, utt.features);
    total += Lattice(graph, utt.labels).ExpectedBlankProbability();
  }
  return total / data.size();
}

}  // namespace tslab
