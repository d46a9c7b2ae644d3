// core/src/seqtrain.cc

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

#include "tslab/seqtrain.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "tslab/decoder.h"
#include "tslab/error.h"
#include "tslab/transducer_graph.h"

namespace tslab {

namespace {

constexpr double kOracleBudget = 1e6;

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseNum(const std::string& s) {
  if (s == "-inf") return kLogZero;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw FormatError("bad number '" + s + "'");
  }
  if (pos != s.size()) throw FormatError("bad number '" + s + "'");
  return v;
}

void CheckUnique(std::span<const LabelSequence> space, const char* what) {
  std::set<LabelSequence> seen(space.begin(), space.end());
  if (seen.size() != space.size())
    throw ContractViolation(std::string(what) + ": duplicate hypotheses");
}

// Transducer scores of a space on one graph; the lattices are kept for the
// gradient pass.
struct ScoredSpace {
  std::vector<Lattice> lattices;
  std::vector<double> log_p;
};

ScoredSpace ScoreSpace(TransducerGraph& graph,
                       std::span<const LabelSequence> space) {
  ScoredSpace out;
  out.lattices.reserve(space.size());
  out.log_p.reserve(space.size());
  for (const auto& a : space) {
    out.lattices.emplace_back(graph, a);
    out.log_p.push_back(out.lattices.back().LogLikelihood());
  }
  return out;
}

void Accumulate(TransducerGraph& graph, const ScoredSpace& scored,
                std::span<const double> d_log_p, double scale) {
  for (std::size_t i = 0; i < scored.lattices.size(); ++i) {
    if (d_log_p[i] == 0.0 || scored.lattices[i].Unreachable()) continue;
    scored.lattices[i].AccumulateGradient(graph, scale * d_log_p[i]);
  }
}

std::vector<double> LmScores(const SequenceScorer& lm,
                             std::span<const LabelSequence> space) {
  std::vector<double> out;
  out.reserve(space.size());
  for (const auto& a : space) out.push_back(LmLogProb(lm, a));
  return out;
}

// Space of every sequence of length <= min(max_len, T).
std::vector<LabelSequence> FullSpace(const TransducerModel& model,
                                     const Matrix& features, int max_len,
                                     const char* what) {
  const int V = model.config().num_labels;
  const int T = static_cast<int>(features.rows());
  if (std::pow(V + 1.0, T) > kOracleBudget)
    throw OracleScaleError(std::string(what) + ": (|V|+1)^T exceeds 1e6");
  return AllLabelSequences(V, std::min(max_len, T));
}

template <typename Fn>
LossResult ExactOverEntries(const TransducerModel& model,
                            const SequenceScorer& lm, const SeqScales& scales,
                            const EmpiricalDistribution& empirical,
                            int max_len, const char* what, Fn criterion) {
  scales.Validate();
  ValidateEmpirical(empirical);
  LossResult result;
  result.gradient.assign(model.NumParams(), 0.0);
  for (const auto& entry : empirical) {
    if (entry.weight == 0.0) continue;
    auto space = FullSpace(model, entry.features, max_len, what);
    std::vector<double> lm_scores = LmScores(lm, space);
    TransducerGraph graph(model, entry.features);
    ScoredSpace scored = ScoreSpace(graph, space);
    SpaceCriterion c = criterion(entry, space, scored.log_p, lm_scores);
    result.loss += entry.weight * c.loss;
    Accumulate(graph, scored, c.d_log_p_rnnt, entry.weight);
    graph.Backward(result.gradient);
  }
  return result;
}

}  // namespace

void SeqScales::Validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ConfigError("SeqScales: alpha must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw ConfigError("SeqScales: beta must be non-negative");
}

RiskFn EditDistanceRisk() {
  return [](const LabelSequence& hyp, const LabelSequence& ref) {
    return static_cast<double>(EditDistance(hyp, ref));
  };
}

std::vector<double> CombinedPosterior(std::span<const double> log_p_rnnt,
                                      std::span<const double> log_p_lm,
                                      const SeqScales& scales) {
  if (log_p_rnnt.empty() || log_p_rnnt.size() != log_p_lm.size())
    throw ContractViolation("CombinedPosterior: bad space");
  std::vector<double> s(log_p_rnnt.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (log_p_rnnt[i] == kLogZero || log_p_lm[i] == kLogZero) {
      s[i] = kLogZero;
    } else {
      s[i] = scales.alpha * log_p_rnnt[i];
      if (scales.beta != 0.0) s[i] += scales.beta * log_p_lm[i];
    }
  }
  double z = LogSumExp(s);
  if (z == kLogZero)
    throw DegenerateSpaceError("every hypothesis has zero probability");
  for (double& v : s) v = std::exp(v - z);
  return s;
}

SpaceCriterion MmiOverSpace(std::span<const double> log_p_rnnt,
                            std::span<const double> log_p_lm,
                            const SeqScales& scales,
                            std::span<const double> target_weights) {
  if (target_weights.size() != log_p_rnnt.size())
    throw ContractViolation("MmiOverSpace: weight count mismatch");
  SpaceCriterion c;
  c.p_seq = CombinedPosterior(log_p_rnnt, log_p_lm, scales);
  c.d_log_p_rnnt.assign(c.p_seq.size(), 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < c.p_seq.size(); ++i) {
    double w = target_weights[i];
    if (w == 0.0) continue;
    if (c.p_seq[i] == 0.0)
      throw TrainingDataError("a target sequence has zero probability");
    mass += w;
    c.loss -= w * std::log(c.p_seq[i]);
  }
  for (std::size_t i = 0; i < c.p_seq.size(); ++i)
    c.d_log_p_rnnt[i] =
        scales.alpha * (mass * c.p_seq[i] - target_weights[i]);
  return c;
}

SpaceCriterion MbrOverSpace(std::span<const double> log_p_rnnt,
                            std::span<const double> log_p_lm,
                            const SeqScales& scales,
                            std::span<const double> risks) {
  if (risks.size() != log_p_rnnt.size())
    throw ContractViolation("MbrOverSpace: risk count mismatch");
  SpaceCriterion c;
  c.p_seq = CombinedPosterior(log_p_rnnt, log_p_lm, scales);
  for (std::size_t i = 0; i < c.p_seq.size(); ++i)
    c.loss += c.p_seq[i] * risks[i];
  c.d_log_p_rnnt.resize(c.p_seq.size());
  for (std::size_t i = 0; i < c.p_seq.size(); ++i)
    c.d_log_p_rnnt[i] = scales.alpha * c.p_seq[i] * (risks[i] - c.loss);
  return c;
}

std::vector<double> PSeq(const TransducerModel& model,
                         const SequenceScorer& lm, const SeqScales& scales,
                         std::span<const LabelSequence> space,
                         const Matrix& features) {
  scales.Validate();
  if (space.empty()) throw ContractViolation("PSeq: empty space");
  CheckUnique(space, "PSeq");
  TransducerGraph graph(model, features);
  std::vector<double> lp;
  for (const auto& a : space) lp.push_back(Lattice(graph, a).LogLikelihood());
  return CombinedPosterior(lp, LmScores(lm, space), scales);
}

void ValidateEmpirical(const EmpiricalDistribution& empirical) {
  if (empirical.empty()) throw ContractViolation("empty empirical set");
  double total = 0.0;
  for (const auto& e : empirical) {
    if (!(e.weight >= 0.0)) throw ContractViolation("negative Pr(X)");
    total += e.weight;
    double inner = 0.0;
    for (const auto& [a, w] : e.targets) {
      if (!(w >= 0.0)) throw ContractViolation("negative Pr(a|X)");
      inner += w;
    }
    if (std::abs(inner - 1.0) > 1e-9)
      throw ContractViolation("Pr(a|X) does not sum to one");
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ContractViolation("Pr(X) does not sum to one");
}

EmpiricalDistribution EmpiricalFromUtterances(std::span<const Utterance> data) {
  EmpiricalDistribution out;
  for (const auto& u : data)
    out.push_back({u.features, 1.0 / data.size(), {{u.labels, 1.0}}});
  return out;
}

LossResult MmiLossExact(const TransducerModel& model, const SequenceScorer& lm,
                        const SeqScales& scales,
                        const EmpiricalDistribution& empirical, int max_len) {
  return ExactOverEntries(
      model, lm, scales, empirical, max_len, "MmiLossExact",
      [&](const EmpiricalEntry& entry, const std::vector<LabelSequence>& space,
          const std::vector<double>& lp, const std::vector<double>& lm_s) {
        std::vector<double> w(space.size(), 0.0);
        for (const auto& [a, pr] : entry.targets) {
          auto it = std::lower_bound(
              space.begin(), space.end(), a,
              [](const LabelSequence& x, const LabelSequence& y) {
                return x.size() != y.size() ? x.size() < y.size() : x < y;
              });
          if (it == space.end() || *it != a)
            throw TrainingDataError("MmiLossExact: target " + FormatLabels(a) +
                                    " is outside the space");
          w[it - space.begin()] += pr;
        }
        return MmiOverSpace(lp, lm_s, scales, w);
      });
}

LossResult MbrLossExact(const TransducerModel& model, const SequenceScorer& lm,
                        const SeqScales& scales,
                        const EmpiricalDistribution& empirical, int max_len,
                        const RiskFn& risk) {
  return ExactOverEntries(
      model, lm, scales, empirical, max_len, "MbrLossExact",
      [&](const EmpiricalEntry& entry, const std::vector<LabelSequence>& space,
          const std::vector<double>& lp, const std::vector<double>& lm_s) {
        std::vector<double> r(space.size(), 0.0);
        for (std::size_t i = 0; i < space.size(); ++i)
          for (const auto& [a, pr] : entry.targets)
            r[i] += pr * risk(space[i], a);
        return MbrOverSpace(lp, lm_s, scales, r);
      });
}

NBestSpace BuildNBestSpace(const NBestList& nbest, const LabelSequence& reference,
                           const SequenceScorer& lm) {
  if (nbest.hyps.empty())
    throw ContractViolation("N-best list '" + nbest.utt_id + "' is empty");
  NBestSpace space;
  for (const auto& h : nbest.hyps) {
    space.sequences.push_back(h.labels);
    space.log_p_lm.push_back(h.log_p_lm);
  }
  CheckUnique(space.sequences, "BuildNBestSpace");
  auto it = std::find(space.sequences.begin(), space.sequences.end(), reference);
  if (it == space.sequences.end()) {
    space.reference_appended = true;
    space.reference_index = static_cast<int>(space.sequences.size());
    space.sequences.push_back(reference);
    space.log_p_lm.push_back(LmLogProb(lm, reference));
  } else {
    space.reference_index = static_cast<int>(it - space.sequences.begin());
  }
  return space;
}

namespace {

template <typename Fn>
LossResult NBestLoss(const TransducerModel& model, const SequenceScorer& lm,
                     const SeqScales& scales, const NBestList& nbest,
                     const LabelSequence& reference, const Matrix& features,
                     Fn criterion) {
  scales.Validate();
  if (reference.size() > static_cast<std::size_t>(features.rows()))
    throw TrainingDataError("utterance '" + nbest.utt_id +
                            "': reference longer than the frame count");
  NBestSpace space = BuildNBestSpace(nbest, reference, lm);
  TransducerGraph graph(model, features);
  ScoredSpace scored = ScoreSpace(graph, space.sequences);
  SpaceCriterion c = criterion(space, scored.log_p);
  LossResult result;
  result.loss = c.loss;
  result.gradient.assign(model.NumParams(), 0.0);
  Accumulate(graph, scored, c.d_log_p_rnnt, 1.0);
  graph.Backward(result.gradient);
  return result;
}

}  // namespace

LossResult MmiLossNbest(const TransducerModel& model, const SequenceScorer& lm,
                        const SeqScales& scales, const NBestList& nbest,
                        const LabelSequence& reference,
                        const Matrix& features) {
  return NBestLoss(model, lm, scales, nbest, reference, features,
                   [&](const NBestSpace& space, const std::vector<double>& lp) {
                     std::vector<double> w(lp.size(), 0.0);
                     w[space.reference_index] = 1.0;
                     return MmiOverSpace(lp, space.log_p_lm, scales, w);
                   });
}

LossResult MbrLossNbest(const TransducerModel& model, const SequenceScorer& lm,
                        const SeqScales& scales, const NBestList& nbest,
                        const LabelSequence& reference, const Matrix& features,
                        const RiskFn& risk) {
  return NBestLoss(model, lm, scales, nbest, reference, features,
                   [&](const NBestSpace& space, const std::vector<double>& lp) {
                     std::vector<double> r;
                     for (const auto& h : space.sequences)
                       r.push_back(risk(h, reference));
                     return MbrOverSpace(lp, space.log_p_lm, scales, r);
                   });
}

namespace {

// Pruned (frame, last label) recursion shared by the LF-MMI functions.
class LfMmiDenominator {
 public:
  LfMmiDenominator(TransducerGraph& graph, const NGramLM& lm,
                   const SeqScales& scales, int top_k)
      : graph_(graph), scales_(scales) {
    const TransducerModel& model = graph.model();
    if (top_k < 1) throw ConfigError("LF-MMI: top_k must be >= 1");
    if (model.config().context_size != 1)
      throw ConfigError("LF-MMI needs a context-1 prediction network");
    if (lm.order() > 2) throw ConfigError("LF-MMI needs an LM of order <= 2");
    if (lm.NumLabels() != model.config().num_labels)
      throw VocabularyError("LF-MMI: LM and model vocabularies differ");
    V_ = model.config().num_labels;
    T_ = graph.NumFrames();
    node_.resize(V_ + 1);
    node_[0] = TransducerGraph::kRoot;
    for (int l = 1; l <= V_; ++l)
      node_[l] = graph.Extend(TransducerGraph::kRoot, l);
    lm_.resize(V_ + 1);
    for (int l = 0; l <= V_; ++l)
      lm_[l] = lm.NextLogProbs(l == 0 ? LabelSequence{} : LabelSequence{l});

    alpha_.assign(T_ + 1, std::vector<double>(V_ + 1, kLogZero));
    kept_.assign(T_ + 1, std::vector<char>(V_ + 1, 0));
    alpha_[0][0] = 0.0;
    kept_[0][0] = 1;
    for (int t = 0; t < T_; ++t) {
      std::vector<double>& next = alpha_[t + 1];
      for (int l = 0; l <= V_; ++l) {
        if (!kept_[t][l]) continue;
        for (int k = 0; k <= V_; ++k) {
          int to = k == 0 ? l : k;
          next[to] = LogAdd(next[to], alpha_[t][l] + Arc(t, l, k));
        }
      }
      std::vector<int> order;
      for (int l = 0; l <= V_; ++l)
        if (next[l] != kLogZero) order.push_back(l);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return next[a] > next[b]; });
      if (static_cast<int>(order.size()) > top_k) order.resize(top_k);
      for (int l : order) kept_[t + 1][l] = 1;
      for (int l = 0; l <= V_; ++l)
        if (!kept_[t + 1][l]) next[l] = kLogZero;
    }
    log_z_ = kLogZero;
    for (int l = 0; l <= V_; ++l)
      if (kept_[T_][l]) log_z_ = LogAdd(log_z_, alpha_[T_][l] + Eos(l));
  }

  double LogZ() const { return log_z_; }

  // Adds scale * d log Z / d log p for every retained arc.
  void AccumulateGradient(double scale) {
    if (log_z_ == kLogZero) throw DegenerateSpaceError("LF-MMI: Z = 0");
    std::vector<double> beta(V_ + 1, kLogZero), prev(V_ + 1);
    for (int l = 0; l <= V_; ++l)
      if (kept_[T_][l]) beta[l] = Eos(l);
    for (int t = T_ - 1; t >= 0; --t) {
      std::fill(prev.begin(), prev.end(), kLogZero);
      for (int l = 0; l <= V_; ++l) {
        if (!kept_[t][l]) continue;
        for (int k = 0; k <= V_; ++k) {
          int to = k == 0 ? l : k;
          if (!kept_[t + 1][to]) continue;
          double arc = Arc(t, l, k);
          prev[l] = LogAdd(prev[l], arc + beta[to]);
          double occ = std::exp(alpha_[t][l] + arc + beta[to] - log_z_);
          if (occ != 0.0)
            graph_.AddLogProbGrad(t, node_[l], k, scale * scales_.alpha * occ);
        }
      }
      beta.swap(prev);
    }
  }

 private:
  double Arc(int t, int l, int k) {
    double s = scales_.alpha * graph_.LogPosterior(t, node_[l])[k];
    if (k != 0 && scales_.beta != 0.0) s += scales_.beta * lm_[l][k];
    return s;
  }
  double Eos(int l) const {
    return scales_.beta != 0.0 ? scales_.beta * lm_[l][kEos] : 0.0;
  }

  TransducerGraph& graph_;
  SeqScales scales_;
  int V_ = 0, T_ = 0;
  std::vector<int> node_;
  std::vector<std::vector<double>> lm_;
  std::vector<std::vector<double>> alpha_;
  std::vector<std::vector<char>> kept_;
  double log_z_ = kLogZero;
};

}  // namespace

double LfMmiLogDenominator(const TransducerModel& model, const NGramLM& lm,
                           const SeqScales& scales, const Matrix& features,
                           int top_k) {
  scales.Validate();
  TransducerGraph graph(model, features);
  return LfMmiDenominator(graph, lm, scales, top_k).LogZ();
}

LossResult LfMmiLoss(const TransducerModel& model, const NGramLM& lm,
                     const SeqScales& scales, const Matrix& features,
                     const LabelSequence& reference, int top_k) {
  scales.Validate();
  if (reference.size() > static_cast<std::size_t>(features.rows()))
    throw TrainingDataError("LF-MMI: reference longer than the frame count");
  TransducerGraph graph(model, features);
  LfMmiDenominator den(graph, lm, scales, top_k);
  Lattice num(graph, reference);
  double num_score = scales.alpha * num.LogLikelihood();
  if (scales.beta != 0.0) num_score += scales.beta * LmLogProb(lm, reference);
  LossResult result;
  result.loss = den.LogZ() - num_score;
  result.gradient.assign(model.NumParams(), 0.0);
  den.AccumulateGradient(1.0);
  num.AccumulateGradient(graph, -scales.alpha);
  graph.Backward(result.gradient);
  return result;
}

PosteriorTable MmiOptimumTarget(const SequenceDistribution& empirical,
                                const SequenceScorer& lm,
                                const SeqScales& scales) {
  scales.Validate();
  std::vector<LabelSequence> support;
  std::vector<double> s;
  for (const auto& [a, pr] : empirical) {
    if (pr <= 0.0) continue;
    double l = LmLogProb(lm, a);
    if (l == kLogZero && scales.beta != 0.0)
      throw SingularityError("LM gives zero probability to " + FormatLabels(a));
    double v = std::log(pr);
    if (scales.beta != 0.0) v -= scales.beta * l;
    support.push_back(a);
    s.push_back(v / scales.alpha);
  }
  if (support.empty()) throw ContractViolation("MmiOptimumTarget: no support");
  double z = LogSumExp(s);
  PosteriorTable out;
  for (std::size_t i = 0; i < support.size(); ++i)
    out[support[i]] += std::exp(s[i] - z);
  return out;
}

LabelSequence BayesOptimalSequence(const SequenceDistribution& empirical,
                                   const RiskFn& risk,
                                   std::span<const LabelSequence> candidates) {
  if (candidates.empty())
    throw ContractViolation("BayesOptimalSequence: no candidates");
  const LabelSequence* best = nullptr;
  double best_risk = 0.0;
  for (const auto& c : candidates) {
    double r = 0.0;
    for (const auto& [a, pr] : empirical) r += pr * risk(a, c);
    bool better = best == nullptr || r < best_risk ||
                  (r == best_risk &&
                   (c.size() < best->size() ||
                    (c.size() == best->size() && c < *best)));
    if (better) {
      best = &c;
      best_risk = r;
    }
  }
  return *best;
}

std::vector<double> TableModel::Posterior() const {
  return StableSoftmax(logits);
}

LossResult TableModelLoss(const TableModel& model,
                          std::span<const double> log_p_lm,
                          const SeqScales& scales, TableCriterion criterion,
                          std::span<const double> weights) {
  if (model.logits.size() != model.space.size() ||
      log_p_lm.size() != model.space.size())
    throw ContractViolation("TableModelLoss: size mismatch");
  std::vector<double> lp = LogSoftmax(model.logits);
  SpaceCriterion c = criterion == TableCriterion::kMmi
                         ? MmiOverSpace(lp, log_p_lm, scales, weights)
                         : MbrOverSpace(lp, log_p_lm, scales, weights);
  double sum = 0.0;
  for (double d : c.d_log_p_rnnt) sum += d;
  LossResult r;
  r.loss = c.loss;
  r.gradient.resize(lp.size());
  for (std::size_t i = 0; i < lp.size(); ++i)
    r.gradient[i] = c.d_log_p_rnnt[i] - std::exp(lp[i]) * sum;
  return r;
}

TableTrainingResult TrainTableModel(
    TableModel model, std::span<const double> log_p_lm,
    const SeqScales& scales, TableCriterion criterion,
    std::span<const double> weights, int max_steps, double step_size,
    const std::function<bool(const std::vector<double>&, int)>& stop) {
  scales.Validate();
  TableTrainingResult out;
  int step = 0;
  for (; step < max_steps; ++step) {
    if (stop && stop(model.Posterior(), step)) break;
    LossResult r = TableModelLoss(model, log_p_lm, scales, criterion, weights);
    if (!std::isfinite(r.loss))
      throw TrainingError("table model loss is not finite");
    for (std::size_t i = 0; i < r.gradient.size(); ++i)
      model.logits[i] -= step_size * r.gradient[i];
  }
  out.final_loss =
      TableModelLoss(model, log_p_lm, scales, criterion, weights).loss;
  out.steps_run = step;
  out.model = std::move(model);
  return out;
}

double TotalVariation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw ContractViolation("TotalVariation: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

void WriteNBest(std::ostream& os, std::span<const NBestList> lists) {
  for (const auto& list : lists) {
    os << "UTT " << list.utt_id << ' ' << list.hyps.size() << '\n';
    for (const auto& h : list.hyps)
      os << Num(h.log_p_rnnt) << '\t' << Num(h.log_p_lm) << '\t'
         << FormatLabels(h.labels) << '\n';
  }
}

std::vector<NBestList> ReadNBest(std::istream& is) {
  std::vector<NBestList> out;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw FormatError("N-best line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream head(line);
    std::string tag;
    NBestList list;
    long n = -1;
    if (!(head >> tag >> list.utt_id >> n) || tag != "UTT" || n < 0)
      fail("expected 'UTT <id> <n>'");
    for (long i = 0; i < n; ++i) {
      if (!std::getline(is, line)) fail("truncated list");
      ++line_no;
      std::size_t a = line.find('\t');
      std::size_t b = a == std::string::npos ? a : line.find('\t', a + 1);
      if (b == std::string::npos) fail("expected three tab-separated fields");
      NBestHypothesis h;
      try {
        h.log_p_rnnt = ParseNum(line.substr(0, a));
        h.log_p_lm = ParseNum(line.substr(a + 1, b - a - 1));
      } catch (const FormatError& e) {
        fail(e.what());
      }
      std::istringstream labels(line.substr(b + 1));
      std::string tok;
      while (labels >> tok) {
        std::size_t pos = 0;
        int v = 0;
        try {
          v = std::stoi(tok, &pos);
        } catch (const std::exception&) {
          fail("bad label '" + tok + "'");
        }
        if (pos != tok.size() || v < 1) fail("bad label '" + tok + "'");
        h.labels.push_back(v);
      }
      list.hyps.push_back(std::move(h));
    }
    out.push_back(std::move(list));
  }
  return out;
}

}  // namespace tslab
