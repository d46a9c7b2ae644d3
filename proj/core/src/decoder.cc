// core/src/decoder.cc

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

#include "tslab/decoder.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "tslab/error.h"
#include "tslab/transducer_graph.h"

namespace tslab {

namespace {

bool UsesElm(FusionMode m) { return m != FusionMode::kNone; }
bool UsesIlm(FusionMode m) {
  return m == FusionMode::kSfIlm || m == FusionMode::kSfDr;
}

// Score order, then shorter, then lexicographically smaller.
bool Before(const Hypothesis& a, const Hypothesis& b) {
  if (a.combined != b.combined) return a.combined > b.combined;
  if (a.labels.size() != b.labels.size())
    return a.labels.size() < b.labels.size();
  return a.labels < b.labels;
}

class ScoreCache {
 public:
  explicit ScoreCache(const SequenceScorer* scorer) : scorer_(scorer) {}
  const std::vector<double>& Next(const LabelSequence& history) {
    auto it = cache_.find(history);
    if (it == cache_.end())
      it = cache_.emplace(history, scorer_->NextLogProbs(history)).first;
    return it->second;
  }

 private:
  const SequenceScorer* scorer_;
  std::map<LabelSequence, std::vector<double>> cache_;
};

}  // namespace

std::string FusionModeName(FusionMode mode) {
  switch (mode) {
    case FusionMode::kNone: return "none";
    case FusionMode::kSf: return "sf";
    case FusionMode::kSfIlm: return "sf_ilm";
    case FusionMode::kSfDr: return "sf_dr";
    case FusionMode::kSfReduceBlank: return "sf_reduce_blank";
  }
  return "unknown";
}

FusionMode ParseFusionMode(const std::string& name) {
  for (FusionMode m : {FusionMode::kNone, FusionMode::kSf, FusionMode::kSfIlm,
                       FusionMode::kSfDr, FusionMode::kSfReduceBlank})
    if (FusionModeName(m) == name) return m;
  throw ConfigError("unknown fusion mode '" + name + "'");
}

void BlankReduction::Validate() const {
  if (kind == Kind::kLinear && !(value >= 0.0 && value <= 1.0))
    throw ConfigError("linear blank reduction needs rho in [0, 1]");
  if (kind == Kind::kExponential && !(value >= 1.0 && std::isfinite(value)))
    throw ConfigError("exponential blank reduction needs gamma >= 1");
}

std::vector<double> ReduceBlank(std::span<const double> step_dist,
                                const BlankReduction& reduction) {
  reduction.Validate();
  if (step_dist.size() < 2)
    throw ContractViolation("ReduceBlank: need blank and at least one label");
  double sum = 0.0;
  for (double p : step_dist) {
    if (!(p >= 0.0)) throw ContractViolation("ReduceBlank: negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ContractViolation("ReduceBlank: input does not sum to one");
  std::vector<double> out(step_dist.begin(), step_dist.end());
  switch (reduction.kind) {
    case BlankReduction::Kind::kOff: return out;
    case BlankReduction::Kind::kLinear: out[kBlank] *= reduction.value; break;
    case BlankReduction::Kind::kExponential:
      out[kBlank] = std::pow(out[kBlank], reduction.value);
      break;
  }
  double z = 0.0;
  for (double p : out) z += p;
  if (z <= 0.0)
    throw DegenerateSpaceError("ReduceBlank: no mass left after reduction");
  for (double& p : out) p /= z;
  return out;
}

void BeamConfig::Validate() const {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (n_best_out < 1) throw ConfigError("n_best_out must be >= 1");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0))
    throw ConfigError("fusion scales must be non-negative");
  blank_reduction.Validate();
}

std::vector<Hypothesis> BeamSearch(const TransducerModel& model,
                                   const Matrix& features,
                                   const SequenceScorer* elm,
                                   const IlmEstimate* ilm,
                                   const BeamConfig& config) {
  if (features.rows() == 0) throw EmptyInputError("BeamSearch: T = 0");
  TransducerGraph graph(model, features);
  return BeamSearch(graph, elm, ilm, config);
}

std::vector<Hypothesis> BeamSearch(TransducerGraph& graph,
                                   const SequenceScorer* elm,
                                   const IlmEstimate* ilm,
                                   const BeamConfig& config) {
  config.Validate();
  if (graph.NumFrames() == 0) throw EmptyInputError("BeamSearch: T = 0");
  const TransducerModel& model = graph.model();
  const bool use_elm = UsesElm(config.fusion);
  const bool use_ilm = UsesIlm(config.fusion);
  const bool reduce = config.fusion == FusionMode::kSfReduceBlank &&
                      config.blank_reduction.kind != BlankReduction::Kind::kOff;
  if (use_elm && elm == nullptr)
    throw ConfigError("fusion mode " + FusionModeName(config.fusion) +
                      " needs an external LM");
  if (use_ilm && (ilm == nullptr || !ilm->scorer))
    throw ConfigError("fusion mode " + FusionModeName(config.fusion) +
                      " needs an internal LM estimate");
  const int V = model.config().num_labels;
  if (use_elm && elm->NumLabels() != V)
    throw VocabularyError("external LM vocabulary differs from the model");
  if (use_ilm && ilm->scorer->NumLabels() != V)
    throw VocabularyError("internal LM vocabulary differs from the model");

  ScoreCache elm_cache(use_elm ? elm : nullptr);
  ScoreCache ilm_cache(use_ilm ? ilm->scorer.get() : nullptr);
  auto combine = [&](Hypothesis& h) {
    h.combined = h.transducer;
    if (use_elm && config.lambda1 != 0.0) h.combined += config.lambda1 * h.elm;
    if (use_ilm && config.lambda2 != 0.0) h.combined -= config.lambda2 * h.ilm;
  };

  std::vector<Hypothesis> beam(1);
  for (int t = 0; t < graph.NumFrames(); ++t) {
    std::map<LabelSequence, Hypothesis> next;
    auto add = [&](Hypothesis h) {
      auto [it, fresh] = next.try_emplace(h.labels, h);
      if (!fresh) it->second.transducer =
                      LogAdd(it->second.transducer, h.transducer);
    };
    for (const Hypothesis& h : beam) {
      auto post = graph.LogPosterior(t, h.pred_node);
      std::vector<double> lp(post.begin(), post.end());
      if (reduce) {
        std::vector<double> p(lp.size());
        for (std::size_t k = 0; k < lp.size(); ++k) p[k] = std::exp(lp[k]);
        p = ReduceBlank(p, config.blank_reduction);
        for (std::size_t k = 0; k < lp.size(); ++k) lp[k] = std::log(p[k]);
      }
      Hypothesis blank = h;
      blank.transducer += lp[kBlank];
      add(std::move(blank));
      const std::vector<double>* elm_next =
          use_elm ? &elm_cache.Next(h.labels) : nullptr;
      const std::vector<double>* ilm_next =
          use_ilm ? &ilm_cache.Next(h.labels) : nullptr;
      for (Label k = 1; k <= V; ++k) {
        Hypothesis e = h;
        e.labels.push_back(k);
        e.transducer += lp[k];
        if (use_elm) e.elm += (*elm_next)[k];
        if (use_ilm) e.ilm += (*ilm_next)[k];
        e.pred_node = graph.Extend(h.pred_node, k);
        add(std::move(e));
      }
    }
    beam.clear();
    for (auto& [labels, h] : next) {
      combine(h);
      beam.push_back(std::move(h));
    }
    std::sort(beam.begin(), beam.end(), Before);
    if (static_cast<int>(beam.size()) > config.beam_size)
      beam.resize(config.beam_size);
  }

  for (Hypothesis& h : beam) {
    if (use_elm) h.elm += elm_cache.Next(h.labels)[kEos];
    combine(h);
  }
  std::sort(beam.begin(), beam.end(), Before);
  if (static_cast<int>(beam.size()) > config.n_best_out)
    beam.resize(config.n_best_out);
  return beam;
}

int EditDistance(const LabelSequence& a, const LabelSequence& b) {
  std::vector<int> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      int up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                         diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double WordErrorRate(std::span<const LabelSequence> references,
                     std::span<const LabelSequence> hypotheses) {
  if (references.size() != hypotheses.size())
    throw ContractViolation("WordErrorRate: list lengths differ");
  long edits = 0, words = 0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    edits += EditDistance(references[i], hypotheses[i]);
    words += static_cast<long>(references[i].size());
  }
  if (words == 0)
    throw UndefinedMetricError("WordErrorRate: no reference tokens");
  return 100.0 * static_cast<double>(edits) / static_cast<double>(words);
}

}  // namespace tslab
