// core/src/pipeline.cc

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

#include "tslab/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tslab/checkpoint.h"
#include "tslab/error.h"
#include "tslab/lattice.h"
#include "tslab/optim.h"
#include "tslab/transducer_graph.h"

namespace tslab {

namespace {

void Say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

// Memoizes next-token distributions across searches. Not thread-safe.
class CachingScorer : public SequenceScorer {
 public:
  explicit CachingScorer(const SequenceScorer& inner) : inner_(inner) {}
  int NumLabels() const override { return inner_.NumLabels(); }
  bool HasEos() const override { return inner_.HasEos(); }
  std::vector<double> NextLogProbs(
      const LabelSequence& history) const override {
    auto it = cache_.find(history);
    if (it == cache_.end())
      it = cache_.emplace(history, inner_.NextLogProbs(history)).first;
    return it->second;
  }

 private:
  const SequenceScorer& inner_;
  mutable std::map<LabelSequence, std::vector<double>> cache_;
};

std::vector<Utterance> Gather(std::span<const Utterance> data,
                              std::span<const int> idx) {
  std::vector<Utterance> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(data[i]);
  return out;
}

// Deterministic batches over a shuffled order, reshuffled once exhausted.
class BatchStream {
 public:
  BatchStream(int n, int batch, std::uint64_t seed)
      : order_(n), batch_(batch), rng_(seed) {
    std::iota(order_.begin(), order_.end(), 0);
    pos_ = n;
  }
  std::vector<int> Next() {
    std::vector<int> out;
    while (static_cast<int>(out.size()) < batch_) {
      if (pos_ == static_cast<int>(order_.size())) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
        if (!out.empty()) break;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<int> order_;
  int batch_;
  std::mt19937_64 rng_;
  int pos_ = 0;
};

LossResult UtteranceLoss(const ExperimentConfig& config,
                         FinetuneCriterion criterion,
                         const TransducerModel& model, const Utterance& u,
                         int index, const FinetuneInputs& in) {
  const SeqScales scales = config.Scales();
  auto need_lm = [&] {
    if (in.lm == nullptr)
      throw ConfigError(FinetuneCriterionName(criterion) + " needs an LM");
  };
  auto nbest = [&]() -> const NBestList& {
    if (index >= static_cast<int>(in.nbest.size()))
      throw PipelineOrderError("no N-best list for utterance " + u.id);
    const NBestList& list = in.nbest[index];
    if (list.utt_id != u.id)
      throw ContractViolation("N-best list " + list.utt_id +
                              " does not match utterance " + u.id);
    return list;
  };
  switch (criterion) {
    case FinetuneCriterion::kMmiNbest:
      need_lm();
      return MmiLossNbest(model, *in.lm, scales, nbest(), u.labels,
                          u.features);
    case FinetuneCriterion::kMbrNbest:
      need_lm();
      return MbrLossNbest(model, *in.lm, scales, nbest(), u.labels,
                          u.features, EditDistanceRisk());
    case FinetuneCriterion::kLfMmi:
      if (in.bigram == nullptr) throw ConfigError("lf_mmi needs a bigram LM");
      return LfMmiLoss(model, *in.bigram, scales, u.features, u.labels,
                       config.lf_mmi_top_k);
    case FinetuneCriterion::kMmiExact:
    case FinetuneCriterion::kMbrExact: {
      need_lm();
      EmpiricalDistribution e{{u.features, 1.0, {{u.labels, 1.0}}}};
      if (criterion == FinetuneCriterion::kMmiExact)
        return MmiLossExact(model, *in.lm, scales, e, config.exact_max_len);
      return MbrLossExact(model, *in.lm, scales, e, config.exact_max_len,
                          EditDistanceRisk());
    }
  }
  throw ConfigError("unknown criterion");
}

}  // namespace

// ---- records ----

void WriteRecords(std::ostream& os, std::span<const ResultRecord> records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["experiment_id"] = r.experiment_id;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx", r.config_hash);
    j["config_hash"] = hash;
    j["metric"] = r.metric;
    j["split"] = r.split;
    j["value"] = r.value;
    j["seed"] = r.seed;
    os << j.dump() << '\n';
  }
}

std::vector<ResultRecord> ReadRecords(std::istream& is) {
  std::vector<ResultRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ResultRecord r;
      r.experiment_id = j.at("experiment_id").get<std::string>();
      r.config_hash =
          std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
      r.metric = j.at("metric").get<std::string>();
      r.split = j.at("split").get<std::string>();
      r.value = j.at("value").get<double>();
      r.seed = j.at("seed").get<std::uint64_t>();
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError(std::string("bad record line: ") + e.what());
    }
  }
  return out;
}

// ---- training ----

TransducerModel TrainCe(const ExperimentConfig& config,
                        std::span<const Utterance> train, const Logger& log) {
  if (train.empty()) throw TrainingError("TrainCe: empty training set");
  TransducerModel model = TransducerModel::Initialize(
      config.TransducerConfig(), DeriveSeed(config.seed, "model-init"),
      config.init_scale);
  Adam adam(model.NumParams(), config.ce_learning_rate);
  const int n = static_cast<int>(train.size());
  const int per_epoch = (n + config.ce_batch_size - 1) / config.ce_batch_size;
  BatchStream batches(n, config.ce_batch_size,
                      DeriveSeed(config.seed, "ce-batches"));
  for (int epoch = 0; epoch < config.ce_epochs; ++epoch) {
    double total = 0.0;
    for (int b = 0; b < per_epoch; ++b) {
      auto batch = Gather(train, batches.Next());
      LossResult r = CeLossAndGrad(model, batch);
      if (!std::isfinite(r.loss))
        throw TrainingError("CE loss diverged in epoch " +
                            std::to_string(epoch));
      adam.Step(model.params().values(), r.gradient);
      total += r.loss;
    }
    Say(log, "ce epoch " + std::to_string(epoch + 1) + " loss " +
                 Fmt("%.4f", total / per_epoch));
  }
  return model;
}

NeuralLM TrainExternalLm(const ExperimentConfig& config,
                         std::span<const LabelSequence> text) {
  return TrainNeuralLM(text, config.LmConfig(), config.LmTraining());
}

NGramLM TrainBigramLm(const ExperimentConfig& config,
                      std::span<const LabelSequence> text) {
  return TrainNGram(text, config.num_labels, 2, config.dr_delta);
}

std::vector<NBestList> GenerateNBest(const ExperimentConfig& config,
                                     const TransducerModel& model,
                                     const SequenceScorer& elm,
                                     std::span<const Utterance> data) {
  BeamConfig beam;
  beam.beam_size = config.nbest_beam;
  beam.fusion = FusionMode::kSf;
  beam.lambda1 = config.nbest_lambda;
  beam.n_best_out = config.nbest_size;
  CachingScorer cached(elm);
  std::vector<NBestList> out;
  for (const auto& u : data) {
    NBestList list;
    list.utt_id = u.id;
    for (const auto& h : BeamSearch(model, u.features, &cached, nullptr, beam))
      list.hyps.push_back(
          {h.labels, SeqLogProb(model, u.features, h.labels),
           LmLogProb(cached, h.labels)});
    out.push_back(std::move(list));
  }
  return out;
}

std::vector<NBestList> RescoreNBest(std::span<const NBestList> lists,
                                    const SequenceScorer& lm) {
  std::vector<NBestList> out(lists.begin(), lists.end());
  for (auto& list : out)
    for (auto& h : list.hyps) h.log_p_lm = LmLogProb(lm, h.labels);
  return out;
}

void VerifyNBestCache(std::span<const NBestList> lists,
                      const TransducerModel& model, const SequenceScorer& lm,
                      std::span<const Utterance> data) {
  if (lists.size() != data.size())
    throw ContractViolation("N-best count does not match the data");
  for (std::size_t i = 0; i < lists.size(); ++i) {
    for (const auto& h : lists[i].hyps) {
      double p = SeqLogProb(model, data[i].features, h.labels);
      double l = LmLogProb(lm, h.labels);
      if (p != h.log_p_rnnt || l != h.log_p_lm)
        throw ContractViolation("stale N-best score for " + lists[i].utt_id +
                                " [" + FormatLabels(h.labels) + "]");
    }
  }
}

TransducerModel FineTune(const ExperimentConfig& config,
                         FinetuneCriterion criterion,
                         const TransducerModel& start,
                         std::span<const Utterance> train,
                         const FinetuneInputs& inputs, const Logger& log) {
  TransducerModel model = start;
  if (config.finetune_steps == 0) return model;
  if (train.empty()) throw TrainingError("FineTune: empty training set");
  const std::string name = FinetuneCriterionName(criterion);
  BatchStream batches(static_cast<int>(train.size()),
                      config.finetune_batch_size,
                      DeriveSeed(config.seed, "finetune-" + name));
  std::vector<double> grad(model.NumParams());
  double window = 0.0;
  for (int step = 0; step < config.finetune_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    auto idx = batches.Next();
    for (int i : idx) {
      LossResult r = UtteranceLoss(config, criterion, model, train[i], i,
                                   inputs);
      loss += r.loss;
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += r.gradient[k];
    }
    const double inv = 1.0 / idx.size();
    loss *= inv;
    if (!std::isfinite(loss))
      throw TrainingError(name + " loss diverged at step " +
                          std::to_string(step));
    for (double& g : grad) g *= inv;
    SgdStep(model.params().values(), grad, config.finetune_step_size);
    window += loss;
    if ((step + 1) % 50 == 0 || step + 1 == config.finetune_steps) {
      int span = (step % 50) + 1;
      Say(log, name + " step " + std::to_string(step + 1) + " loss " +
                   Fmt("%.4f", window / span));
      window = 0.0;
    }
  }
  return model;
}

double SequenceLoss(const ExperimentConfig& config,
                    FinetuneCriterion criterion, const TransducerModel& model,
                    std::span<const Utterance> data,
                    const FinetuneInputs& inputs) {
  if (data.empty()) throw ContractViolation("SequenceLoss: empty data");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += UtteranceLoss(config, criterion, model, data[i],
                           static_cast<int>(i), inputs).loss;
  return total / data.size();
}

// ---- decoding ----

std::vector<LabelSequence> DecodeAll(const TransducerModel& model,
                                     std::span<const Utterance> data,
                                     const SequenceScorer* elm,
                                     const IlmEstimate* ilm,
                                     const BeamConfig& beam) {
  std::vector<LabelSequence> out;
  out.reserve(data.size());
  for (const auto& u : data)
    out.push_back(BeamSearch(model, u.features, elm, ilm, beam)[0].labels);
  return out;
}

std::string SweepPoint::Label() const {
  std::string s = FusionModeName(mode);
  if (mode != FusionMode::kNone) s += " l1=" + Fmt("%g", lambda1);
  if (mode == FusionMode::kSfIlm || mode == FusionMode::kSfDr)
    s += " l2=" + Fmt("%g", lambda2);
  if (mode == FusionMode::kSfReduceBlank)
    s += std::string(reduction.kind == BlankReduction::Kind::kExponential
                         ? " gamma="
                         : " rho=") +
         Fmt("%g", reduction.value);
  return s;
}

const SweepPoint& DecodeSweep::Best(FusionMode mode) const {
  const SweepPoint* best = nullptr;
  for (const auto& p : points)
    if (p.mode == mode && (best == nullptr || p.wer < best->wer)) best = &p;
  if (best == nullptr)
    throw ReportError("no decode points for mode " + FusionModeName(mode));
  return *best;
}

bool DecodeSweep::Has(FusionMode mode) const {
  for (const auto& p : points)
    if (p.mode == mode) return true;
  return false;
}

DecodeSweep RunDecodeSweep(const ExperimentConfig& config,
                           const TransducerModel& model,
                           std::span<const Utterance> data,
                           const FusionScorers& scorers,
                           std::span<const FusionMode> modes) {
  std::vector<TransducerGraph> graphs;
  graphs.reserve(data.size());
  std::vector<LabelSequence> refs;
  for (const auto& u : data) {
    graphs.emplace_back(model, u.features);
    refs.push_back(u.labels);
  }
  std::optional<CachingScorer> elm;
  if (scorers.elm) elm.emplace(*scorers.elm);
  auto cached_ilm = [](const IlmEstimate* ilm) -> std::optional<IlmEstimate> {
    if (ilm == nullptr) return std::nullopt;
    return IlmEstimate{ilm->kind,
                       std::make_shared<CachingScorer>(*ilm->scorer)};
  };
  std::optional<IlmEstimate> zero = cached_ilm(scorers.zero_ilm);
  std::optional<IlmEstimate> dr = cached_ilm(scorers.dr_ilm);

  DecodeSweep sweep;
  auto run = [&](SweepPoint p, const IlmEstimate* ilm) {
    BeamConfig beam;
    beam.beam_size = config.beam_size;
    beam.fusion = p.mode;
    beam.lambda1 = p.lambda1;
    beam.lambda2 = p.lambda2;
    beam.blank_reduction = p.reduction;
    std::vector<LabelSequence> hyps;
    for (auto& g : graphs)
      hyps.push_back(
          BeamSearch(g, elm ? &*elm : nullptr, ilm, beam)[0].labels);
    p.wer = WordErrorRate(refs, hyps);
    sweep.points.push_back(p);
  };
  const auto grid = config.LambdaGrid();
  for (FusionMode mode : modes) {
    SweepPoint p;
    p.mode = mode;
    switch (mode) {
      case FusionMode::kNone:
        run(p, nullptr);
        break;
      case FusionMode::kSf:
        for (double l1 : grid) {
          p.lambda1 = l1;
          run(p, nullptr);
        }
        break;
      case FusionMode::kSfIlm:
      case FusionMode::kSfDr: {
        const auto& ilm = mode == FusionMode::kSfIlm ? zero : dr;
        if (!ilm)
          throw ConfigError(FusionModeName(mode) + " needs an ILM estimate");
        for (double l1 : grid)
          for (double l2 : grid) {
            p.lambda1 = l1;
            p.lambda2 = l2;
            run(p, &*ilm);
          }
        break;
      }
      case FusionMode::kSfReduceBlank:
        for (double l1 : grid)
          for (const auto& r : config.BlankReductionGrid()) {
            p.lambda1 = l1;
            p.reduction = r;
            run(p, nullptr);
          }
        break;
    }
  }
  return sweep;
}

// ---- workspace ----

Workspace::Workspace(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

bool Workspace::Exists(const std::string& name) const {
  return std::filesystem::exists(Path(name));
}

void Workspace::Require(const std::string& name,
                        const std::string& producer) const {
  if (!Exists(name))
    throw PipelineOrderError("missing " + Path(name).string() + "; run '" +
                             producer + "' first");
}

void Workspace::SaveConfig(const ExperimentConfig& config) const {
  std::ofstream f(Path("config.txt"));
  f << config.ToText();
  if (!f) throw FormatError("cannot write " + Path("config.txt").string());
}

ExperimentConfig Workspace::LoadConfig() const {
  Require("config.txt", "gen-data");
  return ExperimentConfig::LoadFile(Path("config.txt").string());
}

std::vector<Utterance> Workspace::LoadSplit(const std::string& split) const {
  Require(split + ".txt", "gen-data");
  std::ifstream f(Path(split + ".txt"));
  return ReadDataset(f);
}

std::vector<LabelSequence> Workspace::LoadText() const {
  Require("text.txt", "gen-data");
  std::ifstream f(Path("text.txt"));
  return ReadLmText(f);
}

TransducerModel Workspace::LoadModel(const std::string& name) const {
  Require(name, name == "ce.ckpt" ? "train-ce" : "train-seq");
  return LoadModelFile(Path(name).string());
}

NeuralLM Workspace::LoadElm() const {
  Require("elm.ckpt", "train-lm");
  return LoadNeuralLmFile(Path("elm.ckpt").string());
}

void Workspace::WriteRecordsFile(const std::string& stage,
                                 std::span<const ResultRecord> records) const {
  std::ofstream f(Path(stage + ".records.jsonl"));
  WriteRecords(f, records);
  if (!f) throw FormatError("cannot write records of " + stage);
}

std::string FinetuneCheckpoint(FinetuneCriterion criterion, TrainingLm lm) {
  std::string name = FinetuneCriterionName(criterion);
  if (lm == TrainingLm::kBigram && criterion != FinetuneCriterion::kLfMmi)
    name += "_bigram";
  return name + ".ckpt";
}

// ---- stages ----

namespace {

ResultRecord Rec(const StageContext& ctx, const std::string& id,
                 const std::string& metric, const std::string& split,
                 double value) {
  return {id, ctx.config.Hash(), metric, split, value, ctx.config.seed};
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
  if (!f) throw FormatError("cannot write " + path.string());
}

std::string NBestFile(TrainingLm lm) {
  return lm == TrainingLm::kNeural ? "nbest.txt" : "nbest_bigram.txt";
}

std::vector<NBestList> LoadNBest(const Workspace& w, const std::string& name) {
  w.Require(name, "gen-nbest");
  std::ifstream f(w.Path(name));
  return ReadNBest(f);
}

}  // namespace

void StageGenData(const StageContext& ctx) {
  ctx.config.Validate();
  SyntheticCorpus corpus = GenerateDataset(ctx.config.DatasetConfig());
  const auto& w = ctx.work;
  w.SaveConfig(ctx.config);
  for (auto [name, split] :
       {std::pair{"train.txt", &corpus.train}, std::pair{"dev.txt", &corpus.dev}}) {
    std::ofstream f(w.Path(name));
    WriteDataset(f, *split);
  }
  std::ofstream text(w.Path("text.txt"));
  WriteLmText(text, corpus.text);
  Say(ctx.log, "wrote " + std::to_string(corpus.train.size()) + " train, " +
                   std::to_string(corpus.dev.size()) + " dev utterances and " +
                   std::to_string(corpus.text.size()) + " text sentences");
}

void StageTrainLm(const StageContext& ctx) {
  auto text = ctx.work.LoadText();
  NeuralLM elm = TrainExternalLm(ctx.config, text);
  SaveNeuralLmFile(ctx.work.Path("elm.ckpt").string(), elm);
  auto dev = Transcripts(ctx.work.LoadSplit("dev"));
  Perplexity ppl = ComputePerplexity(elm, dev);
  Say(ctx.log, "elm dev perplexity " + Fmt("%.3f", ppl.value));
  std::vector<ResultRecord> recs{Rec(ctx, "train-lm", "elm_ppl", "dev", ppl.value)};
  ctx.work.WriteRecordsFile("train-lm", recs);
}

void StageTrainCe(const StageContext& ctx) {
  auto train = ctx.work.LoadSplit("train");
  auto dev = ctx.work.LoadSplit("dev");
  TransducerModel model = TrainCe(ctx.config, train, ctx.log);
  SaveModelFile(ctx.work.Path("ce.ckpt").string(), model);
  std::vector<ResultRecord> recs{
      Rec(ctx, "train-ce", "ce_loss", "train", CeLossAndGrad(model, train).loss),
      Rec(ctx, "train-ce", "ce_loss", "dev", CeLossAndGrad(model, dev).loss)};
  ctx.work.WriteRecordsFile("train-ce", recs);
}

void StageGenNBest(const StageContext& ctx) {
  const auto& w = ctx.work;
  TransducerModel ce = w.LoadModel("ce.ckpt");
  NeuralLM elm = w.LoadElm();
  auto train = w.LoadSplit("train");
  auto lists = GenerateNBest(ctx.config, ce, elm, train);
  {
    std::ofstream f(w.Path(NBestFile(TrainingLm::kNeural)));
    WriteNBest(f, lists);
  }
  NGramLM bigram = TrainBigramLm(ctx.config, w.LoadText());
  auto rescored = RescoreNBest(lists, bigram);
  {
    std::ofstream f(w.Path(NBestFile(TrainingLm::kBigram)));
    WriteNBest(f, rescored);
  }
  std::vector<LabelSequence> refs, oracle;
  int with_ref = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    refs.push_back(train[i].labels);
    const LabelSequence* best = &lists[i].hyps[0].labels;
    for (const auto& h : lists[i].hyps) {
      if (EditDistance(h.labels, train[i].labels) <
          EditDistance(*best, train[i].labels))
        best = &h.labels;
      if (h.labels == train[i].labels) ++with_ref;
    }
    oracle.push_back(*best);
  }
  double oracle_wer = WordErrorRate(refs, oracle);
  double coverage = static_cast<double>(with_ref) / train.size();
  Say(ctx.log, "n-best oracle WER " + Fmt("%.2f", oracle_wer) +
                   ", reference coverage " + Fmt("%.3f", coverage));
  std::vector<ResultRecord> recs{
      Rec(ctx, "gen-nbest", "oracle_wer", "train", oracle_wer),
      Rec(ctx, "gen-nbest", "reference_coverage", "train", coverage)};
  w.WriteRecordsFile("gen-nbest", recs);
}

std::string StageTrainSeq(const StageContext& ctx,
                          FinetuneCriterion criterion) {
  const auto& w = ctx.work;
  const TrainingLm lm_kind = ctx.config.TrainingLmKind();
  const std::string out = FinetuneCheckpoint(criterion, lm_kind);
  const std::string name = out.substr(0, out.size() - 5);
  w.Require("ce.ckpt", "train-ce");
  TransducerModel ce = w.LoadModel("ce.ckpt");
  auto train = w.LoadSplit("train");

  std::optional<NeuralLM> elm;
  std::optional<NGramLM> bigram;
  std::vector<NBestList> nbest;
  FinetuneInputs in;
  const bool needs_bigram =
      lm_kind == TrainingLm::kBigram || criterion == FinetuneCriterion::kLfMmi;
  if (needs_bigram) bigram.emplace(TrainBigramLm(ctx.config, w.LoadText()));
  if (lm_kind == TrainingLm::kNeural) {
    elm.emplace(w.LoadElm());
    in.lm = &*elm;
  } else {
    in.lm = &*bigram;
  }
  if (bigram) in.bigram = &*bigram;
  if (criterion == FinetuneCriterion::kMmiNbest ||
      criterion == FinetuneCriterion::kMbrNbest) {
    nbest = LoadNBest(w, NBestFile(lm_kind));
    in.nbest = nbest;
  }
  CachingScorer cached(*in.lm);
  in.lm = &cached;

  double before = SequenceLoss(ctx.config, criterion, ce, train, in);
  TransducerModel tuned = FineTune(ctx.config, criterion, ce, train, in,
                                   ctx.log);
  double after = SequenceLoss(ctx.config, criterion, tuned, train, in);
  SaveModelFile(w.Path(out).string(), tuned);
  Say(ctx.log, name + " train loss " + Fmt("%.4f", before) + " -> " +
                   Fmt("%.4f", after));
  std::vector<ResultRecord> recs{
      Rec(ctx, "train-seq/" + name, "loss_before", "train", before),
      Rec(ctx, "train-seq/" + name, "loss_after", "train", after)};
  w.WriteRecordsFile("train-seq-" + name, recs);
  return out;
}

DecodeSweep StageDecode(const StageContext& ctx,
                        const std::string& model_name) {
  const auto& w = ctx.work;
  TransducerModel model = w.LoadModel(model_name);
  auto train = w.LoadSplit("train");
  auto dev = w.LoadSplit("dev");
  NeuralLM elm = w.LoadElm();
  IlmEstimate zero = ZeroEncoderIlm(model, true);
  IlmEstimate dr = DensityRatioIlm(Transcripts(train), ctx.config.num_labels,
                                   {ctx.config.dr_order, ctx.config.dr_delta});
  auto modes = ctx.config.FusionModes();
  DecodeSweep sweep =
      RunDecodeSweep(ctx.config, model, dev, {&elm, &zero, &dr}, modes);
  const std::string stem = model_name.substr(0, model_name.rfind('.'));
  std::vector<ResultRecord> recs;
  for (const auto& p : sweep.points)
    recs.push_back(Rec(ctx, "decode/" + stem + "/" + p.Label(), "wer", "dev",
                       p.wer));
  w.WriteRecordsFile("decode-" + stem, recs);

  const SweepPoint* best = &sweep.points.front();
  for (const auto& p : sweep.points)
    if (p.wer < best->wer) best = &p;
  BeamConfig beam;
  beam.beam_size = ctx.config.beam_size;
  beam.fusion = best->mode;
  beam.lambda1 = best->lambda1;
  beam.lambda2 = best->lambda2;
  beam.blank_reduction = best->reduction;
  const IlmEstimate* ilm = best->mode == FusionMode::kSfIlm ? &zero
                           : best->mode == FusionMode::kSfDr ? &dr
                                                             : nullptr;
  std::ofstream f(w.Path("decode_" + stem + ".txt"));
  auto hyps = DecodeAll(model, dev, &elm, ilm, beam);
  for (std::size_t i = 0; i < dev.size(); ++i)
    f << "UTT " << dev[i].id << '\t' << EditDistance(dev[i].labels, hyps[i])
      << ' ' << dev[i].labels.size() << '\t' << FormatLabels(hyps[i]) << '\n';
  for (FusionMode m : modes)
    Say(ctx.log, stem + " best " + sweep.Best(m).Label() + " WER " +
                     Fmt("%.2f", sweep.Best(m).wer));
  return sweep;
}

namespace {

struct TableModels {
  std::vector<std::string> names{"CE", "MMI", "MBR"};
  std::vector<std::string> files;
  std::vector<TransducerModel> models;
};

TableModels LoadTableModels(const StageContext& ctx, int how_many) {
  TableModels t;
  t.files = {"ce.ckpt",
             FinetuneCheckpoint(
                 ParseFinetuneCriterion(ctx.config.mmi_criterion),
                 ctx.config.TrainingLmKind()),
             FinetuneCheckpoint(
                 ParseFinetuneCriterion(ctx.config.mbr_criterion),
                 ctx.config.TrainingLmKind())};
  for (int i = 0; i < how_many; ++i) {
    if (!ctx.work.Exists(t.files[i]))
      throw ReportError("missing checkpoint " +
                        ctx.work.Path(t.files[i]).string() + " (" +
                        t.names[i] + ")");
    t.models.push_back(LoadModelFile(ctx.work.Path(t.files[i]).string()));
  }
  return t;
}

}  // namespace

void StageIlmPpl(const StageContext& ctx) {
  const auto& w = ctx.work;
  auto dev = Transcripts(w.LoadSplit("dev"));
  std::vector<ResultRecord> recs;
  TableModels t;
  t.files = {"ce.ckpt",
             FinetuneCheckpoint(ParseFinetuneCriterion(ctx.config.mmi_criterion),
                                ctx.config.TrainingLmKind()),
             FinetuneCheckpoint(ParseFinetuneCriterion(ctx.config.mbr_criterion),
                                ctx.config.TrainingLmKind())};
  w.Require("ce.ckpt", "train-ce");
  for (std::size_t i = 0; i < t.files.size(); ++i) {
    if (!w.Exists(t.files[i])) continue;
    TransducerModel m = w.LoadModel(t.files[i]);
    double renorm = ComputePerplexity(*ZeroEncoderIlm(m, true).scorer, dev).value;
    double raw = ComputePerplexity(*ZeroEncoderIlm(m, false).scorer, dev).value;
    Say(ctx.log, t.names[i] + " zero-encoder ILM PPL renorm " +
                     Fmt("%.3f", renorm) + " raw " + Fmt("%.3f", raw));
    recs.push_back(Rec(ctx, "ilm-ppl/" + t.names[i], "ppl_renorm", "dev", renorm));
    recs.push_back(Rec(ctx, "ilm-ppl/" + t.names[i], "ppl_raw", "dev", raw));
  }
  w.WriteRecordsFile("ilm-ppl", recs);
}

void StageSwapEval(const StageContext& ctx) {
  const auto& w = ctx.work;
  TableModels t = LoadTableModels(ctx, 3);
  auto dev = w.LoadSplit("dev");
  NeuralLM elm = w.LoadElm();
  std::vector<ResultRecord> recs;
  const FusionMode sf[] = {FusionMode::kSf};
  for (int e = 0; e < 3; ++e)
    for (int p = 0; p < 3; ++p) {
      TransducerModel m = SwapComponents(t.models[e], t.models[p]);
      auto sweep = RunDecodeSweep(ctx.config, m, dev, {&elm}, sf);
      double wer = sweep.Best(FusionMode::kSf).wer;
      Say(ctx.log, "encoder " + t.names[e] + " + pred/joint " + t.names[p] +
                       " SF WER " + Fmt("%.2f", wer));
      recs.push_back(Rec(ctx, "swap/enc=" + t.names[e] + "/pj=" + t.names[p],
                         "wer", "dev", wer));
    }
  w.WriteRecordsFile("swap-eval", recs);
}

TableReport BuildTables(const ExperimentConfig& config,
                        const TableInputs& in, const Logger& log) {
  const TransducerModel* models[3] = {in.ce, in.mmi, in.mbr};
  const char* names[3] = {"CE", "MMI", "MBR"};
  for (int i = 0; i < 3; ++i)
    if (models[i] == nullptr)
      throw ReportError(std::string("missing ") + names[i] + " model");
  if (in.elm == nullptr) throw ReportError("missing external LM");
  TableReport rep;
  auto rec = [&](const std::string& id, const std::string& metric,
                 double v) {
    rep.records.push_back({id, config.Hash(), metric, "dev", v, config.seed});
  };
  auto dev_text = Transcripts(in.dev);
  IlmEstimate dr = DensityRatioIlm(Transcripts(in.train), config.num_labels,
                                   {config.dr_order, config.dr_delta});
  std::vector<IlmEstimate> zero;
  for (auto* m : models) zero.push_back(ZeroEncoderIlm(*m, true));

  std::ostringstream os;
  auto modes = config.FusionModes();
  // T1 / T2
  std::vector<DecodeSweep> sweeps;
  for (int i = 0; i < 3; ++i) {
    sweeps.push_back(RunDecodeSweep(config, *models[i], in.dev,
                                    {in.elm, &zero[i], &dr}, modes));
    for (const auto& p : sweeps.back().points)
      rec(std::string("tables/") + names[i] + "/" + p.Label(), "wer", p.wer);
    Say(log, std::string("decoded ") + names[i]);
  }
  const bool full = config.context_size == 0;
  os << (full ? "T1" : "T2") << ": WER [%] on dev, "
     << (full ? "full-context" : "context-1") << " transducer\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %8s %8s %8s\n", "recognition",
                names[0], names[1], names[2]);
  os << line;
  for (FusionMode m : modes) {
    std::snprintf(line, sizeof(line), "%-18s", FusionModeName(m).c_str());
    os << line;
    for (int i = 0; i < 3; ++i) {
      double wer = sweeps[i].Best(m).wer;
      rec(std::string("tables/T12/") + names[i] + "/" + FusionModeName(m),
          "best_wer", wer);
      std::snprintf(line, sizeof(line), " %8.2f", wer);
      os << line;
    }
    os << '\n';
  }
  os << "best points:\n";
  for (int i = 0; i < 3; ++i)
    for (FusionMode m : modes)
      os << "  " << names[i] << ": " << sweeps[i].Best(m).Label() << '\n';
  auto best_or_nan = [&](int i, FusionMode m) {
    return sweeps[i].Has(m) ? sweeps[i].Best(m).wer
                            : std::numeric_limits<double>::quiet_NaN();
  };
  rep.ce_sf = best_or_nan(0, FusionMode::kSf);
  rep.ce_sf_ilm = best_or_nan(0, FusionMode::kSfIlm);
  rep.mmi_sf = best_or_nan(1, FusionMode::kSf);
  rep.mmi_sf_ilm = best_or_nan(1, FusionMode::kSfIlm);
  rep.mbr_sf = best_or_nan(2, FusionMode::kSf);
  rep.mbr_sf_ilm = best_or_nan(2, FusionMode::kSfIlm);

  // T3
  os << "\nT3: zero-encoder ILM perplexity on dev transcripts, and WER of the "
        "CE model with each ILM subtracted\n";
  std::snprintf(line, sizeof(line), "%-10s %12s %12s %10s\n", "ILM from",
                "PPL renorm", "PPL raw", "WER CE");
  os << line;
  const FusionMode ilm_mode[] = {FusionMode::kSfIlm};
  for (int i = 0; i < 3; ++i) {
    rep.ppl_renorm[i] = ComputePerplexity(*zero[i].scorer, dev_text).value;
    rep.ppl_raw[i] =
        ComputePerplexity(*ZeroEncoderIlm(*models[i], false).scorer, dev_text)
            .value;
    rep.blank_prob[i] = MeanBlankProbability(*models[i], in.dev);
    auto sweep = RunDecodeSweep(config, *in.ce, in.dev,
                                {in.elm, &zero[i], nullptr}, ilm_mode);
    double wer = sweep.Best(FusionMode::kSfIlm).wer;
    std::snprintf(line, sizeof(line), "%-10s %12.3f %12.3f %10.2f\n", names[i],
                  rep.ppl_renorm[i], rep.ppl_raw[i], wer);
    os << line;
    std::string id = std::string("tables/T3/") + names[i];
    rec(id, "ppl_renorm", rep.ppl_renorm[i]);
    rec(id, "ppl_raw", rep.ppl_raw[i]);
    rec(id, "ce_wer_with_ilm", wer);
    rec(id, "blank_prob", rep.blank_prob[i]);
  }
  os << "mean blank probability on dev references:";
  for (int i = 0; i < 3; ++i)
    os << ' ' << names[i] << ' ' << Fmt("%.4f", rep.blank_prob[i]);
  os << '\n';

  // T4
  os << "\nT4: WER [%] with SF, encoder x prediction+joint network\n";
  std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s\n", "enc \\ pj",
                names[0], names[1], names[2]);
  os << line;
  const FusionMode sf[] = {FusionMode::kSf};
  for (int e = 0; e < 3; ++e) {
    std::snprintf(line, sizeof(line), "%-10s", names[e]);
    os << line;
    for (int p = 0; p < 3; ++p) {
      TransducerModel m = SwapComponents(*models[e], *models[p]);
      double wer = RunDecodeSweep(config, m, in.dev, {in.elm}, sf)
                       .Best(FusionMode::kSf)
                       .wer;
      rec(std::string("tables/T4/enc=") + names[e] + "/pj=" + names[p], "wer",
          wer);
      std::snprintf(line, sizeof(line), " %8.2f", wer);
      os << line;
    }
    os << '\n';
  }
  rep.text = os.str();
  return rep;
}

std::string StageTables(const StageContext& ctx) {
  const auto& w = ctx.work;
  TableModels t = LoadTableModels(ctx, 3);
  auto train = w.LoadSplit("train");
  auto dev = w.LoadSplit("dev");
  if (!w.Exists("elm.ckpt")) throw ReportError("missing checkpoint elm.ckpt");
  NeuralLM elm = w.LoadElm();
  TableInputs in{&t.models[0], &t.models[1], &t.models[2], train, dev, &elm};
  TableReport rep = BuildTables(ctx.config, in, ctx.log);
  WriteText(w.Path("tables.txt"), rep.text);
  w.WriteRecordsFile("tables", rep.records);
  return rep.text;
}

void StageTableModel(const StageContext& ctx) {
  const int V = 2, max_len = 3;
  std::mt19937_64 rng(DeriveSeed(ctx.config.seed, "table-model"));
  std::gamma_distribution<double> gamma(1.0, 1.0);
  TableModel model;
  model.space = AllLabelSequences(V, max_len);
  SequenceDistribution empirical;
  double total = 0.0;
  std::vector<double> pr;
  for (std::size_t i = 0; i < model.space.size(); ++i) total += pr.emplace_back(gamma(rng));
  for (std::size_t i = 0; i < model.space.size(); ++i) {
    pr[i] /= total;
    empirical.push_back({model.space[i], pr[i]});
  }
  NGramLM lm = TrainNGram(model.space, V, 2, 1.0);
  std::vector<double> lm_scores;
  for (const auto& a : model.space) lm_scores.push_back(LmLogProb(lm, a));
  model.logits.assign(model.space.size(), 0.0);
  SeqScales scales = ctx.config.Scales();
  PosteriorTable target = MmiOptimumTarget(empirical, lm, scales);
  std::vector<double> q;
  for (const auto& a : model.space) q.push_back(target[a]);
  auto result = TrainTableModel(model, lm_scores, scales, TableCriterion::kMmi,
                                pr, ctx.config.table_steps,
                                ctx.config.table_step_size);
  double tv = TotalVariation(result.model.Posterior(), q);
  Say(ctx.log, "table model: total variation to the MMI optimum " +
                   Fmt("%.3g", tv) + " after " +
                   std::to_string(result.steps_run) + " steps");
  std::vector<ResultRecord> recs{
      Rec(ctx, "table-model/mmi_exact", "tv_to_optimum", "toy", tv),
      Rec(ctx, "table-model/mmi_exact", "final_loss", "toy", result.final_loss)};
  ctx.work.WriteRecordsFile("table-model", recs);
}

void RunPipeline(const StageContext& ctx) {
  const auto& w = ctx.work;
  std::vector<std::string> stages;
  Say(ctx.log, "== gen-data");
  StageGenData(ctx);
  Say(ctx.log, "== train-lm");
  StageTrainLm(ctx);
  stages.push_back("train-lm");
  Say(ctx.log, "== train-ce");
  StageTrainCe(ctx);
  stages.push_back("train-ce");
  Say(ctx.log, "== gen-nbest");
  StageGenNBest(ctx);
  stages.push_back("gen-nbest");
  std::vector<FinetuneCriterion> crits{
      ParseFinetuneCriterion(ctx.config.mmi_criterion),
      ParseFinetuneCriterion(ctx.config.mbr_criterion)};
  for (auto c : crits) {
    Say(ctx.log, "== train-seq " + FinetuneCriterionName(c));
    std::string ckpt = StageTrainSeq(ctx, c);
    stages.push_back("train-seq-" + ckpt.substr(0, ckpt.size() - 5));
  }
  if (ctx.config.table_model) {
    Say(ctx.log, "== table-model");
    StageTableModel(ctx);
    stages.push_back("table-model");
  }
  Say(ctx.log, "== tables");
  std::string text = StageTables(ctx);
  stages.push_back("tables");
  Say(ctx.log, text);
  std::ofstream all(w.Path("records.jsonl"));
  for (const auto& s : stages) {
    std::ifstream f(w.Path(s + ".records.jsonl"));
    all << f.rdbuf();
  }
}

}  // namespace tslab
