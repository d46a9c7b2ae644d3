// core/include/tslab/pipeline.h

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

#ifndef TSLAB_PIPELINE_H_
#define TSLAB_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tslab/dataset.h"
#include "tslab/decoder.h"
#include "tslab/experiment_config.h"
#include "tslab/ilm.h"
#include "tslab/lm.h"
#include "tslab/model.h"
#include "tslab/seqtrain.h"

namespace tslab {

struct ResultRecord {
  std::string experiment_id;
  unsigned long long config_hash = 0;
  std::string metric;
  std::string split;
  double value = 0.0;
  std::uint64_t seed = 0;
};

// One JSON object per line.
void WriteRecords(std::ostream& os, std::span<const ResultRecord> records);
std::vector<ResultRecord> ReadRecords(std::istream& is);

// Progress messages; silent when empty.
using Logger = std::function<void(const std::string&)>;

// ---- training ----

// Minibatch Adam on the CE criterion, batches reshuffled every epoch.
TransducerModel TrainCe(const ExperimentConfig& config,
                        std::span<const Utterance> train,
                        const Logger& log = {});

NeuralLM TrainExternalLm(const ExperimentConfig& config,
                         std::span<const LabelSequence> text);

// Bigram training LM for sequence training and LF-MMI.
NGramLM TrainBigramLm(const ExperimentConfig& config,
                      std::span<const LabelSequence> text);

// Shallow-fusion N-best lists of the given model with LM scale nbest_lambda.
// The LM column holds the ELM score of each hypothesis.
std::vector<NBestList> GenerateNBest(const ExperimentConfig& config,
                                     const TransducerModel& model,
                                     const SequenceScorer& elm,
                                     std::span<const Utterance> data);

// Same hypotheses with the LM column recomputed by another LM.
std::vector<NBestList> RescoreNBest(std::span<const NBestList> lists,
                                    const SequenceScorer& lm);

// Cached scores must equal a fresh evaluation; throws ContractViolation
// naming the first mismatch.
void VerifyNBestCache(std::span<const NBestList> lists,
                      const TransducerModel& model, const SequenceScorer& lm,
                      std::span<const Utterance> data);

struct FinetuneInputs {
  const SequenceScorer* lm = nullptr;     // P_LM of P_seq
  const NGramLM* bigram = nullptr;        // LF-MMI
  std::span<const NBestList> nbest;       // N-best criteria, same order as data
};

// Minibatch SGD with a fixed step size. N-best lists stay fixed.
TransducerModel FineTune(const ExperimentConfig& config,
                         FinetuneCriterion criterion,
                         const TransducerModel& start,
                         std::span<const Utterance> train,
                         const FinetuneInputs& inputs, const Logger& log = {});

// Mean loss of a criterion over a data set (for reporting).
double SequenceLoss(const ExperimentConfig& config,
                    FinetuneCriterion criterion, const TransducerModel& model,
                    std::span<const Utterance> data,
                    const FinetuneInputs& inputs);

// ---- decoding ----

std::vector<LabelSequence> DecodeAll(const TransducerModel& model,
                                     std::span<const Utterance> data,
                                     const SequenceScorer* elm,
                                     const IlmEstimate* ilm,
                                     const BeamConfig& beam);

struct SweepPoint {
  FusionMode mode = FusionMode::kNone;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  BlankReduction reduction;
  double wer = 0.0;

  std::string Label() const;
};

struct DecodeSweep {
  std::vector<SweepPoint> points;

  // Lowest WER of the mode; earliest grid point on ties.
  const SweepPoint& Best(FusionMode mode) const;
  bool Has(FusionMode mode) const;
};

struct FusionScorers {
  const SequenceScorer* elm = nullptr;
  const IlmEstimate* zero_ilm = nullptr;
  const IlmEstimate* dr_ilm = nullptr;
};

// Grid search per fusion mode on one data set: none (one point), sf
// (lambda1), sf_ilm / sf_dr (lambda1 x lambda2), sf_reduce_blank (lambda1 x
// reduction grid).
DecodeSweep RunDecodeSweep(const ExperimentConfig& config,
                           const TransducerModel& model,
                           std::span<const Utterance> data,
                           const FusionScorers& scorers,
                           std::span<const FusionMode> modes);

// ---- workspace stages ----

// Files of one experiment directory.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path Path(const std::string& name) const {
    return dir_ / name;
  }
  bool Exists(const std::string& name) const;

  // Throws PipelineOrderError naming the missing file and the stage that
  // produces it.
  void Require(const std::string& name, const std::string& producer) const;

  void SaveConfig(const ExperimentConfig& config) const;
  ExperimentConfig LoadConfig() const;

  std::vector<Utterance> LoadSplit(const std::string& split) const;
  std::vector<LabelSequence> LoadText() const;
  TransducerModel LoadModel(const std::string& name) const;
  NeuralLM LoadElm() const;

  void WriteRecordsFile(const std::string& stage,
                        std::span<const ResultRecord> records) const;

 private:
  std::filesystem::path dir_;
};

// Checkpoint file of a fine-tuned model, e.g. "mmi_nbest.ckpt" or
// "mmi_nbest_bigram.ckpt".
std::string FinetuneCheckpoint(FinetuneCriterion criterion, TrainingLm lm);

struct StageContext {
  ExperimentConfig config;
  Workspace work;
  Logger log;
};

void StageGenData(const StageContext& ctx);
void StageTrainLm(const StageContext& ctx);
void StageTrainCe(const StageContext& ctx);
void StageGenNBest(const StageContext& ctx);
// Returns the checkpoint name written.
std::string StageTrainSeq(const StageContext& ctx, FinetuneCriterion criterion);
// Decode sweep of one checkpoint on dev; writes decode_<model>.txt with the
// best sf point.
DecodeSweep StageDecode(const StageContext& ctx, const std::string& model_name);
void StageIlmPpl(const StageContext& ctx);
void StageSwapEval(const StageContext& ctx);
// Writes tables.txt and returns its text.
std::string StageTables(const StageContext& ctx);
// Eq. 7 style convergence of a free table model on a seeded toy problem.
void StageTableModel(const StageContext& ctx);

// gen-data, train-lm, train-ce, gen-nbest, train-seq (MMI and MBR columns),
// tables. Writes records.jsonl with every stage's records.
void RunPipeline(const StageContext& ctx);

// ---- reports ----

struct TableReport {
  std::string text;
  std::vector<ResultRecord> records;
  // Numbers used by the directional checks.
  double ce_sf = 0.0, ce_sf_ilm = 0.0;
  double mmi_sf = 0.0, mmi_sf_ilm = 0.0;
  double mbr_sf = 0.0, mbr_sf_ilm = 0.0;
  double ppl_renorm[3] = {0, 0, 0};  // ce, mmi, mbr
  double ppl_raw[3] = {0, 0, 0};
  double blank_prob[3] = {0, 0, 0};
};

struct TableInputs {
  const TransducerModel* ce = nullptr;
  const TransducerModel* mmi = nullptr;
  const TransducerModel* mbr = nullptr;
  std::span<const Utterance> train;
  std::span<const Utterance> dev;
  const SequenceScorer* elm = nullptr;
};

// All four table analogs. ReportError if a model is missing.
TableReport BuildTables(const ExperimentConfig& config,
                        const TableInputs& inputs, const Logger& log = {});

}  // namespace tslab

#endif  // TSLAB_PIPELINE_H_
