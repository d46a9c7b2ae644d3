// tests/unit/test_harness.cc

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <doctest.h>

#include "test_support.h"
#include "tslab/checkpoint.h"
#include "tslab/dataset.h"
#include "tslab/error.h"
#include "tslab/experiment_config.h"
#include "tslab/lattice.h"
#include "tslab/pipeline.h"

using namespace tslab;
namespace fs = std::filesystem;
using tslab::testing::RandomModel;

namespace {

fs::path FreshDir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("tslab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig TinyConfig() {
  ExperimentConfig c;
  c.num_labels = 3;
  c.max_label_len = 3;
  c.num_train = 12;
  c.num_dev = 6;
  c.num_text = 40;
  c.enc_hidden = 6;
  c.enc_dim = 4;
  c.embed_dim = 3;
  c.pred_dim = 4;
  c.joint_hidden = 4;
  c.lm_embed_dim = 3;
  c.lm_hidden_dim = 4;
  c.lm_steps = 3;
  c.ce_epochs = 1;
  c.finetune_steps = 2;
  c.lambda_grid = "0,0.3";
  c.blank_reduction_grid = "0.5,1";
  c.beam_size = 2;
  c.nbest_beam = 3;
  c.nbest_size = 2;
  return c;
}

bool SameBits(const TransducerModel& a, const TransducerModel& b) {
  auto x = a.Flatten(), y = b.Flatten();
  return a.config() == b.config() && x.size() == y.size() &&
         std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("noise-free dataset with one frame per label") {
  SyntheticDatasetConfig c;
  c.noise_stddev = 0.0;
  c.max_frames_per_label = 1;
  c.num_train = 30;
  c.num_dev = 5;
  c.num_text = 5;
  auto corpus = GenerateDataset(c);
  for (const auto& u : corpus.train) {
    REQUIRE(u.NumFrames() == static_cast<int>(u.labels.size()));
    for (int t = 0; t < u.NumFrames(); ++t)
      CHECK(u.features.row(t) == corpus.prototypes.row(u.labels[t] - 1));
  }
}

TEST_CASE("dataset generation is deterministic and well formed") {
  SyntheticDatasetConfig c;
  c.num_train = 40;
  c.num_dev = 10;
  c.num_text = 50;
  auto a = GenerateDataset(c), b = GenerateDataset(c);
  REQUIRE(a.train.size() == 40);
  REQUIRE(a.dev.size() == 10);
  CHECK(a.text == b.text);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].labels == b.train[i].labels);
    CHECK(a.train[i].features == b.train[i].features);
    CHECK(a.train[i].labels.size() <= static_cast<std::size_t>(a.train[i].NumFrames()));
    CHECK(a.train[i].NumFrames() <=
          c.max_frames_per_label * static_cast<int>(a.train[i].labels.size()));
  }
  c.seed = 2;
  CHECK(GenerateDataset(c).text != a.text);
  c.num_labels = 0;
  CHECK_THROWS_AS(GenerateDataset(c), ConfigError);
  c.num_labels = 6;
  c.max_frames_per_label = 0;
  CHECK_THROWS_AS(GenerateDataset(c), ConfigError);
  c.max_frames_per_label = 2;
  c.noise_stddev = -1.0;
  CHECK_THROWS_AS(GenerateDataset(c), ConfigError);
}

TEST_CASE("sampled label frequencies follow the prior") {
  for (int order : {1, 2, 3}) {
    SyntheticDatasetConfig c;
    c.num_labels = 4;
    c.prior_order = order;
    c.max_label_len = 4;
    c.num_train = 0;
    c.num_dev = 0;
    c.num_text = 10000;
    c.seed = 17 + order;
    auto corpus = GenerateDataset(c);
    // Exact unigram frequencies of the length-truncated prior.
    std::vector<double> expected(5, 0.0);
    double mass = 0.0, mean_len = 0.0;
    for (const auto& a : AllLabelSequences(4, 4)) {
      double p = corpus.prior.SequenceProb(a);
      mass += p;
      mean_len += p * a.size();
      for (Label l : a) expected[l] += p;
    }
    for (int k = 1; k <= 4; ++k) expected[k] /= mean_len;
    const double n = static_cast<double>(corpus.text.size());
    mean_len /= mass;
    for (int k = 1; k <= 4; ++k) {
      double count = 0.0, total = 0.0, sq = 0.0;
      for (const auto& a : corpus.text) {
        double ck = static_cast<double>(std::count(a.begin(), a.end(), k));
        count += ck;
        total += a.size();
        double d = ck - expected[k] * a.size();
        sq += d * d;
      }
      double se = std::sqrt(sq / n) / std::sqrt(n) / mean_len;
      INFO("order " << order << " label " << k);
      CHECK(std::abs(count / total - expected[k]) < 3.0 * se);
    }
  }
}

TEST_CASE("dataset file format") {
  SyntheticDatasetConfig c;
  c.num_train = 5;
  c.num_dev = 0;
  c.num_text = 0;
  auto corpus = GenerateDataset(c);
  std::stringstream ss;
  WriteDataset(ss, corpus.train);
  std::string text = ss.str();
  CHECK(text.rfind("UTT ", 0) == 0);
  CHECK(text.find(" T=") != std::string::npos);
  auto back = ReadDataset(ss);
  REQUIRE(back.size() == corpus.train.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == corpus.train[i].id);
    CHECK(back[i].labels == corpus.train[i].labels);
    CHECK(back[i].features == corpus.train[i].features);
  }
  std::istringstream bad("UTT x T=2 S=1\n0 0 0 0\n");
  CHECK_THROWS_AS(ReadDataset(bad), FormatError);
}

TEST_CASE("experiment configuration") {
  ExperimentConfig c;
  c.Apply("# comment\nseed = 9\n\nbeta=0.7  # trailing\nfusion_modes = none,sf\n");
  CHECK(c.seed == 9);
  CHECK(c.beta == 0.7);
  CHECK(c.FusionModes() == std::vector<FusionMode>{FusionMode::kNone, FusionMode::kSf});
  // Later sources override earlier ones.
  c.Set("beta", "0.2");
  CHECK(c.beta == 0.2);
  CHECK(c.Get("beta") == "0.2");

  auto round = ExperimentConfig::FromText(c.ToText());
  CHECK(round.ToText() == c.ToText());
  CHECK(round.Hash() == c.Hash());
  round.Set("alpha", "0.5");
  CHECK(round.Hash() != c.Hash());

  CHECK_THROWS_AS(c.Set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(c.Set("num_train", "many"), ConfigError);
  CHECK_THROWS_AS(c.Apply("seed 3\n"), ConfigError);
  ExperimentConfig bad;
  bad.finetune_criterion = "ctc";
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  CHECK(ParseDoubleList("0, 0.5,1") == std::vector<double>{0.0, 0.5, 1.0});
  for (const auto& key : ExperimentConfig::Keys())
    CHECK_NOTHROW(c.Set(key.name, c.Get(key.name)));
}

TEST_CASE("checkpoint round trip") {
  for (auto cell : {PredictionCell::kElman, PredictionCell::kLstm}) {
    auto m = RandomModel(3, 0, 501, cell);
    std::stringstream ss;
    SaveModel(ss, m);
    auto back = LoadModel(ss);
    CHECK(SameBits(m, back));
    Matrix X = RandomFeatures(4, 2, 502);
    CHECK(SeqLogProb(m, X, {1, 3}) == SeqLogProb(back, X, {1, 3}));
  }
  std::istringstream junk("NOTACKPT");
  CHECK_THROWS_AS(LoadModel(junk), FormatError);
  std::string bytes;
  {
    std::stringstream ss;
    SaveModel(ss, RandomModel(2, 1, 503));
    bytes = ss.str();
  }
  std::istringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(LoadModel(cut), FormatError);
}

TEST_CASE("result records round trip") {
  std::vector<ResultRecord> recs{{"tables/CE/sf", 0x1234abcdULL, "wer", "dev", 12.5 / 3.0, 3},
                                 {"lm", ~0ULL, "ppl", "dev", 1e-300, 0}};
  std::stringstream ss;
  WriteRecords(ss, recs);
  auto back = ReadRecords(ss);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].experiment_id == recs[i].experiment_id);
    CHECK(back[i].config_hash == recs[i].config_hash);
    CHECK(back[i].metric == recs[i].metric);
    CHECK(back[i].split == recs[i].split);
    CHECK(back[i].value == recs[i].value);
    CHECK(back[i].seed == recs[i].seed);
  }
}

TEST_CASE("stages enforce pipeline order") {
  StageContext ctx{TinyConfig(), Workspace(FreshDir("order")), {}};
  CHECK_THROWS_AS(StageTrainSeq(ctx, FinetuneCriterion::kMmiNbest), PipelineOrderError);
  CHECK_THROWS_AS(StageTrainCe(ctx), PipelineOrderError);
  CHECK_THROWS_AS(StageGenNBest(ctx), PipelineOrderError);
}

TEST_CASE("zero fine-tune steps keep the CE checkpoint") {
  ExperimentConfig c = TinyConfig();
  c.finetune_steps = 0;
  StageContext ctx{c, Workspace(FreshDir("zero_steps")), {}};
  StageGenData(ctx);
  StageTrainLm(ctx);
  StageTrainCe(ctx);
  StageGenNBest(ctx);
  std::string name = StageTrainSeq(ctx, FinetuneCriterion::kMmiNbest);
  CHECK(name == "mmi_nbest.ckpt");
  CHECK(Slurp(ctx.work.Path(name)) == Slurp(ctx.work.Path("ce.ckpt")));

  auto start = RandomModel(2, 0, 504);
  CHECK(SameBits(FineTune(c, FinetuneCriterion::kMbrNbest, start, {}, {}), start));
}

TEST_CASE("report tables") {
  ExperimentConfig c = TinyConfig();
  c.num_labels = 2;
  c.feature_dim = 2;
  c.num_dev = 4;
  c.num_train = 4;
  auto corpus = GenerateDataset(c.DatasetConfig());
  auto ce = TransducerModel::Initialize(c.TransducerConfig(), 1, 0.5);
  auto mmi = TransducerModel::Initialize(c.TransducerConfig(), 2, 0.5);
  auto mbr = TransducerModel::Initialize(c.TransducerConfig(), 3, 0.5);
  NGramLM elm = TrainNGram(corpus.text, 2, 2, 0.1);
  TableInputs in{&ce, &mmi, nullptr, corpus.train, corpus.dev, &elm};
  CHECK_THROWS_AS(BuildTables(c, in), ReportError);
  in.mbr = &mbr;
  auto rep = BuildTables(c, in);
  std::map<std::string, double> wer;
  for (const auto& r : rep.records) wer[r.experiment_id + "#" + r.metric] = r.value;
  for (std::string n : {"CE", "MMI", "MBR"}) {
    CHECK(wer.at("tables/T4/enc=" + n + "/pj=" + n + "#wer") ==
          wer.at("tables/T12/" + n + "/sf#best_wer"));
    CHECK(std::isfinite(wer.at("tables/T3/" + n + "#ppl_renorm")));
    CHECK(std::isfinite(wer.at("tables/T3/" + n + "#ppl_raw")));
  }
  CHECK(rep.text.find("T3") != std::string::npos);
  auto again = BuildTables(c, in);
  CHECK(again.text == rep.text);
}
