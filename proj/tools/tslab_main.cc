// tools/tslab_main.cc

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

// Experiment driver. Every configuration key is also a flag of the same
// name; values resolve as defaults < saved workspace config < --config file
// < flags.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tslab/error.h"
#include "tslab/experiment_config.h"
#include "tslab/oracle_suite.h"
#include "tslab/pipeline.h"

namespace {

using tslab::ExperimentConfig;

struct Options {
  std::string work_dir = "work";
  std::string config_file;
  std::string model = "ce.ckpt";
  std::uint64_t oracle_seed = 1;
  bool quiet = false;
  std::map<std::string, std::optional<std::string>> keys;
};

// fresh: the stage creates the workspace and ignores any saved config.
ExperimentConfig ResolveConfig(const Options& opt, bool fresh) {
  ExperimentConfig config;
  tslab::Workspace work(opt.work_dir);
  if (!fresh && work.Exists("config.txt")) config = work.LoadConfig();
  if (!opt.config_file.empty()) {
    std::ifstream f(opt.config_file);
    if (!f) throw tslab::ConfigError("cannot read " + opt.config_file);
    std::stringstream text;
    text << f.rdbuf();
    config.Apply(text.str());
  }
  for (const auto& [name, value] : opt.keys)
    if (value) config.Set(name, *value);
  config.Validate();
  return config;
}

int RunOracles(const Options& opt) {
  auto checks = tslab::RunOracleSuite(opt.oracle_seed);
  int failed = 0;
  for (const auto& c : checks) {
    std::printf("%s  %-55s  %.3g", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.metric);
    if (c.tolerance > 0) std::printf(" (tol %.0e)", c.tolerance);
    if (!c.detail.empty()) std::printf("  %s", c.detail.c_str());
    std::printf("\n");
    if (!c.passed) ++failed;
  }
  std::printf("%d of %zu checks failed\n", failed, checks.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tslab: transducer sequence-training experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--work_dir", opt.work_dir, "experiment directory")
      ->capture_default_str();
  app.add_option("--config", opt.config_file, "key = value config file");
  app.add_flag("--quiet", opt.quiet, "suppress progress messages");
  for (const auto& key : ExperimentConfig::Keys()) {
    auto& slot = opt.keys[key.name];
    app.add_option_function<std::string>(
        "--" + key.name, [&slot](const std::string& v) { slot = v; },
        key.help + " (default " + key.get(ExperimentConfig{}) + ")");
  }

  auto* gen_data = app.add_subcommand("gen-data", "generate the synthetic corpus");
  auto* train_lm = app.add_subcommand("train-lm", "train the external LM");
  auto* train_ce = app.add_subcommand("train-ce", "CE training");
  auto* gen_nbest = app.add_subcommand("gen-nbest", "N-best lists from the CE model");
  auto* train_seq = app.add_subcommand("train-seq",
                                       "fine-tune with finetune_criterion");
  auto* decode = app.add_subcommand("decode", "dev decoding sweep of one checkpoint");
  decode->add_option("--model", opt.model, "checkpoint name in work_dir")
      ->capture_default_str();
  auto* ilm_ppl = app.add_subcommand("ilm-ppl", "zero-encoder ILM perplexities");
  auto* swap_eval = app.add_subcommand("swap-eval", "component swap WER grid");
  auto* tables = app.add_subcommand("tables", "all four table analogs");
  auto* oracle = app.add_subcommand("oracle-check",
                                    "brute-force and gradient oracle suite");
  oracle->add_option("--oracle_seed", opt.oracle_seed, "seed of the suite")
      ->capture_default_str();
  auto* table_model = app.add_subcommand("table-model",
                                         "free table model MMI convergence");
  auto* pipeline = app.add_subcommand("pipeline", "every stage in order");

  CLI11_PARSE(app, argc, argv);

  try {
    if (oracle->parsed()) return RunOracles(opt);
    const bool fresh = gen_data->parsed() || pipeline->parsed();
    tslab::StageContext ctx{ResolveConfig(opt, fresh),
                            tslab::Workspace(opt.work_dir), {}};
    if (!opt.quiet)
      ctx.log = [](const std::string& m) { std::cerr << m << '\n'; };
    if (gen_data->parsed()) tslab::StageGenData(ctx);
    if (train_lm->parsed()) tslab::StageTrainLm(ctx);
    if (train_ce->parsed()) tslab::StageTrainCe(ctx);
    if (gen_nbest->parsed()) tslab::StageGenNBest(ctx);
    if (train_seq->parsed())
      std::cout << tslab::StageTrainSeq(
                       ctx, tslab::ParseFinetuneCriterion(
                                ctx.config.finetune_criterion))
                << '\n';
    if (decode->parsed()) tslab::StageDecode(ctx, opt.model);
    if (ilm_ppl->parsed()) tslab::StageIlmPpl(ctx);
    if (swap_eval->parsed()) tslab::StageSwapEval(ctx);
    if (tables->parsed()) std::cout << tslab::StageTables(ctx);
    if (table_model->parsed()) tslab::StageTableModel(ctx);
    if (pipeline->parsed()) tslab::RunPipeline(ctx);
  } catch (const tslab::Error& e) {
    std::cerr << "tslab: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
