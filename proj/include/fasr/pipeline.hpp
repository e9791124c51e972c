// Copyright 2026 The fasr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Experiment pipeline over one output directory:
//
//   data/seed/<lang>/{train,valid}/   synthetic seed-language corpora
//   data/target/{train,valid,test}/   target-language corpora
//   data/target/lm_text.txt           LM-only target text
//   prep/                             seed and target vocabularies, feature stats
//   seed/                             multilingual seed model
//   lm/                               target-language RNNLM
//   adapt-<fusion>/                   adapted model (deep: stage1.ckpt as well)
//   decode-<fusion>/nbest.jsonl       n-best lists of the target test set
//   score-<fusion>/report.json        WER/CER report
//
// Every stage writes config.json (the resolved configuration) and run.json
// (stage, seeds and input paths) into its directory.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fasr/config.hpp"
#include "fasr/score.hpp"

namespace fasr {

enum class Stage { kGenData, kPrep, kTrainSeed, kTrainLm, kAdapt, kDecode, kScore, kAll };

std::string_view to_string(Stage stage);
// Throws ConfigError.
Stage parse_stage(std::string_view text);

struct PipelineOptions {
  std::filesystem::path out = "fasr_out";
  Stage stage = Stage::kAll;
  std::optional<std::filesystem::path> lm;         // --lm
  std::optional<std::filesystem::path> seed_ckpt;  // --seed-ckpt
  std::ostream* log = nullptr;                     // progress lines
};

struct Workspace {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path seed_corpus(const std::string& language, const std::string& split) const;
  std::filesystem::path target_corpus(const std::string& split) const;
  std::filesystem::path lm_text() const { return data() / "target" / "lm_text.txt"; }
  std::filesystem::path prep() const { return root / "prep"; }
  std::filesystem::path seed_vocab() const { return prep() / "seed_vocab.txt"; }
  std::filesystem::path target_vocab() const { return prep() / "vocab.txt"; }
  std::filesystem::path stats() const { return prep() / "stats.json"; }
  std::filesystem::path seed_dir() const { return root / "seed"; }
  std::filesystem::path seed_model() const { return seed_dir() / "model.ckpt"; }
  std::filesystem::path lm_dir() const { return root / "lm"; }
  std::filesystem::path lm_model() const { return lm_dir() / "lm.ckpt"; }
  std::filesystem::path adapt_dir(FusionMode mode) const;
  std::filesystem::path adapted_model(FusionMode mode) const { return adapt_dir(mode) / "model.ckpt"; }
  std::filesystem::path decode_dir(FusionMode mode) const;
  std::filesystem::path nbest(FusionMode mode) const { return decode_dir(mode) / "nbest.jsonl"; }
  std::filesystem::path score_dir(FusionMode mode) const;
  std::filesystem::path report(FusionMode mode) const { return score_dir(mode) / "report.json"; }
};

void gen_data(const ExperimentConfig& config, const PipelineOptions& options);
void prep(const ExperimentConfig& config, const PipelineOptions& options);
void train_seed(const ExperimentConfig& config, const PipelineOptions& options);
void train_lm_stage(const ExperimentConfig& config, const PipelineOptions& options);
// Rejects cold/deep/shallow without options.lm before loading anything.
void adapt_stage(const ExperimentConfig& config, const PipelineOptions& options);
void decode_stage(const ExperimentConfig& config, const PipelineOptions& options);
ScoreReport score_stage(const ExperimentConfig& config, const PipelineOptions& options);

// Runs options.stage; kAll runs every stage in order for config.fusion.
void run_pipeline(const ExperimentConfig& config, const PipelineOptions& options);

}  // namespace fasr
