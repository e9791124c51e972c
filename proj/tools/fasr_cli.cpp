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

// fasr: synthetic-data ASR experiment pipeline.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
// failure, 1 anything unexpected.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fasr/config.hpp"
#include "fasr/error.hpp"
#include "fasr/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fasr: joint CTC/attention ASR with LM fusion and cross-lingual transfer"};
  std::string config_path;
  std::string stage = "all";
  std::optional<std::string> fusion;
  std::optional<std::string> lm;
  std::optional<std::string> seed_ckpt;
  std::optional<int> beam;
  std::optional<double> ctc_weight;
  std::optional<double> lm_weight;
  std::optional<std::uint64_t> seed;
  std::string out = "fasr_out";

  app.add_option("--config", config_path, "JSON experiment config (defaults to the desk preset)");
  app.add_option("--stage", stage, "gen-data, prep, train-seed, train-lm, adapt, decode, score or all");
  app.add_option("--fusion", fusion, "none, shallow, cold or deep");
  app.add_option("--lm", lm, "RNNLM checkpoint");
  app.add_option("--seed-ckpt", seed_ckpt, "seed model checkpoint for adapt");
  app.add_option("--beam", beam, "beam width");
  app.add_option("--ctc-weight", ctc_weight, "CTC weight during decoding");
  app.add_option("--lm-weight", lm_weight, "LM weight during decoding");
  app.add_option("--seed", seed, "experiment seed");
  app.add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(fasr::ErrorKind::kConfig);
  }

  try {
    fasr::ExperimentConfig config =
        config_path.empty() ? fasr::preset_config("desk") : fasr::load_config(config_path);
    if (fusion) config.fusion = fasr::parse_fusion_mode(*fusion);
    if (beam) config.decode.beam = *beam;
    if (ctc_weight) config.decode.ctc_weight = *ctc_weight;
    if (lm_weight) config.decode.lm_weight = *lm_weight;
    if (seed) {
      config.seed = *seed;
      config.lm_train.seed = *seed;
    }
    config.validate();

    fasr::PipelineOptions options;
    options.out = out;
    options.stage = fasr::parse_stage(stage);
    if (lm) options.lm = *lm;
    if (seed_ckpt) options.seed_ckpt = *seed_ckpt;
    options.log = &std::cerr;
    fasr::run_pipeline(config, options);
  } catch (const fasr::Error& e) {
    std::cerr << "fasr: error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "fasr: error: " << e.what() << '\n';
    return static_cast<int>(fasr::ErrorKind::kData);
  } catch (const std::exception& e) {
    std::cerr << "fasr: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
