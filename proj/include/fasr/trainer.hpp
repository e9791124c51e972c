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

// Joint CTC/attention training with Adadelta, plus the transfer workflows:
// plain copy, cold-fusion transfer and two-stage deep-fusion transfer.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fasr/features.hpp"
#include "fasr/fusion.hpp"
#include "fasr/model.hpp"
#include "fasr/optim.hpp"

namespace fasr {

struct Utterance {
  std::string id;
  std::string language;
  Matrix features;           // normalized, frames x dim
  std::vector<int> targets;  // [lang, c1..cn]
};

// Reads, normalizes and encodes every record of a manifest.
std::vector<Utterance> load_utterances(const Manifest& manifest, const FeatureStats& stats, const Vocabulary& vocab);

struct TrainConfig {
  int batch_size = 15;
  double ctc_weight = 0.5;
  double rho = 0.95;
  double epsilon = 1e-8;
  double epsilon_decay = 0.01;
  double clip_norm = 5.0;
  int max_epochs = 15;
  int patience = 3;  // epochs without validation improvement
  double sampling_prob = 0.0;
  double dropout = 0.0;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct LossOptions {
  double ctc_weight = 0.5;
  double sampling_prob = 0.0;
  double dropout = 0.0;
  std::uint64_t seed = 0;  // drives dropout masks and sampled tokens
};

struct UtteranceLoss {
  Var loss;  // (1-w) * CE + w * CTC, summed over the utterance
  double ce = 0.0;
  double ctc = 0.0;
  int tokens = 0;   // attention targets: lang, characters, eos
  int correct = 0;  // argmax hits
  bool ctc_excluded = false;
};

UtteranceLoss utterance_loss(ParamScope& scope, const AsrModel& model, const Utterance& utt,
                             const LossOptions& options);

struct JointLoss {
  Var loss;  // per target token
  double ce = 0.0;
  double ctc = 0.0;
  int tokens = 0;
  int ctc_excluded = 0;
};

// Averaged per attention target token over the batch. Utterance i uses seed
// mix_seed(options.seed, i).
JointLoss joint_loss(ParamScope& scope, const AsrModel& model, std::span<const Utterance> batch,
                     const LossOptions& options);

// Per-token argmax accuracy under teacher forcing, no dropout.
double teacher_forcing_accuracy(const AsrModel& model, const std::vector<Utterance>& utterances, int threads = 0);

// Epsilon decay on validation non-improvement.
class EpsilonSchedule {
 public:
  EpsilonSchedule(double epsilon, double decay) : epsilon_(epsilon), decay_(decay) {}
  // Returns true when the accuracy improved on the best so far.
  bool update(double accuracy);
  double epsilon() const { return epsilon_; }
  double best() const { return best_; }

 private:
  double epsilon_;
  double decay_;
  double best_ = -std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_accuracy = 0.0;
  double epsilon = 0.0;
  double wall_seconds = 0.0;
  int ctc_excluded = 0;
};

struct TrainResult {
  AsrModel model;  // best by validation accuracy
  double best_accuracy = 0.0;
  std::vector<EpochRecord> history;
  bool diverged = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Parameters outside `trainable` never change. Deterministic given `seed`,
// independent of the thread count.
TrainResult train(const AsrModel& initial, const TrainableMask& trainable, const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& valid_set, const TrainConfig& config, std::uint64_t seed,
                  const EpochCallback& on_epoch = {});

struct TransferInit {
  AsrModel model;
  TrainableMask trainable;
  std::vector<std::string> copied;
  std::vector<std::string> initialized;
  std::vector<std::string> frozen;
};

// Copies the seed model into the target vocabulary, which must extend the
// seed vocabulary. New rows of the embedding, output and CTC layers are drawn
// fresh. Cold mode also attaches the fusion head (needs `lm`). Throws
// ConfigError on incompatible vocabularies or topologies.
TransferInit transfer_init(const AsrModel& seed_model, const Vocabulary& target_vocab, FusionMode mode,
                           const LanguageModel* lm, const FusionConfig& fusion, std::uint64_t seed);

// Throws ConfigError listing mismatched parameter shapes.
void check_compatible(const ParameterSet& expected, const ParameterSet& actual);

struct AdaptResult {
  TrainResult stage1;
  TrainResult stage2;  // deep fusion only
  TransferInit init;
};

// Transfer, then train (cold/deep/none per `mode`). Deep runs both stages.
AdaptResult adapt(const AsrModel& seed_model, const Vocabulary& target_vocab, FusionMode mode,
                  const LanguageModel* lm, const FusionConfig& fusion, const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& valid_set, const TrainConfig& config, std::uint64_t seed,
                  const EpochCallback& on_epoch = {});

AdaptResult cf_transfer(const AsrModel& seed_model, const LanguageModel& lm, const FusionConfig& fusion,
                        const std::vector<Utterance>& train_set, const std::vector<Utterance>& valid_set,
                        const TrainConfig& config, std::uint64_t seed);
AdaptResult df_transfer(const AsrModel& seed_model, const LanguageModel& lm, const FusionConfig& fusion,
                        const std::vector<Utterance>& train_set, const std::vector<Utterance>& valid_set,
                        const TrainConfig& config, std::uint64_t seed);

}  // namespace fasr
