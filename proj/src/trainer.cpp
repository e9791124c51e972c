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

#include "fasr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "fasr/ctc.hpp"
#include "fasr/error.hpp"
#include "fasr/parallel.hpp"

namespace fasr {
namespace {

std::vector<int> ctc_labels(const Vocabulary& vocab, const std::vector<int>& targets) {
  std::vector<int> labels;
  for (int t : targets)
    if (!vocab.is_language_token(t)) labels.push_back(t);
  return labels;
}

int argmax_row(const Matrix& m, int r) {
  const double* row = m.row_ptr(r);
  return static_cast<int>(std::max_element(row, row + m.cols) - row);
}

int sample_row(const Matrix& log_probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (int k = 0; k < log_probs.cols; ++k) {
    r -= std::exp(log_probs(0, k));
    if (r < 0.0) return k;
  }
  return argmax_row(log_probs, 0);
}

std::size_t target_tokens(const Utterance& u) { return u.targets.size() + 1; }

Matrix extend_rows(const Matrix& m, int rows, double bound, std::mt19937_64& rng) {
  Matrix out = m;
  const Matrix extra = uniform_matrix(rows - m.rows, m.cols, bound, rng);
  out.data.insert(out.data.end(), extra.data.begin(), extra.data.end());
  out.rows = rows;
  return out;
}

Matrix extend_cols(const Matrix& m, int cols, double bound, std::mt19937_64& rng) {
  Matrix out(m.rows, cols);
  const Matrix extra = uniform_matrix(m.rows, cols - m.cols, bound, rng);
  for (int r = 0; r < m.rows; ++r) {
    std::copy(m.row_ptr(r), m.row_ptr(r) + m.cols, out.row_ptr(r));
    std::copy(extra.row_ptr(r), extra.row_ptr(r) + extra.cols, out.row_ptr(r) + m.cols);
  }
  return out;
}

}  // namespace

std::vector<Utterance> load_utterances(const Manifest& manifest, const FeatureStats& stats, const Vocabulary& vocab) {
  std::vector<Matrix> frames = apply_norm(manifest, stats);
  std::vector<Utterance> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& rec = manifest.records[i];
    out.push_back({rec.utt_id, rec.lang, std::move(frames[i]), vocab.encode(rec.text, rec.lang)});
  }
  return out;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) throw ConfigError("ctc weight must be in [0, 1]");
  if (!(sampling_prob >= 0.0 && sampling_prob <= 1.0)) throw ConfigError("sampling probability must be in [0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(rho > 0.0 && rho < 1.0) || !(epsilon > 0.0) || !(epsilon_decay > 0.0)) {
    throw ConfigError("invalid Adadelta settings");
  }
  if (max_epochs < 0 || patience < 1) throw ConfigError("invalid epoch budget");
}

UtteranceLoss utterance_loss(ParamScope& scope, const AsrModel& model, const Utterance& utt,
                             const LossOptions& options) {
  const double w = options.ctc_weight;
  const Var h = encode(scope, model.config, utt.features, {options.dropout, mix_seed(options.seed, 1)});
  const AttentionMemory memory = prepare_attention(scope, h);
  LmBinding lm;
  if (has_fusion_layer(model.fusion)) {
    if (!model.lm_config) throw ConfigError("fused model has no embedded language model");
    lm = {&scope, &*model.lm_config};
  }

  std::vector<int> targets = utt.targets;
  targets.push_back(kEos);
  const int steps = static_cast<int>(targets.size());

  UtteranceLoss out;
  out.tokens = steps;
  Var log_probs;
  if (options.sampling_prob <= 0.0) {
    // Teacher forcing: run the recurrences, then the output layer once.
    std::vector<int> inputs = {kSos};
    inputs.insert(inputs.end(), utt.targets.begin(), utt.targets.end());
    DecoderState state = initial_decoder_state(model.config, memory);
    std::vector<Var> tops;
    for (int u = 0; u < steps; ++u) {
      state = decode_step(scope, model.config, state, inputs[static_cast<std::size_t>(u)], memory);
      tops.push_back(state.top());
    }
    const Var s = concat_rows(tops);
    if (lm.active()) {
      const LmConfig& c = *lm.config;
      Var x = embedding(scope.get("lm.embed"), inputs);
      for (int l = 0; l < c.layers; ++l) x = lstm_sequence(scope, "lm.lstm" + std::to_string(l), x, false);
      log_probs = cold_fusion_log_probs(scope, s, x);
    } else {
      log_probs = log_softmax(output_logits(scope, s));
    }
  } else {
    std::mt19937_64 rng(mix_seed(options.seed, 2));
    std::bernoulli_distribution use_sample(options.sampling_prob);
    ModelState state = initial_model_state(model, memory, lm);
    std::vector<Var> rows;
    int previous = kSos;
    for (int u = 0; u < steps; ++u) {
      ModelStep step = model_step(scope, model, state, previous, memory, lm);
      rows.push_back(step.log_probs);
      previous = targets[static_cast<std::size_t>(u)];
      if (u + 1 < steps && use_sample(rng)) previous = sample_row(step.log_probs.value(), rng);
      state = std::move(step.state);
    }
    log_probs = concat_rows(rows);
  }

  const Var ce = scale(sum(pick(log_probs, targets)), -1.0);
  out.ce = ce.item();
  for (int u = 0; u < steps; ++u)
    if (argmax_row(log_probs.value(), u) == targets[static_cast<std::size_t>(u)]) ++out.correct;

  Var loss = w < 1.0 ? scale(ce, 1.0 - w) : Var();
  if (w > 0.0) {
    const std::vector<int> labels = ctc_labels(model.vocab, utt.targets);
    if (ctc::realizable(labels, h.rows())) {
      const Var c = ctc::ctc_loss(ctc_log_probs(scope, h), labels);
      out.ctc = c.item();
      loss = loss.defined() ? add(loss, scale(c, w)) : scale(c, w);
    } else {
      out.ctc_excluded = true;
    }
  }
  out.loss = loss.defined() ? loss : scale(ce, 0.0);
  return out;
}

JointLoss joint_loss(ParamScope& scope, const AsrModel& model, std::span<const Utterance> batch,
                     const LossOptions& options) {
  if (batch.empty()) throw DataError("empty batch");
  JointLoss out;
  Var total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    LossOptions o = options;
    o.seed = mix_seed(options.seed, i);
    const UtteranceLoss ul = utterance_loss(scope, model, batch[i], o);
    total = total.defined() ? add(total, ul.loss) : ul.loss;
    out.ce += ul.ce;
    out.ctc += ul.ctc;
    out.tokens += ul.tokens;
    out.ctc_excluded += ul.ctc_excluded ? 1 : 0;
  }
  out.loss = scale(total, 1.0 / out.tokens);
  return out;
}

double teacher_forcing_accuracy(const AsrModel& model, const std::vector<Utterance>& utterances, int threads) {
  if (utterances.empty()) throw DataError("accuracy over an empty set");
  std::vector<int> correct(utterances.size()), tokens(utterances.size());
  parallel_for(utterances.size(), resolve_threads(threads), [&](std::size_t i) {
    NoGradGuard no_grad;
    ParamScope scope(model.params);
    const UtteranceLoss ul = utterance_loss(scope, model, utterances[i], {0.0, 0.0, 0.0, 0});
    correct[i] = ul.correct;
    tokens[i] = ul.tokens;
  });
  const double c = std::accumulate(correct.begin(), correct.end(), 0.0);
  const double t = std::accumulate(tokens.begin(), tokens.end(), 0.0);
  return c / t;
}

bool EpsilonSchedule::update(double accuracy) {
  if (accuracy > best_) {
    best_ = accuracy;
    return true;
  }
  epsilon_ *= decay_;
  return false;
}

TrainResult train(const AsrModel& initial, const TrainableMask& trainable, const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& valid_set, const TrainConfig& config, std::uint64_t seed,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw DataError("empty training set");
  const auto& valid = valid_set.empty() ? train_set : valid_set;
  const int threads = resolve_threads(config.threads);

  TrainResult result;
  result.model = initial;
  AsrModel model = initial;
  Adadelta optimizer(config.rho, config.epsilon);
  EpsilonSchedule schedule(config.epsilon, config.epsilon_decay);
  if (config.max_epochs == 0) result.best_accuracy = teacher_forcing_accuracy(model, valid, threads);

  // Length buckets: consecutive utterances of similar duration form a batch.
  std::vector<std::size_t> by_length(train_set.size());
  std::iota(by_length.begin(), by_length.end(), 0);
  std::stable_sort(by_length.begin(), by_length.end(), [&](std::size_t a, std::size_t b) {
    return train_set[a].features.rows < train_set[b].features.rows;
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < by_length.size(); i += static_cast<std::size_t>(config.batch_size)) {
    const auto end = std::min(by_length.size(), i + static_cast<std::size_t>(config.batch_size));
    batches.emplace_back(by_length.begin() + static_cast<std::ptrdiff_t>(i),
                         by_length.begin() + static_cast<std::ptrdiff_t>(end));
  }

  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(batches.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    double token_sum = 0.0;
    int excluded = 0;
    for (std::size_t b : order) {
      const auto& batch = batches[b];
      double tokens = 0.0;
      for (std::size_t i : batch) tokens += static_cast<double>(target_tokens(train_set[i]));
      std::vector<GradientMap> grads(batch.size());
      std::vector<double> losses(batch.size());
      std::vector<int> skipped(batch.size());
      parallel_for(batch.size(), threads, [&](std::size_t j) {
        const std::size_t idx = batch[j];
        ParamScope scope(model.params, &trainable);
        const LossOptions options{config.ctc_weight, config.sampling_prob, config.dropout,
                                  mix_seed(mix_seed(seed, static_cast<std::uint64_t>(epoch)), idx)};
        const UtteranceLoss ul = utterance_loss(scope, model, train_set[idx], options);
        losses[j] = ul.loss.item();
        skipped[j] = ul.ctc_excluded ? 1 : 0;
        if (std::isfinite(losses[j])) {
          backward(scale(ul.loss, 1.0 / tokens));
          grads[j] = scope.gradients();
        }
      });
      GradientMap total;
      for (std::size_t j = 0; j < batch.size(); ++j) {
        loss_sum += losses[j];
        excluded += skipped[j];
        accumulate_gradients(total, grads[j]);
      }
      token_sum += tokens;
      if (!std::isfinite(loss_sum) || !std::isfinite(global_norm(total))) {
        result.diverged = true;
        break;
      }
      clip_gradients(total, config.clip_norm);
      optimizer.step(model.params, total);
    }
    if (result.diverged) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / token_sum;
    rec.valid_accuracy = teacher_forcing_accuracy(model, valid, threads);
    const bool improved = schedule.update(rec.valid_accuracy);
    optimizer.set_epsilon(schedule.epsilon());
    rec.epsilon = schedule.epsilon();
    rec.ctc_excluded = excluded;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (improved) {
      result.best_accuracy = rec.valid_accuracy;
      result.model = model;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  return result;
}

void check_compatible(const ParameterSet& expected, const ParameterSet& actual) {
  std::string diff;
  for (const auto& [name, m] : expected.entries()) {
    if (!actual.contains(name)) {
      diff += "\n  missing " + name;
      continue;
    }
    const Matrix& a = actual.at(name);
    if (a.rows != m.rows || a.cols != m.cols) {
      diff += "\n  " + name + ": expected " + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ", got " +
              std::to_string(a.rows) + "x" + std::to_string(a.cols);
    }
  }
  for (const auto& [name, m] : actual.entries())
    if (!expected.contains(name)) diff += "\n  unexpected " + name;
  if (!diff.empty()) throw ConfigError("incompatible model topology:" + diff);
}

TransferInit transfer_init(const AsrModel& seed_model, const Vocabulary& target_vocab, FusionMode mode,
                           const LanguageModel* lm, const FusionConfig& fusion, std::uint64_t seed) {
  if (has_fusion_layer(seed_model.fusion)) throw ConfigError("seed model must not carry a fusion head");
  const auto& old_tokens = seed_model.vocab.tokens();
  const auto& new_tokens = target_vocab.tokens();
  if (new_tokens.size() < old_tokens.size() || !std::equal(old_tokens.begin(), old_tokens.end(), new_tokens.begin())) {
    throw ConfigError("target vocabulary does not extend the seed vocabulary");
  }

  TransferInit out;
  AsrModel& m = out.model;
  m.config = seed_model.config;
  m.config.vocab_size = target_vocab.size();
  m.vocab = target_vocab;
  m.fusion = FusionMode::kNone;

  // Reference shapes for the target vocabulary.
  ParameterSet reference;
  {
    std::mt19937_64 scratch(0);
    add_s2s_params(reference, m.config, scratch);
  }
  std::mt19937_64 rng(mix_seed(seed, 0x65787465));
  const int v = target_vocab.size();
  const int dec = m.config.decoder.units;
  const int hd = m.config.encoder_dim();
  for (const auto& [name, value] : seed_model.params.entries()) {
    const Matrix& ref = reference.contains(name) ? reference.at(name) : value;
    if (value.rows == ref.rows && value.cols == ref.cols) {
      m.params.add(name, value);
      out.copied.push_back(name);
      continue;
    }
    Matrix grown;
    if (name == "decoder.embed") {
      grown = extend_rows(value, v, 1.0, rng);
    } else if (name == "output.W") {
      grown = extend_rows(value, v, 1.0 / std::sqrt(static_cast<double>(dec)), rng);
    } else if (name == "output.b") {
      grown = extend_cols(value, v, 1.0 / std::sqrt(static_cast<double>(dec)), rng);
    } else if (name == "ctc.W") {
      grown = extend_rows(value, v, 1.0 / std::sqrt(static_cast<double>(hd)), rng);
    } else if (name == "ctc.b") {
      grown = extend_cols(value, v, 1.0 / std::sqrt(static_cast<double>(hd)), rng);
    } else {
      grown = value;  // reported by check_compatible below
    }
    m.params.add(name, std::move(grown));
    out.initialized.push_back(name);
  }
  check_compatible(reference, m.params);

  if (mode == FusionMode::kCold) {
    if (lm == nullptr) throw ConfigError("cold fusion transfer needs a language model");
    FusedModel fused = attach_fusion(m, *lm, FusionMode::kCold, fusion, mix_seed(seed, 0x636f6c64));
    out.model = std::move(fused.model);
    out.trainable = std::move(fused.trainable);
    out.initialized.insert(out.initialized.end(), fused.initialized.begin(), fused.initialized.end());
  } else {
    out.model.fusion = mode == FusionMode::kShallow ? FusionMode::kShallow : FusionMode::kNone;
    out.trainable = all_trainable(out.model.params);
  }
  for (const auto& [name, on] : out.trainable)
    if (!on) out.frozen.push_back(name);
  return out;
}

AdaptResult adapt(const AsrModel& seed_model, const Vocabulary& target_vocab, FusionMode mode,
                  const LanguageModel* lm, const FusionConfig& fusion, const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& valid_set, const TrainConfig& config, std::uint64_t seed,
                  const EpochCallback& on_epoch) {
  if ((mode == FusionMode::kCold || mode == FusionMode::kDeep) && lm == nullptr) {
    throw ConfigError(std::string(to_string(mode)) + " fusion needs a language model");
  }
  AdaptResult out;
  const FusionMode init_mode = mode == FusionMode::kDeep ? FusionMode::kNone : mode;
  out.init = transfer_init(seed_model, target_vocab, init_mode, lm, fusion, seed);
  out.stage1 = train(out.init.model, out.init.trainable, train_set, valid_set, config, mix_seed(seed, 1), on_epoch);
  if (mode == FusionMode::kDeep) {
    FusedModel fused = attach_fusion(out.stage1.model, *lm, FusionMode::kDeep, fusion, mix_seed(seed, 0x64656570));
    out.stage2 = train(fused.model, fused.trainable, train_set, valid_set, config, mix_seed(seed, 2), on_epoch);
  }
  return out;
}

AdaptResult cf_transfer(const AsrModel& seed_model, const LanguageModel& lm, const FusionConfig& fusion,
                        const std::vector<Utterance>& train_set, const std::vector<Utterance>& valid_set,
                        const TrainConfig& config, std::uint64_t seed) {
  return adapt(seed_model, lm.vocab, FusionMode::kCold, &lm, fusion, train_set, valid_set, config, seed);
}

AdaptResult df_transfer(const AsrModel& seed_model, const LanguageModel& lm, const FusionConfig& fusion,
                        const std::vector<Utterance>& train_set, const std::vector<Utterance>& valid_set,
                        const TrainConfig& config, std::uint64_t seed) {
  return adapt(seed_model, lm.vocab, FusionMode::kDeep, &lm, fusion, train_set, valid_set, config, seed);
}

}  // namespace fasr
