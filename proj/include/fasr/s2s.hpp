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

// Attention encoder-decoder: VGG-style convolution blocks and a BLSTM stack
// on the encoder side, a location-aware attention LSTM decoder on the other.
//
// Parameters live under "encoder.*", "attention.*", "decoder.*", "output.*"
// and (for the CTC head over the encoder output) "ctc.*".

#include <cstdint>
#include <random>
#include <vector>

#include "fasr/layers.hpp"
#include "fasr/params.hpp"
#include "fasr/tensor.hpp"

namespace fasr {

struct EncoderConfig {
  int feature_dim = 8;
  std::vector<int> channels = {16, 32};  // one entry per conv block
  int blstm_layers = 2;
  int blstm_units = 64;  // per direction
};

struct AttentionConfig {
  int dim = 64;
  int location_channels = 4;
  int location_kernel = 5;
};

struct DecoderConfig {
  int embed_dim = 32;
  int layers = 2;
  int units = 64;
};

struct S2SConfig {
  EncoderConfig encoder;
  AttentionConfig attention;
  DecoderConfig decoder;
  int vocab_size = 0;

  int encoder_dim() const { return 2 * encoder.blstm_units; }
  // Throws ConfigError on non-positive sizes or an even location kernel.
  void validate() const;
};

// ceil(T / 2^blocks).
int subsampled_length(int frames, int blocks = 2);

void add_s2s_params(ParameterSet& params, const S2SConfig& config, std::mt19937_64& rng);

// Dropout on the BLSTM inputs. p == 0 disables it.
struct DropoutSpec {
  double p = 0.0;
  std::uint64_t seed = 0;
};

// Encodes one utterance (T x feature_dim) into h (T' x encoder_dim).
// Throws DataError for zero frames and ConfigError for a dimension mismatch.
Var encode(ParamScope& scope, const S2SConfig& config, const Matrix& features, const DropoutSpec& dropout = {});

struct EncodedBatch {
  std::vector<Var> h;
  std::vector<int> lengths;  // T' per utterance
};

// Utterances are encoded independently, so the result does not depend on
// what else is in the batch.
EncodedBatch encode_batch(ParamScope& scope, const S2SConfig& config, const std::vector<Matrix>& features);

// Encoder output plus the time-invariant part of the attention energy.
struct AttentionMemory {
  Var h;          // T' x encoder_dim, restricted to valid frames
  Var projected;  // h . V^T + b
  int length = 0;
};

// `valid_length` < h.rows() masks the trailing frames; -1 means all rows.
AttentionMemory prepare_attention(ParamScope& scope, const Var& h, int valid_length = -1);

struct AttentionResult {
  Var context;  // 1 x encoder_dim
  Var weights;  // 1 x T'
};

AttentionResult attend(ParamScope& scope, const S2SConfig& config, const AttentionMemory& memory,
                       const Var& decoder_hidden, const Var& previous_weights);

struct DecoderState {
  std::vector<LstmState> layers;
  Var weights;  // alpha_{u-1}
  Var context;  // c_{u-1}

  const Var& top() const { return layers.back().h; }
};

// Zero LSTM stack, uniform weights over the valid frames, zero context.
DecoderState initial_decoder_state(const S2SConfig& config, const AttentionMemory& memory);

// Attends with the previous top hidden state, then feeds
// [embed(previous_token); context] through the LSTM stack. The returned
// state's top() is s_u. Throws std::out_of_range for a bad token.
DecoderState decode_step(ParamScope& scope, const S2SConfig& config, const DecoderState& state, int previous_token,
                         const AttentionMemory& memory);

// Same, with an externally computed attention result.
DecoderState decode_step_with_context(ParamScope& scope, const S2SConfig& config, const DecoderState& state,
                                      int previous_token, const AttentionResult& attention);

// W^o s + b^o (1 x V).
Var output_logits(ParamScope& scope, const Var& decoder_hidden);

// CTC head: log-softmax(h . W^T + b), T' x V.
Var ctc_log_probs(ParamScope& scope, const Var& h);

}  // namespace fasr
