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

#include "fasr/s2s.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fasr/error.hpp"
#include "fasr/vocab.hpp"

namespace fasr {
namespace {

std::string conv_name(std::size_t block, int k) { return "encoder.conv" + std::to_string(block) + std::to_string(k); }
std::string blstm_name(int layer, const char* dir) {
  return "encoder.blstm" + std::to_string(layer) + "." + dir;
}
std::string decoder_lstm_name(int layer) { return "decoder.lstm" + std::to_string(layer); }

int ceil_half(int n) { return (n + 1) / 2; }

}  // namespace

void S2SConfig::validate() const {
  if (encoder.feature_dim < 1) throw ConfigError("encoder feature_dim must be positive");
  if (encoder.channels.empty()) throw ConfigError("encoder needs at least one conv block");
  for (int c : encoder.channels)
    if (c < 1) throw ConfigError("conv channel widths must be positive");
  if (encoder.blstm_layers < 1 || encoder.blstm_units < 1) throw ConfigError("encoder BLSTM sizes must be positive");
  if (attention.dim < 1 || attention.location_channels < 1) throw ConfigError("attention sizes must be positive");
  if (attention.location_kernel < 1 || attention.location_kernel % 2 == 0) {
    throw ConfigError("attention location kernel must be odd");
  }
  if (decoder.embed_dim < 1 || decoder.layers < 1 || decoder.units < 1) {
    throw ConfigError("decoder sizes must be positive");
  }
  if (vocab_size <= kNumReserved) throw ConfigError("vocabulary too small");
}

int subsampled_length(int frames, int blocks) {
  for (int b = 0; b < blocks; ++b) frames = ceil_half(frames);
  return frames;
}

void add_s2s_params(ParameterSet& params, const S2SConfig& config, std::mt19937_64& rng) {
  config.validate();
  const auto& enc = config.encoder;
  int in_channels = 1;
  int freq = enc.feature_dim;
  for (std::size_t b = 0; b < enc.channels.size(); ++b) {
    const int out = enc.channels[b];
    add_linear_params(params, conv_name(b, 0), 9 * in_channels, out, rng);
    add_linear_params(params, conv_name(b, 1), 9 * out, out, rng);
    in_channels = out;
    freq = ceil_half(freq);
  }
  int in = freq * in_channels;
  for (int l = 0; l < enc.blstm_layers; ++l) {
    add_lstm_params(params, blstm_name(l, "fwd"), in, enc.blstm_units, rng);
    add_lstm_params(params, blstm_name(l, "bwd"), in, enc.blstm_units, rng);
    in = 2 * enc.blstm_units;
  }

  const int h_dim = config.encoder_dim();
  const auto& att = config.attention;
  const auto& dec = config.decoder;
  const double a_bound = 1.0 / std::sqrt(static_cast<double>(att.dim));
  params.add("attention.V", uniform_matrix(att.dim, h_dim, 1.0 / std::sqrt(static_cast<double>(h_dim)), rng));
  params.add("attention.b", Matrix(1, att.dim, 0.0));
  params.add("attention.W", uniform_matrix(att.dim, dec.units, 1.0 / std::sqrt(static_cast<double>(dec.units)), rng));
  params.add("attention.F", uniform_matrix(att.location_channels, att.location_kernel,
                                           1.0 / std::sqrt(static_cast<double>(att.location_kernel)), rng));
  params.add("attention.U", uniform_matrix(att.dim, att.location_channels,
                                           1.0 / std::sqrt(static_cast<double>(att.location_channels)), rng));
  params.add("attention.g", uniform_matrix(1, att.dim, a_bound, rng));

  params.add("decoder.embed", uniform_matrix(config.vocab_size, dec.embed_dim, 1.0, rng));
  int dec_in = dec.embed_dim + h_dim;
  for (int l = 0; l < dec.layers; ++l) {
    add_lstm_params(params, decoder_lstm_name(l), dec_in, dec.units, rng);
    dec_in = dec.units;
  }
  add_linear_params(params, "output", dec.units, config.vocab_size, rng);
  add_linear_params(params, "ctc", h_dim, config.vocab_size, rng);
}

Var encode(ParamScope& scope, const S2SConfig& config, const Matrix& features, const DropoutSpec& drop) {
  const auto& enc = config.encoder;
  if (features.rows < 1) throw DataError("cannot encode a zero-length utterance");
  if (features.cols != enc.feature_dim) {
    throw ConfigError("feature dimension " + std::to_string(features.cols) + " does not match encoder input " +
                      std::to_string(enc.feature_dim));
  }
  // Time x frequency map with one channel.
  int height = features.rows;
  int width = features.cols;
  Var x = Var::constant(Matrix(height * width, 1, features.data));
  for (std::size_t b = 0; b < enc.channels.size(); ++b) {
    for (int k = 0; k < 2; ++k) {
      const std::string name = conv_name(b, k);
      x = relu(linear(im2col3x3(x, height, width), scope.get(name + ".W"), scope.get(name + ".b")));
    }
    x = maxpool2x2(x, height, width);
    height = ceil_half(height);
    width = ceil_half(width);
  }
  // Rows are (time, frequency) pairs; gather each time step into one row.
  x = reshape(x, height, width * x.cols());

  for (int l = 0; l < enc.blstm_layers; ++l) {
    if (drop.p > 0.0) x = dropout(x, drop.p, mix_seed(drop.seed, static_cast<std::uint64_t>(l)));
    const Var fwd = lstm_sequence(scope, blstm_name(l, "fwd"), x, false);
    const Var bwd = lstm_sequence(scope, blstm_name(l, "bwd"), x, true);
    const std::array<Var, 2> both{fwd, bwd};
    x = concat_cols(both);
  }
  return x;
}

EncodedBatch encode_batch(ParamScope& scope, const S2SConfig& config, const std::vector<Matrix>& features) {
  EncodedBatch out;
  for (const auto& f : features) {
    out.h.push_back(encode(scope, config, f));
    out.lengths.push_back(out.h.back().rows());
  }
  return out;
}

AttentionMemory prepare_attention(ParamScope& scope, const Var& h, int valid_length) {
  if (valid_length < 0) valid_length = h.rows();
  if (valid_length == 0) throw DataError("attention over zero valid frames");
  if (valid_length > h.rows()) throw std::invalid_argument("valid length exceeds encoder output");
  AttentionMemory m;
  m.h = valid_length == h.rows() ? h : slice_rows(h, 0, valid_length);
  m.projected = linear(m.h, scope.get("attention.V"), scope.get("attention.b"));
  m.length = valid_length;
  return m;
}

AttentionResult attend(ParamScope& scope, const S2SConfig& config, const AttentionMemory& memory,
                       const Var& decoder_hidden, const Var& previous_weights) {
  if (previous_weights.rows() != 1 || previous_weights.cols() != memory.length) {
    throw std::invalid_argument("previous attention weights do not match the encoder length");
  }
  const Var state_term = matmul_nt(decoder_hidden, scope.get("attention.W"));  // 1 x A
  const Var location = matmul_nt(matmul_nt(unfold1d(previous_weights, config.attention.location_kernel),
                                           scope.get("attention.F")),
                                 scope.get("attention.U"));  // T' x A
  const Var energy_hidden = tanh(add_row(add(memory.projected, location), state_term));
  const Var energy = transpose(matmul_nt(energy_hidden, scope.get("attention.g")));  // 1 x T'
  AttentionResult r;
  r.weights = softmax(energy);
  r.context = matmul(r.weights, memory.h);
  return r;
}

DecoderState initial_decoder_state(const S2SConfig& config, const AttentionMemory& memory) {
  DecoderState s;
  for (int l = 0; l < config.decoder.layers; ++l) s.layers.push_back(zero_lstm_state(config.decoder.units));
  s.weights = Var::constant(Matrix(1, memory.length, 1.0 / memory.length));
  s.context = Var::constant(Matrix(1, config.encoder_dim(), 0.0));
  return s;
}

DecoderState decode_step_with_context(ParamScope& scope, const S2SConfig& config, const DecoderState& state,
                                      int previous_token, const AttentionResult& attention) {
  if (previous_token < 0 || previous_token >= config.vocab_size) {
    throw std::out_of_range("decoder token " + std::to_string(previous_token) + " out of range");
  }
  const int ids[1] = {previous_token};
  const std::array<Var, 2> parts{embedding(scope.get("decoder.embed"), ids), attention.context};
  Var x = concat_cols(parts);
  DecoderState next;
  next.layers.reserve(state.layers.size());
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    next.layers.push_back(lstm_step(scope, decoder_lstm_name(static_cast<int>(l)), x, state.layers[l]));
    x = next.layers.back().h;
  }
  next.weights = attention.weights;
  next.context = attention.context;
  return next;
}

DecoderState decode_step(ParamScope& scope, const S2SConfig& config, const DecoderState& state, int previous_token,
                         const AttentionMemory& memory) {
  const AttentionResult att = attend(scope, config, memory, state.top(), state.weights);
  return decode_step_with_context(scope, config, state, previous_token, att);
}

Var output_logits(ParamScope& scope, const Var& decoder_hidden) { return apply_linear(scope, "output", decoder_hidden); }

Var ctc_log_probs(ParamScope& scope, const Var& h) { return log_softmax(apply_linear(scope, "ctc", h)); }

}  // namespace fasr
