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

// Connectionist temporal classification over T x V log-probabilities with the
// blank at index 0. Everything runs in log space.

#include <limits>
#include <span>
#include <vector>

#include "fasr/tensor.hpp"

namespace fasr::ctc {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) with max shifting; exact for -inf operands.
double log_add(double a, double b);

// Frames needed to emit `labels`: one per label plus one blank between each
// pair of equal neighbours.
int required_frames(std::span<const int> labels);
bool realizable(std::span<const int> labels, int frames);

// ln P(labels | x) by the forward recursion; kLogZero when unrealizable.
double log_likelihood(const Matrix& log_probs, std::span<const int> labels);

// -ln P(labels | x) as a graph node, differentiable w.r.t. log_probs.
// Unrealizable labels give +inf with no gradient; check realizable() first.
// Throws std::invalid_argument when labels contain the blank.
Var ctc_loss(const Var& log_probs, std::span<const int> labels);

// Prefix probabilities for incremental scoring during beam search. For the
// current prefix g, r_nonblank[t] / r_blank[t] are the log-probabilities that
// frames 0..t emit exactly g and end in a non-blank / blank.
struct PrefixState {
  std::vector<double> r_nonblank;
  std::vector<double> r_blank;
  double prefix_log_prob = 0.0;  // ln of P(output starts with g)
  int last = -1;                 // last label of g, -1 when g is empty
  std::vector<int> prefix;
};

PrefixState initial_prefix_state(const Matrix& log_probs);

struct PrefixExtension {
  PrefixState state;
  double increment = 0.0;  // ln P(g.c...) - ln P(g...), or the end term for eos
};

// Extends the prefix with `token`. For token == eos the increment is
// ln P(output == g) - ln P(output starts with g) and the state is returned
// unchanged. Throws std::invalid_argument for the blank.
PrefixExtension extend_prefix(const PrefixState& state, int token, const Matrix& log_probs, int eos_token);

// Convenience for eos.
double end_increment(const PrefixState& state);

// Best-path (greedy) decoding: argmax per frame, collapse repeats, drop
// blanks. Test utility.
std::vector<int> greedy_decode(const Matrix& log_probs);

}  // namespace fasr::ctc
