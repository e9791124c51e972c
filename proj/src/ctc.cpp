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

#include "fasr/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fasr/vocab.hpp"

namespace fasr::ctc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_labels(std::span<const int> labels, int vocab) {
  for (int l : labels) {
    if (l == kBlank) throw std::invalid_argument("CTC labels must not contain the blank");
    if (l < 0 || l >= vocab) throw std::invalid_argument("CTC label " + std::to_string(l) + " out of range");
  }
}

// Blank-interleaved label sequence: blank l1 blank l2 ... lU blank.
std::vector<int> extended_labels(std::span<const int> labels) {
  std::vector<int> ext(2 * labels.size() + 1, kBlank);
  for (std::size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
  return ext;
}

// Whether state s may be entered from s-2 (skipping a blank).
bool can_skip(const std::vector<int>& ext, std::size_t s) {
  return s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2];
}

// Forward variables alpha[t][s] in log space.
std::vector<std::vector<double>> forward_table(const Matrix& lp, const std::vector<int>& ext) {
  const int frames = lp.rows;
  const std::size_t states = ext.size();
  std::vector<std::vector<double>> alpha(static_cast<std::size_t>(frames), std::vector<double>(states, kLogZero));
  alpha[0][0] = lp(0, ext[0]);
  if (states > 1) alpha[0][1] = lp(0, ext[1]);
  for (int t = 1; t < frames; ++t) {
    const auto& prev = alpha[static_cast<std::size_t>(t - 1)];
    auto& cur = alpha[static_cast<std::size_t>(t)];
    for (std::size_t s = 0; s < states; ++s) {
      double a = prev[s];
      if (s >= 1) a = log_add(a, prev[s - 1]);
      if (can_skip(ext, s)) a = log_add(a, prev[s - 2]);
      cur[s] = a == kLogZero ? kLogZero : a + lp(t, ext[s]);
    }
  }
  return alpha;
}

// beta[t][s]: log-probability of emitting the rest of the labels from frames
// t+1.. given state s at frame t (emission at t excluded).
std::vector<std::vector<double>> backward_table(const Matrix& lp, const std::vector<int>& ext) {
  const int frames = lp.rows;
  const std::size_t states = ext.size();
  std::vector<std::vector<double>> beta(static_cast<std::size_t>(frames), std::vector<double>(states, kLogZero));
  auto& last = beta[static_cast<std::size_t>(frames - 1)];
  last[states - 1] = 0.0;
  if (states > 1) last[states - 2] = 0.0;
  for (int t = frames - 2; t >= 0; --t) {
    const auto& next = beta[static_cast<std::size_t>(t + 1)];
    auto& cur = beta[static_cast<std::size_t>(t)];
    for (std::size_t s = 0; s < states; ++s) {
      double b = next[s] == kLogZero ? kLogZero : next[s] + lp(t + 1, ext[s]);
      if (s + 1 < states && next[s + 1] != kLogZero) b = log_add(b, next[s + 1] + lp(t + 1, ext[s + 1]));
      if (s + 2 < states && can_skip(ext, s + 2) && next[s + 2] != kLogZero) {
        b = log_add(b, next[s + 2] + lp(t + 1, ext[s + 2]));
      }
      cur[s] = b;
    }
  }
  return beta;
}

double total_from_alpha(const std::vector<std::vector<double>>& alpha) {
  const auto& last = alpha.back();
  double total = last.back();
  if (last.size() > 1) total = log_add(total, last[last.size() - 2]);
  return total;
}

}  // namespace

double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

int required_frames(std::span<const int> labels) {
  int n = static_cast<int>(labels.size());
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++n;
  return n;
}

bool realizable(std::span<const int> labels, int frames) { return frames >= 1 && required_frames(labels) <= frames; }

double log_likelihood(const Matrix& log_probs, std::span<const int> labels) {
  check_labels(labels, log_probs.cols);
  if (!realizable(labels, log_probs.rows)) return kLogZero;
  return total_from_alpha(forward_table(log_probs, extended_labels(labels)));
}

Var ctc_loss(const Var& log_probs, std::span<const int> labels) {
  const Matrix& lp = log_probs.value();
  check_labels(labels, lp.cols);
  if (!realizable(labels, lp.rows)) return Var::constant(Matrix(1, 1, kInf));

  auto ext = extended_labels(labels);
  auto alpha = forward_table(lp, ext);
  const double total = total_from_alpha(alpha);
  return make_op("ctc_loss", Matrix(1, 1, -total), {log_probs},
                 [ext = std::move(ext), alpha = std::move(alpha), total](Node& self) {
                   Node& parent = *self.parents[0];
                   if (!parent.requires_grad) return;
                   const Matrix& lp = parent.value;
                   Matrix& g = parent.grad_buffer();
                   const double upstream = self.grad.data[0];
                   const auto beta = backward_table(lp, ext);
                   // d(-ln P)/d lp(t,k) = -sum_{s: ext[s]=k} alpha_t(s) beta_t(s) / P
                   for (int t = 0; t < lp.rows; ++t) {
                     const auto& a = alpha[static_cast<std::size_t>(t)];
                     const auto& b = beta[static_cast<std::size_t>(t)];
                     for (std::size_t s = 0; s < ext.size(); ++s) {
                       if (a[s] == kLogZero || b[s] == kLogZero) continue;
                       g(t, ext[s]) -= upstream * std::exp(a[s] + b[s] - total);
                     }
                   }
                 });
}

PrefixState initial_prefix_state(const Matrix& log_probs) {
  PrefixState st;
  const int frames = log_probs.rows;
  st.r_nonblank.assign(static_cast<std::size_t>(frames), kLogZero);
  st.r_blank.assign(static_cast<std::size_t>(frames), kLogZero);
  double acc = 0.0;
  for (int t = 0; t < frames; ++t) {
    acc += log_probs(t, kBlank);
    st.r_blank[static_cast<std::size_t>(t)] = acc;
  }
  st.prefix_log_prob = 0.0;
  return st;
}

double end_increment(const PrefixState& state) {
  if (state.r_blank.empty()) return kLogZero;
  const double full = log_add(state.r_nonblank.back(), state.r_blank.back());
  if (full == kLogZero) return kLogZero;
  return full - state.prefix_log_prob;
}

PrefixExtension extend_prefix(const PrefixState& state, int token, const Matrix& log_probs, int eos_token) {
  if (token == kBlank) throw std::invalid_argument("cannot extend a CTC prefix with the blank");
  if (token == eos_token) return {state, end_increment(state)};
  if (token < 0 || token >= log_probs.cols) throw std::invalid_argument("CTC token out of range");

  const int frames = log_probs.rows;
  PrefixExtension out;
  PrefixState& h = out.state;
  h.r_nonblank.assign(static_cast<std::size_t>(frames), kLogZero);
  h.r_blank.assign(static_cast<std::size_t>(frames), kLogZero);
  h.last = token;
  h.prefix = state.prefix;
  h.prefix.push_back(token);

  const auto& gn = state.r_nonblank;
  const auto& gb = state.r_blank;
  if (state.prefix.empty()) h.r_nonblank[0] = log_probs(0, token);
  double psi = h.r_nonblank[0];
  for (int t = 1; t < frames; ++t) {
    const auto tu = static_cast<std::size_t>(t);
    // Mass of g ending at t-1 that may be followed by a fresh emission of c.
    const double phi = token == state.last ? gb[tu - 1] : log_add(gb[tu - 1], gn[tu - 1]);
    const double emit = log_probs(t, token);
    const double stay_or_enter = log_add(h.r_nonblank[tu - 1], phi);
    h.r_nonblank[tu] = stay_or_enter == kLogZero ? kLogZero : stay_or_enter + emit;
    const double prev_h = log_add(h.r_blank[tu - 1], h.r_nonblank[tu - 1]);
    h.r_blank[tu] = prev_h == kLogZero ? kLogZero : prev_h + log_probs(t, kBlank);
    if (phi != kLogZero) psi = log_add(psi, phi + emit);
  }
  h.prefix_log_prob = psi;
  out.increment = (psi == kLogZero || state.prefix_log_prob == kLogZero) ? kLogZero : psi - state.prefix_log_prob;
  return out;
}

std::vector<int> greedy_decode(const Matrix& log_probs) {
  std::vector<int> out;
  int prev = -1;
  for (int t = 0; t < log_probs.rows; ++t) {
    const double* row = log_probs.row_ptr(t);
    const int best = static_cast<int>(std::max_element(row, row + log_probs.cols) - row);
    if (best != kBlank && best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

}  // namespace fasr::ctc
