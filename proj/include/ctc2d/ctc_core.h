/* Copyright 2026 The ctc2d Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Log-domain alpha/beta recursions shared by the vanilla CTC module and the
// factored 2D-CTC kernel. Emission scores come from a callable so the same
// recursion serves a plain sequence and a height-marginalised map.

#ifndef CTC2D_CTC_CORE_H_
#define CTC2D_CTC_CORE_H_

#include <algorithm>
#include <vector>

#include "ctc2d/tensor.h"

namespace ctc2d::core {

// Fills `alpha` ((2L+1) x T, state-major) and returns log P(Y*).
// `log_emit(t, s)` is the log emission of state s at frame t.
template <class Emit>
double Forward(const ExpandedLabel& ext, int frames, Emit&& log_emit,
               std::vector<double>& alpha) {
  const int states = ext.size();
  alpha.assign(static_cast<size_t>(states) * frames, kLogZero);
  auto at = [&](int s, int t) -> double& {
    return alpha[static_cast<size_t>(s) * frames + t];
  };
  at(0, 0) = log_emit(0, 0);
  if (states > 1) at(1, 0) = log_emit(0, 1);
  for (int t = 1; t < frames; ++t) {
    // States outside [lo, hi) cannot lie on a complete alignment.
    const int lo = std::max(0, states - 2 * (frames - t));
    const int hi = std::min(states, 2 * (t + 1));
    for (int s = lo; s < hi; ++s) {
      double in = at(s, t - 1);
      if (s >= 1) in = LogSumExp(in, at(s - 1, t - 1));
      if (ext.CanSkip(s)) in = LogSumExp(in, at(s - 2, t - 1));
      if (in != kLogZero) at(s, t) = in + log_emit(t, s);
    }
  }
  const double last = at(states - 1, frames - 1);
  return states > 1 ? LogSumExp(last, at(states - 2, frames - 1)) : last;
}

// Two-column variant of Forward that keeps no table.
template <class Emit>
double ForwardLogProb(const ExpandedLabel& ext, int frames, Emit&& log_emit,
                      std::vector<double>& prev, std::vector<double>& cur) {
  const int states = ext.size();
  prev.assign(states, kLogZero);
  cur.assign(states, kLogZero);
  prev[0] = log_emit(0, 0);
  if (states > 1) prev[1] = log_emit(0, 1);
  for (int t = 1; t < frames; ++t) {
    const int lo = std::max(0, states - 2 * (frames - t));
    const int hi = std::min(states, 2 * (t + 1));
    std::fill(cur.begin(), cur.end(), kLogZero);
    for (int s = lo; s < hi; ++s) {
      double in = prev[s];
      if (s >= 1) in = LogSumExp(in, prev[s - 1]);
      if (ext.CanSkip(s)) in = LogSumExp(in, prev[s - 2]);
      if (in != kLogZero) cur[s] = in + log_emit(t, s);
    }
    std::swap(prev, cur);
  }
  return states > 1 ? LogSumExp(prev[states - 1], prev[states - 2]) : prev[0];
}

// Fills `beta` ((2L+1) x T): log probability of emitting the rest of Y*
// in frames t+1..T-1 given state s at frame t. The emission at t itself is
// excluded, so alpha(s,t) + beta(s,t) is the log mass of paths through (s,t).
template <class Emit>
void Backward(const ExpandedLabel& ext, int frames, Emit&& log_emit,
              std::vector<double>& beta) {
  const int states = ext.size();
  beta.assign(static_cast<size_t>(states) * frames, kLogZero);
  auto at = [&](int s, int t) -> double& {
    return beta[static_cast<size_t>(s) * frames + t];
  };
  at(states - 1, frames - 1) = 0.0;
  if (states > 1) at(states - 2, frames - 1) = 0.0;
  for (int t = frames - 2; t >= 0; --t) {
    const int lo = std::max(0, states - 2 * (frames - t));
    const int hi = std::min(states, 2 * (t + 1));
    for (int s = lo; s < hi; ++s) {
      double out = at(s, t + 1) + log_emit(t + 1, s);
      if (s + 1 < states) out = LogSumExp(out, at(s + 1, t + 1) + log_emit(t + 1, s + 1));
      if (s + 2 < states && ext.CanSkip(s + 2)) {
        out = LogSumExp(out, at(s + 2, t + 1) + log_emit(t + 1, s + 2));
      }
      at(s, t) = out;
    }
  }
}

}  // namespace ctc2d::core

#endif  // CTC2D_CTC_CORE_H_
