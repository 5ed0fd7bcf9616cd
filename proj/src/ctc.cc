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

#include "ctc2d/ctc.h"

#include <cmath>

#include "ctc2d/ctc_core.h"

namespace ctc2d {
namespace {

auto Emissions(const ProbSeq1D& x, const ExpandedLabel& ext) {
  return [&x, &ext](int t, int s) { return x.log_prob(t, ext[s]); };
}

void CheckInputs(const ProbSeq1D& x, const Label& y) { CheckLabel(y, x.num_classes()); }

// Log of d P / d x_{t,c}, summed over the states carrying class c. The
// pre-emission mass at (s,t) is recomputed from alpha at t-1 so that x = 0
// entries still get their exact derivative.
std::vector<double> LogProbDerivative(const ProbSeq1D& x, const ExpandedLabel& ext,
                                      const std::vector<double>& alpha,
                                      const std::vector<double>& beta) {
  const int frames = x.frames();
  const int classes = x.num_classes();
  const int states = ext.size();
  auto a = [&](int s, int t) { return alpha[static_cast<size_t>(s) * frames + t]; };
  auto b = [&](int s, int t) { return beta[static_cast<size_t>(s) * frames + t]; };
  std::vector<double> out(static_cast<size_t>(frames) * classes, kLogZero);
  for (int t = 0; t < frames; ++t) {
    for (int s = 0; s < states; ++s) {
      if (b(s, t) == kLogZero) continue;
      double in;
      if (t == 0) {
        in = s < 2 ? 0.0 : kLogZero;
      } else {
        in = a(s, t - 1);
        if (s >= 1) in = LogSumExp(in, a(s - 1, t - 1));
        if (ext.CanSkip(s)) in = LogSumExp(in, a(s - 2, t - 1));
      }
      if (in == kLogZero) continue;
      double& slot = out[static_cast<size_t>(t) * classes + ext[s]];
      slot = LogSumExp(slot, in + b(s, t));
    }
  }
  return out;
}

}  // namespace

CtcForwardResult CtcForward(const ProbSeq1D& x, const Label& y) {
  CheckInputs(x, y);
  const ExpandedLabel ext(y);
  CtcForwardResult result;
  result.table.states = ext.size();
  result.table.frames = x.frames();
  result.log_prob = core::Forward(ext, x.frames(), Emissions(x, ext), result.table.values);
  if (x.frames() < MinWidth(y)) result.log_prob = kLogZero;
  return result;
}

double CtcLogProb(const ProbSeq1D& x, const Label& y) {
  CheckInputs(x, y);
  if (x.frames() < MinWidth(y)) return kLogZero;
  const ExpandedLabel ext(y);
  std::vector<double> prev, cur;
  return core::ForwardLogProb(ext, x.frames(), Emissions(x, ext), prev, cur);
}

LossValue CtcLoss(const ProbSeq1D& x, const Label& y) {
  const double lp = CtcLogProb(x, y);
  if (lp == kLogZero) return {std::numeric_limits<double>::infinity(), false};
  return {-lp, true};
}

CtcGradient CtcGrad(const ProbSeq1D& x, const Label& y) {
  CheckInputs(x, y);
  const ExpandedLabel ext(y);
  const int frames = x.frames();
  const int classes = x.num_classes();
  std::vector<double> alpha, beta;
  const double log_p = core::Forward(ext, frames, Emissions(x, ext), alpha);
  if (log_p == kLogZero) throw InfeasibleError(MinWidth(y), frames);
  core::Backward(ext, frames, Emissions(x, ext), beta);

  // Occupancy of (t, c) under the path posterior; rows sum to 1.
  CtcGradient grad;
  grad.loss = -log_p;
  grad.logits.assign(static_cast<size_t>(frames) * classes, 0.0);
  std::vector<double> occ(classes);
  for (int t = 0; t < frames; ++t) {
    std::fill(occ.begin(), occ.end(), kLogZero);
    for (int s = 0; s < ext.size(); ++s) {
      const double a = alpha[static_cast<size_t>(s) * frames + t];
      const double b = beta[static_cast<size_t>(s) * frames + t];
      occ[ext[s]] = LogSumExp(occ[ext[s]], a + b);
    }
    double mass = 0.0;
    for (int c = 0; c < classes; ++c) {
      occ[c] = std::exp(occ[c] - log_p);
      mass += occ[c];
    }
    for (int c = 0; c < classes; ++c) {
      grad.logits[static_cast<size_t>(t) * classes + c] = x.prob(t, c) * mass - occ[c];
    }
  }
  return grad;
}

std::vector<double> CtcProbGrad(const ProbSeq1D& x, const Label& y) {
  CheckInputs(x, y);
  const ExpandedLabel ext(y);
  const int frames = x.frames();
  std::vector<double> alpha, beta;
  const double log_p = core::Forward(ext, frames, Emissions(x, ext), alpha);
  if (log_p == kLogZero) throw InfeasibleError(MinWidth(y), frames);
  core::Backward(ext, frames, Emissions(x, ext), beta);
  auto out = LogProbDerivative(x, ext, alpha, beta);
  for (double& v : out) v = -std::exp(v - log_p);
  return out;
}

BatchLoss CtcBatchLoss(std::span<const ProbSeq1D> xs, std::span<const Label> ys,
                       const LossOptions& options) {
  if (xs.size() != ys.size()) throw ShapeError("batch inputs and labels differ in size");
  BatchLoss out;
  out.items.resize(xs.size());
  double sum = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const LossValue v = CtcLoss(xs[i], ys[i]);
    if (!v.feasible) {
      if (options.policy == InfeasiblePolicy::kStrict) {
        throw InfeasibleError(MinWidth(ys[i]), xs[i].frames());
      }
      ++out.infeasible;
      out.items[i] = options.clamp;
    } else {
      out.items[i] = v.value;
    }
    sum += out.items[i];
  }
  out.mean = xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
  return out;
}

}  // namespace ctc2d
