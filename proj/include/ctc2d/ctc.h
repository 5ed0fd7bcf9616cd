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

// Vanilla CTC: forward probability, loss and logit gradient over a 1D
// sequence of class distributions, all evaluated in log domain.

#ifndef CTC2D_CTC_H_
#define CTC2D_CTC_H_

#include <span>
#include <vector>

#include "ctc2d/tensor.h"

namespace ctc2d {

// log alpha_{s,t}: probability of emitting Y*[0..s] in frames 0..t, ending in
// state s. Stored state-major, (2L+1) x T.
struct AlphaTable {
  int states = 0;
  int frames = 0;
  std::vector<double> values;

  double at(int s, int t) const {
    return values[static_cast<size_t>(s) * frames + t];
  }
};

struct CtcForwardResult {
  double log_prob = kLogZero;  // kLogZero when the label is infeasible.
  AlphaTable table;
};

CtcForwardResult CtcForward(const ProbSeq1D& x, const Label& y);

// log P(Y|X) without keeping the table.
double CtcLogProb(const ProbSeq1D& x, const Label& y);

// -log P(Y|X). An infeasible label yields value = +inf with feasible = false.
struct LossValue {
  double value = 0.0;
  bool feasible = true;
};

LossValue CtcLoss(const ProbSeq1D& x, const Label& y);

struct CtcGradient {
  double loss = 0.0;
  // d loss / d logits, T x |Omega|, where x = softmax(logits) per frame.
  std::vector<double> logits;
};

// Throws InfeasibleError when P(Y|X) = 0.
CtcGradient CtcGrad(const ProbSeq1D& x, const Label& y);

// d loss / d x_{t,c} with x taken as free (unnormalized) inputs. Used when the
// sequence is itself a function of other parameters, e.g. a height-collapsed
// 2D map. Throws InfeasibleError when P(Y|X) = 0.
std::vector<double> CtcProbGrad(const ProbSeq1D& x, const Label& y);

enum class InfeasiblePolicy {
  kStrict,      // Throw InfeasibleError naming the first infeasible item.
  kPermissive,  // Replace the item's loss by LossOptions::clamp.
};

struct LossOptions {
  InfeasiblePolicy policy = InfeasiblePolicy::kStrict;
  double clamp = 1e4;
};

struct BatchLoss {
  double mean = 0.0;
  std::vector<double> items;
  int infeasible = 0;
};

// Mean of per-item losses, evaluated serially. See kernels.h for the
// OpenMP batch entry points.
BatchLoss CtcBatchLoss(std::span<const ProbSeq1D> xs, std::span<const Label> ys,
                       const LossOptions& options = {});

}  // namespace ctc2d

#endif  // CTC2D_CTC_H_
