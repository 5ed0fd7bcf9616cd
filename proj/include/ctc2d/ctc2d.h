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

// 2D-CTC: sequence probability of a label under an H x W probability map and
// a path transition map. A decoding path visits one height per column, moving
// strictly left to right; its class sequence is collapsed exactly as in
// vanilla CTC.

#ifndef CTC2D_CTC2D_H_
#define CTC2D_CTC2D_H_

#include <span>
#include <vector>

#include "ctc2d/ctc.h"
#include "ctc2d/tensor.h"

namespace ctc2d {

// log beta_{s,h,w}: probability of emitting Y*[0..s] over columns 0..w with
// the path at height h in column w, emission at (h, w) included.
struct BetaTable {
  int states = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;  // [w][s][h]

  double at(int s, int h, int w) const {
    return values[(static_cast<size_t>(w) * states + s) * height + h];
  }
};

struct Ctc2dForwardResult {
  double log_prob = kLogZero;
  BetaTable table;
};

// Full beta-table dynamic program. Columns outer, then states, then heights;
// O(W L H) for a Simplified map and O(W L H^2) for a Full one.
Ctc2dForwardResult Ctc2dForward(const ProbMap2D& x, const TransitionMap& psi,
                                const Label& y);

// log P(Y|X'). A Simplified map lets the height at each column be chosen
// independently of the previous one, so the probability equals vanilla CTC on
// the height-marginalised sequence; that path costs O(H W L) plus one 1D
// recursion and never materialises the beta table.
double Ctc2dLogProb(const ProbMap2D& x, const TransitionMap& psi, const Label& y);

LossValue Ctc2dLoss(const ProbMap2D& x, const TransitionMap& psi, const Label& y);

struct Ctc2dGradOptions {
  bool gamma_trainable = false;
};

struct Ctc2dGradient {
  double loss = 0.0;
  // d loss / d class logits, H x W x |Omega| (softmax over classes).
  std::vector<double> class_logits;
  // d loss / d transition logits, laid out like TransitionMap::psi() (softmax
  // over the destination height).
  std::vector<double> transition_logits;
  // d loss / d Gamma logits, length H; empty unless gamma is trainable.
  std::vector<double> gamma_logits;
};

// Throws InfeasibleError when P(Y|X') = 0.
Ctc2dGradient Ctc2dGrad(const ProbMap2D& x, const TransitionMap& psi, const Label& y,
                        const Ctc2dGradOptions& options = {});

// Adjoint of the beta-table recursion for either variant. Slower than
// Ctc2dGrad on Simplified maps; kept as the reference the factored kernel is
// checked against.
Ctc2dGradient Ctc2dGradReference(const ProbMap2D& x, const TransitionMap& psi,
                                 const Label& y,
                                 const Ctc2dGradOptions& options = {});

// Per-column class distribution sum_h q_w(h) X'_{h,w,c}, with q_0 = Gamma and
// q_w the height marginal reached through the transition map (for a
// Simplified map, simply psi column w-1).
ProbSeq1D MarginalizeHeights(const ProbMap2D& x, const TransitionMap& psi);

BatchLoss Ctc2dBatchLoss(std::span<const ProbMap2D> xs,
                         std::span<const TransitionMap> psis,
                         std::span<const Label> ys, const LossOptions& options = {});

}  // namespace ctc2d

#endif  // CTC2D_CTC2D_H_
