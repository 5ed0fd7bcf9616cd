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

// Collapse rule and decoders for 1D sequences and 2D maps.
//
// Ties are always broken towards the lowest class index, then the lowest
// height index.

#ifndef CTC2D_DECODER_H_
#define CTC2D_DECODER_H_

#include <optional>
#include <span>
#include <vector>

#include "ctc2d/tensor.h"

namespace ctc2d {

// One (height, class) choice per column. Heights are empty for 1D paths.
struct PathChoice {
  std::vector<int> heights;
  std::vector<int> classes;
};

struct DecodeResult {
  Label label;
  // Greedy: log-probability of the chosen path. Beam: log of the prefix
  // probability.
  double score = 0.0;
  std::optional<PathChoice> path;
};

// Merges adjacent duplicates, then drops blanks.
Label Collapse(std::span<const int> classes);

DecodeResult GreedyDecode1D(const ProbSeq1D& x);

// Per column, picks (h, c) maximising q_w(h) X'_{h,w,c}, where q_0 = Gamma and
// q_w = Psi_hat column w-1 (for a Full map, the row of the height chosen in
// column w-1). Columns are otherwise independent.
DecodeResult GreedyDecode2D(const ProbMap2D& x, const TransitionMap& psi);

// CTC prefix beam search. Results are ranked by prefix probability, best
// first; at most `beam_width` are returned. Throws std::invalid_argument for
// beam_width < 1.
std::vector<DecodeResult> BeamDecode(const ProbSeq1D& x, int beam_width);

// 2D input: each prefix keeps its probability split by the height of the
// current column, so with an unbounded beam the scores are exact P(Y|X') for
// both transition variants.
std::vector<DecodeResult> BeamDecode(const ProbMap2D& x, const TransitionMap& psi,
                                     int beam_width);

}  // namespace ctc2d

#endif  // CTC2D_DECODER_H_
