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

// Brute-force references for tiny instances. Every path is enumerated and its
// probability multiplied out in linear domain, sharing no code with the
// log-domain dynamic programs they check.

#ifndef CTC2D_ORACLE_H_
#define CTC2D_ORACLE_H_

#include <map>
#include <vector>

#include "ctc2d/tensor.h"

namespace ctc2d::oracle {

// Size guards; exceeding one throws std::length_error.
inline constexpr int kMaxFrames1D = 8;
inline constexpr int kMaxClasses1D = 4;
inline constexpr int kMaxHeight2D = 3;
inline constexpr int kMaxWidth2D = 5;
inline constexpr int kMaxClasses2D = 3;

struct EnumeratedPath {
  std::vector<int> heights;  // empty for 1D
  std::vector<int> classes;
  double probability = 0.0;
  Label label;
};

double CtcProb(const ProbSeq1D& x, const Label& y);
double Ctc2dProb(const ProbMap2D& x, const TransitionMap& psi, const Label& y);

// P(y|.) for every label reachable by some path (zero-probability paths
// included, so every collapsible label appears).
std::map<Label, double> LabelDistribution(const ProbSeq1D& x);
std::map<Label, double> LabelDistribution(const ProbMap2D& x, const TransitionMap& psi);

// Sum of all path probabilities, regardless of label.
double TotalPathMass(const ProbSeq1D& x);
double TotalPathMass(const ProbMap2D& x, const TransitionMap& psi);

// Maximum-probability path. Paths are visited in lexicographic order of their
// per-column (class, height) choices and only a strictly larger probability
// replaces the incumbent, matching the decoders' tie-breaking.
EnumeratedPath BestPath(const ProbSeq1D& x);
EnumeratedPath BestPath(const ProbMap2D& x, const TransitionMap& psi);

// Linear-domain probability of a fixed 2D path.
double PathProbability(const ProbMap2D& x, const TransitionMap& psi,
                       const std::vector<int>& heights, const std::vector<int>& classes);

}  // namespace ctc2d::oracle

#endif  // CTC2D_ORACLE_H_
