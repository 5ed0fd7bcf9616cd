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

#include "ctc2d/oracle.h"

#include <stdexcept>
#include <string>

namespace ctc2d::oracle {
namespace {

void Guard1D(const ProbSeq1D& x) {
  if (x.frames() > kMaxFrames1D || x.num_classes() > kMaxClasses1D) {
    throw std::length_error("1D oracle limited to T <= " + std::to_string(kMaxFrames1D) +
                            " and |Omega| <= " + std::to_string(kMaxClasses1D));
  }
}

void Guard2D(const ProbMap2D& x, const TransitionMap& psi) {
  CheckCompatible(x, psi);
  if (x.height() > kMaxHeight2D || x.width() > kMaxWidth2D ||
      x.num_classes() > kMaxClasses2D) {
    throw std::length_error("2D oracle limited to H <= 3, W <= 5 and |Omega| <= 3");
  }
}

// Plain collapse rule, written out again here on purpose: merge repeats, then
// drop blanks.
Label CollapsePath(const std::vector<int>& classes) {
  std::vector<int> merged;
  for (size_t i = 0; i < classes.size(); ++i) {
    if (i == 0 || classes[i] != classes[i - 1]) merged.push_back(classes[i]);
  }
  std::vector<int> out;
  for (int c : merged) {
    if (c != kBlank) out.push_back(c);
  }
  return Label(out);
}

// Visits every digit string of length `len` over base `base` in lexicographic
// order (first position most significant).
template <class Fn>
void Odometer(int len, int base, Fn&& fn) {
  std::vector<int> digits(len, 0);
  while (true) {
    fn(digits);
    int i = len - 1;
    while (i >= 0 && ++digits[i] == base) digits[i--] = 0;
    if (i < 0) return;
  }
}

template <class Fn>
void Enumerate1D(const ProbSeq1D& x, Fn&& fn) {
  Guard1D(x);
  Odometer(x.frames(), x.num_classes(), [&](const std::vector<int>& classes) {
    double p = 1.0;
    for (int t = 0; t < x.frames(); ++t) p *= x.prob(t, classes[t]);
    fn(classes, p);
  });
}

// Digit d encodes class d / H and height d % H, so lexicographic digit order
// is (class, height) order per column.
template <class Fn>
void Enumerate2D(const ProbMap2D& x, const TransitionMap& psi, Fn&& fn) {
  Guard2D(x, psi);
  const int H = x.height();
  std::vector<int> heights(x.width()), classes(x.width());
  Odometer(x.width(), H * x.num_classes(), [&](const std::vector<int>& digits) {
    for (int w = 0; w < x.width(); ++w) {
      classes[w] = digits[w] / H;
      heights[w] = digits[w] % H;
    }
    fn(heights, classes, PathProbability(x, psi, heights, classes));
  });
}

}  // namespace

double PathProbability(const ProbMap2D& x, const TransitionMap& psi,
                       const std::vector<int>& heights, const std::vector<int>& classes) {
  double p = psi.gamma()[heights[0]];
  for (int w = 0; w < x.width(); ++w) {
    p *= x.prob(heights[w], w, classes[w]);
    if (w + 1 < x.width()) p *= psi.transition(heights[w], w, heights[w + 1]);
  }
  return p;
}

double CtcProb(const ProbSeq1D& x, const Label& y) {
  double total = 0.0;
  Enumerate1D(x, [&](const std::vector<int>& classes, double p) {
    if (CollapsePath(classes) == y) total += p;
  });
  return total;
}

double Ctc2dProb(const ProbMap2D& x, const TransitionMap& psi, const Label& y) {
  double total = 0.0;
  Enumerate2D(x, psi, [&](const std::vector<int>&, const std::vector<int>& classes, double p) {
    if (CollapsePath(classes) == y) total += p;
  });
  return total;
}

std::map<Label, double> LabelDistribution(const ProbSeq1D& x) {
  std::map<Label, double> out;
  Enumerate1D(x, [&](const std::vector<int>& classes, double p) {
    out[CollapsePath(classes)] += p;
  });
  return out;
}

std::map<Label, double> LabelDistribution(const ProbMap2D& x, const TransitionMap& psi) {
  std::map<Label, double> out;
  Enumerate2D(x, psi, [&](const std::vector<int>&, const std::vector<int>& classes, double p) {
    out[CollapsePath(classes)] += p;
  });
  return out;
}

double TotalPathMass(const ProbSeq1D& x) {
  double total = 0.0;
  Enumerate1D(x, [&](const std::vector<int>&, double p) { total += p; });
  return total;
}

double TotalPathMass(const ProbMap2D& x, const TransitionMap& psi) {
  double total = 0.0;
  Enumerate2D(x, psi, [&](const std::vector<int>&, const std::vector<int>&, double p) {
    total += p;
  });
  return total;
}

EnumeratedPath BestPath(const ProbSeq1D& x) {
  EnumeratedPath best;
  best.probability = -1.0;
  Enumerate1D(x, [&](const std::vector<int>& classes, double p) {
    if (p > best.probability) {
      best.classes = classes;
      best.probability = p;
    }
  });
  best.label = CollapsePath(best.classes);
  return best;
}

EnumeratedPath BestPath(const ProbMap2D& x, const TransitionMap& psi) {
  EnumeratedPath best;
  best.probability = -1.0;
  Enumerate2D(x, psi, [&](const std::vector<int>& heights, const std::vector<int>& classes,
                          double p) {
    if (p > best.probability) {
      best.heights = heights;
      best.classes = classes;
      best.probability = p;
    }
  });
  best.label = CollapsePath(best.classes);
  return best;
}

}  // namespace ctc2d::oracle
