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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "ctc2d/ctc.h"
#include "ctc2d/ctc2d.h"
#include "ctc2d/oracle.h"
#include "test_util.h"

namespace ctc2d {
namespace {

using testing::Uniform;
constexpr auto kFull = TransitionVariant::kFull;
constexpr auto kSimplified = TransitionVariant::kSimplified;

TEST(Ctc2dTest, HeightOneIsVanilla) {
  testing::Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const int W = Uniform(rng, 1, 10), C = Uniform(rng, 2, 5);
    const ProbMap2D x = testing::RandomMap(rng, 1, W, C);
    const Label y = testing::RandomLabel(rng, W, C);
    const auto v = i % 2 ? kFull : kSimplified;
    const double lp2 = Ctc2dLogProb(x, TransitionMap::Uniform(v, 1, W), y);
    const double lp1 = CtcLogProb(x.Row(0), y);
    if (lp1 == kLogZero) {
      EXPECT_EQ(lp2, kLogZero);
    } else {
      EXPECT_NEAR(lp2, lp1, 1e-10);
    }
  }
}

TEST(Ctc2dTest, SingleColumnClosedForm) {
  const ProbMap2D x(2, 1, 2, {0.5, 0.5, 0.5, 0.5});
  const auto psi = TransitionMap::Uniform(kSimplified, 2, 1);
  EXPECT_NEAR(std::exp(Ctc2dLogProb(x, psi, Label({1}))), 0.5, 1e-15);

  testing::Rng rng(2);
  const ProbMap2D r = testing::RandomMap(rng, 3, 1, 3);
  const TransitionMap g = testing::RandomPsi(rng, kFull, 3, 1);
  double want = 0;
  for (int h = 0; h < 3; ++h) want += g.gamma()[h] * r.prob(h, 0, 2);
  EXPECT_NEAR(std::exp(Ctc2dLogProb(r, g, Label({2}))), want, 1e-15);
}

TEST(Ctc2dTest, TwoByTwoUniformMatchesEnumeration) {
  const ProbMap2D x(2, 2, 2, std::vector<double>(8, 0.5));
  const auto psi = TransitionMap::Uniform(kSimplified, 2, 2);
  // Every (height, class) path has probability 1/16; heights do not affect
  // the collapsed label, so P("A") = 3/4 as in the 1D case.
  EXPECT_NEAR(oracle::Ctc2dProb(x, psi, Label({1})), 0.75, 1e-15);
  EXPECT_NEAR(Ctc2dLoss(x, psi, Label({1})).value, -std::log(0.75), 1e-14);
}

TEST(Ctc2dTest, MatchesOracle) {
  testing::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const int H = Uniform(rng, 1, 3), W = Uniform(rng, 1, 4), C = Uniform(rng, 2, 3);
    const ProbMap2D x = testing::RandomMap(rng, H, W, C);
    const Label y = testing::RandomLabel(rng, 3, C);
    for (auto v : {kFull, kSimplified}) {
      const TransitionMap psi = testing::RandomPsi(rng, v, H, W);
      EXPECT_LE(testing::ProbRelErr(std::exp(Ctc2dLogProb(x, psi, y)),
                                    oracle::Ctc2dProb(x, psi, y)),
                1e-9);
      // The generic table and the fast path agree on Simplified maps too.
      const double a = Ctc2dForward(x, psi, y).log_prob, b = Ctc2dLogProb(x, psi, y);
      if (b == kLogZero) {
        EXPECT_EQ(a, kLogZero);
      } else {
        EXPECT_NEAR(a, b, 1e-12 * (1 + std::abs(b)));
      }
    }
  }
}

TEST(Ctc2dTest, LabelsPartitionProbability) {
  testing::Rng rng(4);
  for (int i = 0; i < 40; ++i) {
    const int H = Uniform(rng, 1, 2), W = Uniform(rng, 1, 3), C = Uniform(rng, 2, 3);
    const ProbMap2D x = testing::RandomMap(rng, H, W, C);
    const TransitionMap psi = testing::RandomPsi(rng, i % 2 ? kFull : kSimplified, H, W);
    double total = 0;
    for (const Label& y : testing::AllLabels(W, C)) total += std::exp(Ctc2dLogProb(x, psi, y));
    EXPECT_NEAR(total, 1.0, 1e-8);
  }
}

TEST(Ctc2dTest, InfeasibleIsFlagged) {
  testing::Rng rng(5);
  const ProbMap2D x = testing::RandomMap(rng, 2, 4, 3);
  const auto psi = TransitionMap::Uniform(kSimplified, 2, 4);
  const Label y({1, 2, 2, 1});
  EXPECT_EQ(Ctc2dLogProb(x, psi, y), kLogZero);
  EXPECT_EQ(Ctc2dForward(x, psi, y).log_prob, kLogZero);
  EXPECT_FALSE(Ctc2dLoss(x, psi, y).feasible);
  EXPECT_THROW(Ctc2dGrad(x, psi, y), InfeasibleError);
}

TEST(Ctc2dTest, BetaTableStartColumn) {
  testing::Rng rng(6);
  const ProbMap2D x = testing::RandomMap(rng, 3, 4, 3);
  const TransitionMap psi = testing::RandomPsi(rng, kFull, 3, 4);
  const Label y({1, 2});
  const auto r = Ctc2dForward(x, psi, y);
  const ExpandedLabel e(y);
  for (int s = 0; s < e.size(); ++s) {
    for (int h = 0; h < 3; ++h) {
      if (s <= 1) {
        EXPECT_NEAR(r.table.at(s, h, 0), std::log(psi.gamma()[h] * x.prob(h, 0, e[s])), 1e-14);
      } else {
        EXPECT_EQ(r.table.at(s, h, 0), kLogZero);
      }
    }
  }
  for (double v : r.table.values) EXPECT_LE(v, 0.0);
}

TEST(Ctc2dTest, DeltaPathHasZeroLossAndGradient) {
  // Heights 0,1,2,1,0 with classes A, A, -, B, B, which collapses to "AB".
  const int H = 3, W = 5, C = 3;
  const int heights[W] = {0, 1, 2, 1, 0};
  const int classes[W] = {1, 1, 0, 2, 2};
  std::vector<double> p(static_cast<size_t>(H) * W * C, 0.0);
  for (int h = 0; h < H; ++h) {
    for (int w = 0; w < W; ++w) {
      // Off-path positions carry arbitrary valid rows.
      const bool on = heights[w] == h;
      for (int c = 0; c < C; ++c) {
        p[(h * W + w) * C + c] = on ? (c == classes[w] ? 1.0 : 0.0) : 1.0 / C;
      }
    }
  }
  const ProbMap2D x(H, W, C, p);
  std::vector<double> psi(static_cast<size_t>(W - 1) * H, 0.0), gamma(H, 0.0);
  for (int w = 0; w + 1 < W; ++w) psi[w * H + heights[w + 1]] = 1.0;
  gamma[heights[0]] = 1.0;
  const TransitionMap t(kSimplified, H, W, psi, gamma);
  const Label y({1, 2});
  EXPECT_EQ(Ctc2dLoss(x, t, y).value, 0.0);
  for (bool reference : {false, true}) {
    const auto g = reference ? Ctc2dGradReference(x, t, y, {.gamma_trainable = true})
                             : Ctc2dGrad(x, t, y, {.gamma_trainable = true});
    double norm = 0;
    for (const auto* v : {&g.class_logits, &g.transition_logits, &g.gamma_logits}) {
      for (double d : *v) norm += d * d;
    }
    EXPECT_LE(std::sqrt(norm), 1e-8);
  }
  // The full expansion of the same map gives the same answer.
  EXPECT_EQ(Ctc2dLoss(x, ExpandSimplified(t), y).value, 0.0);
}

TEST(Ctc2dTest, ExpandSimplifiedPreservesProbability) {
  testing::Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const int H = Uniform(rng, 1, 5), W = Uniform(rng, 1, 8), C = Uniform(rng, 2, 5);
    const ProbMap2D x = testing::RandomMap(rng, H, W, C);
    const TransitionMap psi = testing::RandomPsi(rng, kSimplified, H, W);
    const Label y = testing::RandomLabel(rng, W / 2, C);
    const double a = Ctc2dLogProb(x, psi, y);
    const double b = Ctc2dLogProb(x, ExpandSimplified(psi), y);
    EXPECT_NEAR(a, b, 1e-12 * (1 + std::abs(a)));
  }
}

TEST(Ctc2dTest, HeightPermutationEquivariance) {
  testing::Rng rng(8);
  for (int i = 0; i < 60; ++i) {
    const int H = Uniform(rng, 2, 4), W = Uniform(rng, 1, 6), C = Uniform(rng, 2, 4);
    const ProbMap2D x = testing::RandomMap(rng, H, W, C);
    const auto v = i % 2 ? kFull : kSimplified;
    const TransitionMap psi = testing::RandomPsi(rng, v, H, W);
    const Label y = testing::RandomLabel(rng, W / 2, C);
    std::vector<int> perm(H);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<double> px(x.probs().size()), pt(psi.psi().size()), pg(H);
    for (int h = 0; h < H; ++h) {
      for (int w = 0; w < W; ++w) {
        for (int c = 0; c < C; ++c) px[x.Index(perm[h], w, c)] = x.prob(h, w, c);
      }
      pg[perm[h]] = psi.gamma()[h];
      for (int w = 0; w + 1 < W; ++w) {
        for (int to = 0; to < H; ++to) {
          if (v == kSimplified) {
            pt[w * H + perm[to]] = psi.transition(0, w, to);
          } else {
            for (int from = 0; from < H; ++from) {
              pt[(perm[from] * (W - 1) + w) * H + perm[to]] = psi.transition(from, w, to);
            }
          }
        }
      }
    }
    const double a = Ctc2dLogProb(x, psi, y);
    const double b = Ctc2dLogProb(ProbMap2D(H, W, C, px), TransitionMap(v, H, W, pt, pg), y);
    EXPECT_NEAR(a, b, 1e-12 * (1 + std::abs(a)));
  }
}

TEST(Ctc2dTest, GradientMatchesFiniteDifferences) {
  testing::Rng rng(9);
  int checked = 0;
  for (int i = 0; checked < 80; ++i) {
    const int H = Uniform(rng, 1, 3), W = Uniform(rng, 1, 5), C = Uniform(rng, 2, 3);
    const Label y = testing::RandomLabel(rng, 3, C);
    if (MinWidth(y) > W) continue;
    const auto v = i % 2 ? kFull : kSimplified;
    const auto in = testing::LogitInstance::Random(rng, H, W, C, v, y);
    const auto g = Ctc2dGrad(in.map(in.z), in.psi(in.t, in.gamma), y, {.gamma_trainable = true});
    EXPECT_LE(testing::Ctc2dFdError(in, g), 1e-4) << "H=" << H << " W=" << W << " C=" << C;
    ++checked;
  }
}

TEST(Ctc2dTest, FastGradientMatchesReference) {
  testing::Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    const int H = Uniform(rng, 1, 6), W = Uniform(rng, 1, 12), C = Uniform(rng, 2, 8);
    const Label y = testing::RandomLabel(rng, W / 2, C);
    if (MinWidth(y) > W) continue;
    const ProbMap2D x = testing::RandomMap(rng, H, W, C);
    const TransitionMap psi = testing::RandomPsi(rng, kSimplified, H, W);
    const auto fast = Ctc2dGrad(x, psi, y, {.gamma_trainable = true});
    const auto ref = Ctc2dGradReference(x, psi, y, {.gamma_trainable = true});
    EXPECT_NEAR(fast.loss, ref.loss, 1e-10 * (1 + ref.loss));
    for (size_t k = 0; k < ref.class_logits.size(); ++k) {
      EXPECT_NEAR(fast.class_logits[k], ref.class_logits[k], 1e-10);
    }
    for (size_t k = 0; k < ref.transition_logits.size(); ++k) {
      EXPECT_NEAR(fast.transition_logits[k], ref.transition_logits[k], 1e-10);
    }
    for (size_t k = 0; k < ref.gamma_logits.size(); ++k) {
      EXPECT_NEAR(fast.gamma_logits[k], ref.gamma_logits[k], 1e-10);
    }
  }
}

TEST(Ctc2dTest, HeightOneGradientIsVanilla) {
  testing::Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const int W = Uniform(rng, 1, 10), C = Uniform(rng, 2, 5);
    const Label y = testing::RandomLabel(rng, W / 2, C);
    if (MinWidth(y) > W) continue;
    const ProbMap2D x = testing::RandomMap(rng, 1, W, C);
    const auto g2 = Ctc2dGrad(x, TransitionMap::Uniform(kSimplified, 1, W), y);
    const auto g1 = CtcGrad(x.Row(0), y);
    EXPECT_NEAR(g2.loss, g1.loss, 1e-10);
    for (size_t k = 0; k < g1.logits.size(); ++k) {
      EXPECT_NEAR(g2.class_logits[k], g1.logits[k], 1e-10);
    }
    for (double t : g2.transition_logits) EXPECT_EQ(t, 0.0);
  }
}

TEST(Ctc2dTest, GammaGradientOnlyWhenTrainable) {
  testing::Rng rng(12);
  const ProbMap2D x = testing::RandomMap(rng, 2, 3, 3);
  const auto psi = testing::RandomPsi(rng, kSimplified, 2, 3);
  EXPECT_TRUE(Ctc2dGrad(x, psi, Label({1})).gamma_logits.empty());
  EXPECT_EQ(Ctc2dGrad(x, psi, Label({1}), {.gamma_trainable = true}).gamma_logits.size(), 2u);
}

TEST(Ctc2dTest, MarginalizeHeightsGivesSameLoss) {
  testing::Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const int H = Uniform(rng, 1, 4), W = Uniform(rng, 1, 8), C = Uniform(rng, 2, 5);
    const ProbMap2D x = testing::RandomMap(rng, H, W, C);
    const auto psi = testing::RandomPsi(rng, kSimplified, H, W);
    const Label y = testing::RandomLabel(rng, W / 2, C);
    const double a = Ctc2dLogProb(x, psi, y);
    const double b = CtcLogProb(MarginalizeHeights(x, psi), y);
    if (a == kLogZero) {
      EXPECT_EQ(b, kLogZero);
    } else {
      EXPECT_NEAR(a, b, 1e-12 * (1 + std::abs(a)));
    }
  }
}

TEST(Ctc2dTest, LargeMapsStayFinite) {
  testing::Rng rng(14);
  const ProbMap2D x = testing::RandomMap(rng, 16, 64, 37);
  const auto psi = testing::RandomPsi(rng, kSimplified, 16, 64);
  const Label y = testing::RandomLabel(rng, 20, 37);
  const auto g = Ctc2dGrad(x, psi, y);
  EXPECT_TRUE(std::isfinite(g.loss));
  for (double v : g.class_logits) ASSERT_TRUE(std::isfinite(v));
  EXPECT_NEAR(g.loss, -Ctc2dForward(x, psi, y).log_prob, 1e-9 * g.loss);
}

TEST(Ctc2dTest, ShapeMismatchThrows) {
  testing::Rng rng(15);
  const ProbMap2D x = testing::RandomMap(rng, 2, 3, 3);
  EXPECT_THROW(Ctc2dLogProb(x, TransitionMap::Uniform(kSimplified, 2, 4), Label({1})),
               ShapeError);
  EXPECT_THROW(Ctc2dLogProb(x, TransitionMap::Uniform(kSimplified, 2, 3), Label({3})),
               ShapeError);
}

}  // namespace
}  // namespace ctc2d
