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

#include "ctc2d/ctc2d.h"

#include <cfloat>
#include <cmath>

#include "ctc2d/ctc_core.h"

namespace ctc2d {
namespace {

void CheckInputs(const ProbMap2D& x, const TransitionMap& psi, const Label& y) {
  CheckCompatible(x, psi);
  CheckLabel(y, x.num_classes());
}

// Height weight q_w(h) of a Simplified map.
double HeightWeight(const TransitionMap& psi, int w, int h) {
  return w == 0 ? psi.gamma()[h] : psi.transition(0, w - 1, h);
}
double LogHeightWeight(const TransitionMap& psi, int w, int h) {
  return w == 0 ? psi.log_gamma()[h] : psi.log_transition(0, w - 1, h);
}

// log sum_h q_w(h) X'_{h,w,c}. Summed in linear domain from the stored
// probabilities; falls back to log-sum-exp when that underflows.
double LogMarginal(const ProbMap2D& x, const TransitionMap& psi, int w, int c) {
  double sum = 0.0;
  for (int h = 0; h < x.height(); ++h) sum += HeightWeight(psi, w, h) * x.prob(h, w, c);
  if (sum >= DBL_MIN) return std::log(sum);
  double acc = kLogZero;
  for (int h = 0; h < x.height(); ++h) {
    acc = LogSumExp(acc, LogHeightWeight(psi, w, h) + x.log_prob(h, w, c));
  }
  return acc;
}

// Height-marginalised log emissions restricted to the classes in Y*.
struct MarginalEmissions {
  std::vector<int> slot;     // state -> index into `classes`
  std::vector<int> classes;  // distinct classes of Y*
  std::vector<double> log_emit;  // [w][slot]

  MarginalEmissions(const ProbMap2D& x, const TransitionMap& psi,
                    const ExpandedLabel& ext) {
    std::vector<int> index_of(x.num_classes(), -1);
    slot.resize(ext.size());
    for (int s = 0; s < ext.size(); ++s) {
      if (index_of[ext[s]] < 0) {
        index_of[ext[s]] = static_cast<int>(classes.size());
        classes.push_back(ext[s]);
      }
      slot[s] = index_of[ext[s]];
    }
    const size_t u = classes.size();
    log_emit.resize(static_cast<size_t>(x.width()) * u);
    for (int w = 0; w < x.width(); ++w) {
      for (size_t k = 0; k < u; ++k) log_emit[w * u + k] = LogMarginal(x, psi, w, classes[k]);
    }
  }

  double operator()(int w, int s) const {
    return log_emit[static_cast<size_t>(w) * classes.size() + slot[s]];
  }
};

// Forward and backward tables of the generic recursion.
struct BetaPass {
  const ProbMap2D& x;
  const TransitionMap& psi;
  const ExpandedLabel& ext;
  int states, height, width;
  std::vector<double> fwd;  // [w][s][h], emission included
  std::vector<double> bwd;  // [w][s][h], emission at w excluded

  BetaPass(const ProbMap2D& x_, const TransitionMap& psi_, const ExpandedLabel& ext_)
      : x(x_), psi(psi_), ext(ext_), states(ext_.size()), height(x_.height()),
        width(x_.width()) {}

  size_t Index(int s, int h, int w) const {
    return (static_cast<size_t>(w) * states + s) * height + h;
  }
  bool full() const { return psi.variant() == TransitionVariant::kFull; }
  double log_psi(int from, int w, int to) const {
    return psi.log_transition(full() ? from : 0, w, to);
  }
  double emit(int s, int h, int w) const { return x.log_prob(h, w, ext[s]); }

  // Mass of the predecessors of state s at height j in column w.
  double Incoming(int s, int j, int w) const {
    double in = fwd[Index(s, j, w)];
    if (s >= 1) in = LogSumExp(in, fwd[Index(s - 1, j, w)]);
    if (ext.CanSkip(s)) in = LogSumExp(in, fwd[Index(s - 2, j, w)]);
    return in;
  }

  double RunForward() {
    fwd.assign(static_cast<size_t>(states) * height * width, kLogZero);
    for (int s = 0; s < std::min(states, 2); ++s) {
      for (int h = 0; h < height; ++h) fwd[Index(s, h, 0)] = psi.log_gamma()[h] + emit(s, h, 0);
    }
    std::vector<double> incoming(height);
    for (int w = 1; w < width; ++w) {
      for (int s = 0; s < states; ++s) {
        for (int j = 0; j < height; ++j) incoming[j] = Incoming(s, j, w - 1);
        if (!full()) {
          // Psi_hat does not depend on the source height: reduce once per (s, w).
          const double total = LogSumExp(incoming);
          if (total == kLogZero) continue;
          for (int h = 0; h < height; ++h) {
            fwd[Index(s, h, w)] = total + log_psi(0, w - 1, h) + emit(s, h, w);
          }
        } else {
          for (int h = 0; h < height; ++h) {
            double acc = kLogZero;
            for (int j = 0; j < height; ++j) {
              acc = LogSumExp(acc, incoming[j] + log_psi(j, w - 1, h));
            }
            if (acc != kLogZero) fwd[Index(s, h, w)] = acc + emit(s, h, w);
          }
        }
      }
    }
    double log_p = kLogZero;
    for (int h = 0; h < height; ++h) {
      log_p = LogSumExp(log_p, fwd[Index(states - 1, h, width - 1)]);
      if (states > 1) log_p = LogSumExp(log_p, fwd[Index(states - 2, h, width - 1)]);
    }
    return log_p;
  }

  void RunBackward() {
    bwd.assign(static_cast<size_t>(states) * height * width, kLogZero);
    for (int h = 0; h < height; ++h) {
      bwd[Index(states - 1, h, width - 1)] = 0.0;
      if (states > 1) bwd[Index(states - 2, h, width - 1)] = 0.0;
    }
    std::vector<double> next(height);
    for (int w = width - 2; w >= 0; --w) {
      for (int s = 0; s < states; ++s) {
        // Successor mass at each destination height of column w+1.
        for (int h2 = 0; h2 < height; ++h2) {
          double out = bwd[Index(s, h2, w + 1)] + emit(s, h2, w + 1);
          if (s + 1 < states) {
            out = LogSumExp(out, bwd[Index(s + 1, h2, w + 1)] + emit(s + 1, h2, w + 1));
          }
          if (s + 2 < states && ext.CanSkip(s + 2)) {
            out = LogSumExp(out, bwd[Index(s + 2, h2, w + 1)] + emit(s + 2, h2, w + 1));
          }
          next[h2] = out;
        }
        for (int h = 0; h < height; ++h) {
          double acc = kLogZero;
          for (int h2 = 0; h2 < height; ++h2) {
            acc = LogSumExp(acc, log_psi(h, w, h2) + next[h2]);
          }
          bwd[Index(s, h, w)] = acc;
        }
      }
    }
  }
};

void AddSoftmaxGrad(std::span<const double> probs, std::span<const double> dlogp,
                    std::span<double> out) {
  // d(-log P)/d logits for a softmax row given g = d log P / d log p.
  double mass = 0.0;
  for (double g : dlogp) mass += g;
  for (size_t k = 0; k < probs.size(); ++k) out[k] = probs[k] * mass - dlogp[k];
}

}  // namespace

Ctc2dForwardResult Ctc2dForward(const ProbMap2D& x, const TransitionMap& psi,
                                const Label& y) {
  CheckInputs(x, psi, y);
  const ExpandedLabel ext(y);
  BetaPass pass(x, psi, ext);
  Ctc2dForwardResult result;
  result.log_prob = pass.RunForward();
  if (x.width() < MinWidth(y)) result.log_prob = kLogZero;
  result.table.states = ext.size();
  result.table.height = x.height();
  result.table.width = x.width();
  result.table.values = std::move(pass.fwd);
  return result;
}

double Ctc2dLogProb(const ProbMap2D& x, const TransitionMap& psi, const Label& y) {
  CheckInputs(x, psi, y);
  if (x.width() < MinWidth(y)) return kLogZero;
  const ExpandedLabel ext(y);
  if (psi.variant() == TransitionVariant::kFull) {
    BetaPass pass(x, psi, ext);
    return pass.RunForward();
  }
  const MarginalEmissions emit(x, psi, ext);
  std::vector<double> prev, cur;
  return core::ForwardLogProb(ext, x.width(), emit, prev, cur);
}

LossValue Ctc2dLoss(const ProbMap2D& x, const TransitionMap& psi, const Label& y) {
  const double lp = Ctc2dLogProb(x, psi, y);
  if (lp == kLogZero) return {std::numeric_limits<double>::infinity(), false};
  return {-lp, true};
}

Ctc2dGradient Ctc2dGradReference(const ProbMap2D& x, const TransitionMap& psi,
                                 const Label& y, const Ctc2dGradOptions& options) {
  CheckInputs(x, psi, y);
  const ExpandedLabel ext(y);
  BetaPass pass(x, psi, ext);
  const double log_p = pass.RunForward();
  if (log_p == kLogZero) throw InfeasibleError(MinWidth(y), x.width());
  pass.RunBackward();

  const int H = x.height(), W = x.width(), C = x.num_classes(), S = ext.size();
  // g[h][w][c] = d log P / d log X'_{h,w,c}.
  std::vector<double> g(static_cast<size_t>(H) * W * C, 0.0);
  for (int w = 0; w < W; ++w) {
    for (int s = 0; s < S; ++s) {
      for (int h = 0; h < H; ++h) {
        const size_t i = pass.Index(s, h, w);
        const double post = pass.fwd[i] + pass.bwd[i] - log_p;
        if (post != kLogZero) g[x.Index(h, w, ext[s])] += std::exp(post);
      }
    }
  }

  Ctc2dGradient grad;
  grad.loss = -log_p;
  grad.class_logits.assign(g.size(), 0.0);
  for (size_t r = 0; r < static_cast<size_t>(H) * W; ++r) {
    AddSoftmaxGrad(x.probs().subspan(r * C, C), std::span<const double>(g).subspan(r * C, C),
                   std::span<double>(grad.class_logits).subspan(r * C, C));
  }

  // t[j][w][h] = d log P / d log Psi_{j,w,h}.
  const int cols = W - 1;
  std::vector<double> t(static_cast<size_t>(H) * std::max(cols, 0) * H, 0.0);
  for (int w = 0; w < cols; ++w) {
    for (int s = 0; s < S; ++s) {
      for (int j = 0; j < H; ++j) {
        const double in = pass.Incoming(s, j, w);
        if (in == kLogZero) continue;
        for (int h = 0; h < H; ++h) {
          const double v = in + pass.log_psi(j, w, h) + pass.emit(s, h, w + 1) +
                           pass.bwd[pass.Index(s, h, w + 1)] - log_p;
          if (v != kLogZero) t[(static_cast<size_t>(j) * cols + w) * H + h] += std::exp(v);
        }
      }
    }
  }
  if (psi.variant() == TransitionVariant::kFull) {
    grad.transition_logits.assign(t.size(), 0.0);
    for (size_t r = 0; r < static_cast<size_t>(H) * cols; ++r) {
      AddSoftmaxGrad(psi.psi().subspan(r * H, H), std::span<const double>(t).subspan(r * H, H),
                     std::span<double>(grad.transition_logits).subspan(r * H, H));
    }
  } else {
    std::vector<double> col(static_cast<size_t>(std::max(cols, 0)) * H, 0.0);
    for (int j = 0; j < H; ++j) {
      for (int w = 0; w < cols; ++w) {
        for (int h = 0; h < H; ++h) {
          col[static_cast<size_t>(w) * H + h] += t[(static_cast<size_t>(j) * cols + w) * H + h];
        }
      }
    }
    grad.transition_logits.assign(col.size(), 0.0);
    for (int w = 0; w < cols; ++w) {
      AddSoftmaxGrad(psi.psi().subspan(static_cast<size_t>(w) * H, H),
                     std::span<const double>(col).subspan(static_cast<size_t>(w) * H, H),
                     std::span<double>(grad.transition_logits).subspan(static_cast<size_t>(w) * H, H));
    }
  }

  if (options.gamma_trainable) {
    std::vector<double> m0(H, 0.0);
    for (int h = 0; h < H; ++h) {
      for (int c = 0; c < C; ++c) m0[h] += g[x.Index(h, 0, c)];
    }
    grad.gamma_logits.assign(H, 0.0);
    AddSoftmaxGrad(psi.gamma(), m0, grad.gamma_logits);
  }
  return grad;
}

Ctc2dGradient Ctc2dGrad(const ProbMap2D& x, const TransitionMap& psi, const Label& y,
                        const Ctc2dGradOptions& options) {
  if (psi.variant() == TransitionVariant::kFull) {
    return Ctc2dGradReference(x, psi, y, options);
  }
  CheckInputs(x, psi, y);
  const ExpandedLabel ext(y);
  const int H = x.height(), W = x.width(), C = x.num_classes(), S = ext.size();
  const MarginalEmissions emit(x, psi, ext);
  std::vector<double> alpha, beta;
  const double log_p = core::Forward(ext, W, emit, alpha);
  if (log_p == kLogZero) throw InfeasibleError(MinWidth(y), W);
  core::Backward(ext, W, emit, beta);

  // Occupancy of each label class at each column, in log domain.
  const size_t U = emit.classes.size();
  std::vector<double> occ(static_cast<size_t>(W) * U, kLogZero);
  for (int s = 0; s < S; ++s) {
    for (int w = 0; w < W; ++w) {
      double& slot = occ[w * U + emit.slot[s]];
      slot = LogSumExp(slot, alpha[static_cast<size_t>(s) * W + w] +
                                 beta[static_cast<size_t>(s) * W + w]);
    }
  }

  // The posterior of (h, c) at column w splits the column occupancy of c in
  // proportion to q_w(h) X'_{h,w,c}.
  Ctc2dGradient grad;
  grad.loss = -log_p;
  grad.class_logits.assign(static_cast<size_t>(H) * W * C, 0.0);
  std::vector<double> m(static_cast<size_t>(H) * W, 0.0);  // [w][h]
  std::vector<double> g(C);
  for (int w = 0; w < W; ++w) {
    for (int h = 0; h < H; ++h) {
      std::fill(g.begin(), g.end(), 0.0);
      const double lq = LogHeightWeight(psi, w, h);
      for (size_t k = 0; k < U; ++k) {
        const double o = occ[w * U + k];
        if (o == kLogZero) continue;
        const int c = emit.classes[k];
        const double v = o - log_p + lq + x.log_prob(h, w, c) - emit.log_emit[w * U + k];
        if (v != kLogZero) g[c] = std::exp(v);
      }
      const size_t base = x.Index(h, w, 0);
      AddSoftmaxGrad(x.probs().subspan(base, C), g,
                     std::span<double>(grad.class_logits).subspan(base, C));
      double mass = 0.0;
      for (double v : g) mass += v;
      m[static_cast<size_t>(w) * H + h] = mass;
    }
  }
  const int cols = W - 1;
  grad.transition_logits.assign(static_cast<size_t>(std::max(cols, 0)) * H, 0.0);
  for (int w = 0; w < cols; ++w) {
    AddSoftmaxGrad(psi.psi().subspan(static_cast<size_t>(w) * H, H),
                   std::span<const double>(m).subspan(static_cast<size_t>(w + 1) * H, H),
                   std::span<double>(grad.transition_logits).subspan(static_cast<size_t>(w) * H, H));
  }
  if (options.gamma_trainable) {
    grad.gamma_logits.assign(H, 0.0);
    AddSoftmaxGrad(psi.gamma(), std::span<const double>(m).subspan(0, H), grad.gamma_logits);
  }
  return grad;
}

ProbSeq1D MarginalizeHeights(const ProbMap2D& x, const TransitionMap& psi) {
  CheckCompatible(x, psi);
  const int H = x.height(), W = x.width(), C = x.num_classes();
  std::vector<double> q(psi.gamma().begin(), psi.gamma().end());
  std::vector<double> next(H);
  std::vector<double> out(static_cast<size_t>(W) * C, 0.0);
  for (int w = 0; w < W; ++w) {
    if (w > 0) {
      for (int h = 0; h < H; ++h) {
        if (psi.variant() == TransitionVariant::kFull) {
          double acc = 0.0;
          for (int j = 0; j < H; ++j) acc += q[j] * psi.transition(j, w - 1, h);
          next[h] = acc;
        } else {
          next[h] = psi.transition(0, w - 1, h);
        }
      }
      q.swap(next);
    }
    for (int h = 0; h < H; ++h) {
      for (int c = 0; c < C; ++c) out[static_cast<size_t>(w) * C + c] += q[h] * x.prob(h, w, c);
    }
  }
  return ProbSeq1D::Renormalized(W, C, std::move(out));
}

BatchLoss Ctc2dBatchLoss(std::span<const ProbMap2D> xs,
                         std::span<const TransitionMap> psis,
                         std::span<const Label> ys, const LossOptions& options) {
  if (xs.size() != ys.size() || xs.size() != psis.size()) {
    throw ShapeError("batch inputs, transition maps and labels differ in size");
  }
  BatchLoss out;
  out.items.resize(xs.size());
  double sum = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const LossValue v = Ctc2dLoss(xs[i], psis[i], ys[i]);
    if (!v.feasible) {
      if (options.policy == InfeasiblePolicy::kStrict) {
        throw InfeasibleError(MinWidth(ys[i]), xs[i].width());
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
