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

#include "ctc2d/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include <omp.h>

#include "ctc2d/ctc.h"
#include "ctc2d/ctc2d.h"
#include "ctc2d/decoder.h"

namespace ctc2d::train {
namespace {

// Neighbour weights of the mixing stencil, indexed [dh + 1][dw + 1].
constexpr double kStencil[3][3] = {{0.5, 0.5, 0.5}, {1.0, 0.0, 1.0}, {0.5, 0.5, 0.5}};
constexpr double kStencilNorm = 5.0;

// Runs fn(i) for i in [0, n); the lowest-index exception is rethrown after
// the parallel region.
template <class Fn>
void ParallelFor(size_t n, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 8) num_threads(nt)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<size_t>(i));
    } catch (...) {
      errors[static_cast<size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::string ToString(LossKind kind) { return kind == LossKind::k2D ? "2d" : "vanilla"; }
std::string ToString(HeightCollapse c) { return c == HeightCollapse::kMean ? "mean" : "max"; }

// --- ReadoutModel -------------------------------------------------------------

ReadoutModel::ReadoutModel(int channels, int num_classes)
    : channels_(channels), num_classes_(num_classes) {
  if (channels < 1 || num_classes < 2) throw ShapeError("readout needs channels and classes");
  params_.assign(static_cast<size_t>(num_classes) * (2 * channels + 1) + 2 * channels, 0.0);
}

ReadoutModel ReadoutModel::Random(int channels, int num_classes, uint64_t seed, double scale) {
  ReadoutModel m(channels, num_classes);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  for (double& p : m.params_) p = gauss(rng);
  return m;
}

ReadoutModel ReadoutModel::Identity(const synth::SynthConfig& config, double sharpness) {
  ReadoutModel m(synth::NumChannels(config), config.alphabet_size + 1);
  for (int c = 1; c <= config.alphabet_size; ++c) m.params_[m.class_weight(c, c)] = sharpness;
  m.params_[m.class_bias(kBlank)] = 0.5 * sharpness * config.evidence;
  m.params_[m.transition_weight(synth::kInkChannel)] = sharpness;
  return m;
}

std::vector<double> ReadoutModel::Inputs(const synth::SynthInstance& inst) const {
  if (inst.channels != channels_) throw ShapeError("instance channels do not match the model");
  const int H = inst.height, W = inst.width, F = channels_, I = inputs();
  std::vector<double> phi(static_cast<size_t>(H) * W * I, 0.0);
  for (int h = 0; h < H; ++h) {
    for (int w = 0; w < W; ++w) {
      double* out = &phi[(static_cast<size_t>(h) * W + w) * I];
      for (int f = 0; f < F; ++f) out[f] = inst.feature(h, w, f);
      for (int dh = -1; dh <= 1; ++dh) {
        for (int dw = -1; dw <= 1; ++dw) {
          const double k = kStencil[dh + 1][dw + 1];
          const int hh = h + dh, ww = w + dw;
          if (k == 0.0 || hh < 0 || hh >= H || ww < 0 || ww >= W) continue;
          for (int f = 0; f < F; ++f) out[F + f] += k * inst.feature(hh, ww, f) / kStencilNorm;
        }
      }
    }
  }
  return phi;
}

namespace {

struct Logits {
  std::vector<double> classes;      // [h][w][c]
  std::vector<double> transitions;  // [w][h]
};

Logits ComputeLogits(const ReadoutModel& m, std::span<const double> phi, int H, int W) {
  const int C = m.num_classes(), I = m.inputs();
  const auto p = m.parameters();
  Logits out;
  out.classes.resize(static_cast<size_t>(H) * W * C);
  for (size_t r = 0; r < static_cast<size_t>(H) * W; ++r) {
    const double* x = &phi[r * I];
    for (int c = 0; c < C; ++c) {
      const double* wc = &p[m.class_weight(c, 0)];
      double z = wc[I];
      for (int i = 0; i < I; ++i) z += wc[i] * x[i];
      out.classes[r * C + c] = z;
    }
  }
  out.transitions.resize(static_cast<size_t>(std::max(W - 1, 0)) * H);
  const double* wt = &p[m.transition_weight(0)];
  for (int w = 0; w + 1 < W; ++w) {
    for (int h = 0; h < H; ++h) {
      const double* x = &phi[(static_cast<size_t>(h) * W + w + 1) * I];
      double z = 0.0;
      for (int i = 0; i < I; ++i) z += wt[i] * x[i];
      out.transitions[static_cast<size_t>(w) * H + h] = z;
    }
  }
  return out;
}

ModelOutputs OutputsFromLogits(const Logits& logits, int H, int W, int C) {
  return ModelOutputs{
      ProbMap2D::FromLogits(H, W, C, logits.classes),
      TransitionMap::FromLogits(TransitionVariant::kSimplified, H, W, logits.transitions)};
}

}  // namespace

ModelOutputs ReadoutModel::Forward(const synth::SynthInstance& inst) const {
  const auto phi = Inputs(inst);
  return OutputsFromLogits(ComputeLogits(*this, phi, inst.height, inst.width), inst.height,
                           inst.width, num_classes_);
}

void ReadoutModel::Backward(std::span<const double> phi, int H, int W,
                            std::span<const double> dz, std::span<const double> dt,
                            std::span<double> grad) const {
  const int C = num_classes_, I = inputs();
  for (size_t r = 0; r < static_cast<size_t>(H) * W; ++r) {
    const double* x = &phi[r * I];
    for (int c = 0; c < C; ++c) {
      const double g = dz[r * C + c];
      if (g == 0.0) continue;
      double* wc = &grad[class_weight(c, 0)];
      for (int i = 0; i < I; ++i) wc[i] += g * x[i];
      wc[I] += g;
    }
  }
  if (dt.empty()) return;
  double* wt = &grad[transition_weight(0)];
  for (int w = 0; w + 1 < W; ++w) {
    for (int h = 0; h < H; ++h) {
      const double g = dt[static_cast<size_t>(w) * H + h];
      const double* x = &phi[(static_cast<size_t>(h) * W + w + 1) * I];
      for (int i = 0; i < I; ++i) wt[i] += g * x[i];
    }
  }
}

// --- Height collapse ------------------------------------------------------------

namespace {

// Unnormalised collapsed values and, for max, the winning height per (w, c).
std::vector<double> CollapseRaw(const ProbMap2D& x, HeightCollapse mode,
                                std::vector<int>* argmax) {
  const int H = x.height(), W = x.width(), C = x.num_classes();
  std::vector<double> y(static_cast<size_t>(W) * C, 0.0);
  if (argmax) argmax->assign(y.size(), 0);
  for (int w = 0; w < W; ++w) {
    for (int c = 0; c < C; ++c) {
      const size_t k = static_cast<size_t>(w) * C + c;
      if (mode == HeightCollapse::kMean) {
        double sum = 0.0;
        for (int h = 0; h < H; ++h) sum += x.prob(h, w, c);
        y[k] = sum / H;
      } else {
        int best = 0;
        for (int h = 1; h < H; ++h) {
          if (x.prob(h, w, c) > x.prob(best, w, c)) best = h;
        }
        y[k] = x.prob(best, w, c);
        if (argmax) (*argmax)[k] = best;
      }
    }
  }
  return y;
}

}  // namespace

ProbSeq1D CollapseHeight(const ProbMap2D& x, HeightCollapse mode) {
  return ProbSeq1D::Renormalized(x.width(), x.num_classes(), CollapseRaw(x, mode, nullptr));
}

// --- Loss, gradient, evaluation ---------------------------------------------------

double LossAndGradient(const ReadoutModel& model, const synth::SynthInstance& inst,
                       LossKind kind, HeightCollapse collapse, std::span<double> grad) {
  const int H = inst.height, W = inst.width, C = model.num_classes();
  const auto phi = model.Inputs(inst);
  const Logits logits = ComputeLogits(model, phi, H, W);
  const ModelOutputs out = OutputsFromLogits(logits, H, W, C);

  if (kind == LossKind::k2D) {
    const Ctc2dGradient g = Ctc2dGrad(out.classes, out.transitions, inst.label);
    model.Backward(phi, H, W, g.class_logits, g.transition_logits, grad);
    return g.loss;
  }

  std::vector<int> argmax;
  std::vector<double> raw = CollapseRaw(out.classes, collapse, &argmax);
  const ProbSeq1D seq = ProbSeq1D::Renormalized(W, C, raw);
  const std::vector<double> dx = CtcProbGrad(seq, inst.label);
  const double loss = CtcLoss(seq, inst.label).value;

  // Back through the renormalisation x = y / sum(y), then the collapse.
  std::vector<double> dprob(static_cast<size_t>(H) * W * C, 0.0);
  for (int w = 0; w < W; ++w) {
    double sum = 0.0, dot = 0.0;
    for (int c = 0; c < C; ++c) sum += raw[static_cast<size_t>(w) * C + c];
    for (int c = 0; c < C; ++c) dot += dx[static_cast<size_t>(w) * C + c] * seq.prob(w, c);
    for (int c = 0; c < C; ++c) {
      const size_t k = static_cast<size_t>(w) * C + c;
      const double dy = (dx[k] - dot) / sum;
      if (collapse == HeightCollapse::kMean) {
        for (int h = 0; h < H; ++h) dprob[out.classes.Index(h, w, c)] += dy / H;
      } else {
        dprob[out.classes.Index(argmax[k], w, c)] += dy;
      }
    }
  }
  // Softmax Jacobian per position.
  std::vector<double> dz(dprob.size());
  for (size_t r = 0; r < static_cast<size_t>(H) * W; ++r) {
    double dot = 0.0;
    for (int c = 0; c < C; ++c) dot += out.classes.probs()[r * C + c] * dprob[r * C + c];
    for (int c = 0; c < C; ++c) {
      dz[r * C + c] = out.classes.probs()[r * C + c] * (dprob[r * C + c] - dot);
    }
  }
  model.Backward(phi, H, W, dz, {}, grad);
  return loss;
}

double NormalizedEditDistance(const Label& a, const Label& b) {
  const auto x = a.classes(), y = b.classes();
  std::vector<int> row(y.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (size_t i = 1; i <= x.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (size_t j = 1; j <= y.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  const size_t norm = std::max<size_t>({x.size(), y.size(), 1});
  return static_cast<double>(row[y.size()]) / static_cast<double>(norm);
}

ItemResult EvaluateOne(const ReadoutModel& model, const synth::SynthInstance& inst,
                       LossKind kind, HeightCollapse collapse) {
  const ModelOutputs out = model.Forward(inst);
  if (kind == LossKind::k2D) {
    return {Ctc2dLoss(out.classes, out.transitions, inst.label).value,
            GreedyDecode2D(out.classes, out.transitions).label};
  }
  const ProbSeq1D seq = CollapseHeight(out.classes, collapse);
  return {CtcLoss(seq, inst.label).value, GreedyDecode1D(seq).label};
}

EvalResult Evaluate(const ReadoutModel& model, std::span<const synth::SynthInstance> data,
                    LossKind kind, HeightCollapse collapse, int threads) {
  std::vector<ItemResult> items(data.size());
  ParallelFor(data.size(), threads,
              [&](size_t i) { items[i] = EvaluateOne(model, data[i], kind, collapse); });
  EvalResult r;
  if (data.empty()) return r;
  size_t exact = 0;
  double ned = 0.0, loss = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    if (items[i].decoded == data[i].label) ++exact;
    ned += NormalizedEditDistance(data[i].label, items[i].decoded);
    loss += items[i].loss;
  }
  const double n = static_cast<double>(data.size());
  r.accuracy = static_cast<double>(exact) / n;
  r.edit_distance = ned / n;
  r.mean_loss = loss / n;
  return r;
}

// --- Training ---------------------------------------------------------------------

namespace {

// Mean loss and mean gradient over `indices`; per-item work in parallel,
// reduction in index order.
double BatchGradient(const ReadoutModel& model, std::span<const synth::SynthInstance> data,
                     std::span<const size_t> indices, const TrainHyper& hyper,
                     std::vector<double>& grad) {
  const size_t P = model.parameter_count();
  std::vector<double> per_item(indices.size() * P, 0.0);
  std::vector<double> losses(indices.size());
  ParallelFor(indices.size(), hyper.threads, [&](size_t k) {
    losses[k] = LossAndGradient(model, data[indices[k]], hyper.loss, hyper.collapse,
                                std::span<double>(per_item).subspan(k * P, P));
  });
  grad.assign(P, 0.0);
  double loss = 0.0;
  for (size_t k = 0; k < indices.size(); ++k) {
    loss += losses[k];
    for (size_t p = 0; p < P; ++p) grad[p] += per_item[k * P + p];
  }
  const double n = static_cast<double>(indices.size());
  for (double& g : grad) g /= n;
  return loss / n;
}

double MeanLoss(const ReadoutModel& model, std::span<const synth::SynthInstance> data,
                const TrainHyper& hyper) {
  std::vector<double> losses(data.size());
  ParallelFor(data.size(), hyper.threads, [&](size_t i) {
    losses[i] = EvaluateOne(model, data[i], hyper.loss, hyper.collapse).loss;
  });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return data.empty() ? 0.0 : sum / static_cast<double>(data.size());
}

}  // namespace

TrainReport Train(ReadoutModel& model, std::span<const synth::SynthInstance> train_set,
                  std::span<const synth::SynthInstance> test_set, const TrainHyper& hyper) {
  if (hyper.batch_size < 1) throw ShapeError("batch size must be >= 1");
  if (hyper.epochs < 0) throw ShapeError("epochs must be >= 0");
  TrainReport report;
  report.loss = hyper.loss;
  report.initial = Evaluate(model, test_set, hyper.loss, hyper.collapse, hyper.threads);

  std::mt19937_64 rng(hyper.seed);
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t{0});
  const auto params = model.mutable_parameters();
  std::vector<double> velocity(params.size(), 0.0), grad;
  double step = hyper.step_size;
  const bool full_batch = static_cast<size_t>(hyper.batch_size) >= train_set.size();

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochStats stats;
    stats.epoch = epoch;
    if (hyper.backtrack && full_batch) {
      const double before = BatchGradient(model, train_set, order, hyper, grad);
      const std::vector<double> saved(params.begin(), params.end());
      for (int tries = 0; tries < 40; ++tries) {
        for (size_t p = 0; p < params.size(); ++p) params[p] = saved[p] - step * grad[p];
        if (MeanLoss(model, train_set, hyper) <= before) break;
        std::copy(saved.begin(), saved.end(), params.begin());
        step *= 0.5;
      }
      stats.mean_loss = before;
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      double loss_sum = 0.0;
      for (size_t first = 0; first < order.size(); first += hyper.batch_size) {
        const size_t n = std::min<size_t>(hyper.batch_size, order.size() - first);
        const std::span<const size_t> batch(order.data() + first, n);
        loss_sum += BatchGradient(model, train_set, batch, hyper, grad) * static_cast<double>(n);
        for (size_t p = 0; p < params.size(); ++p) {
          velocity[p] = hyper.momentum * velocity[p] - step * grad[p];
          params[p] += velocity[p];
        }
      }
      stats.mean_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
    }
    if (!std::isfinite(stats.mean_loss)) {
      throw Error("training diverged at epoch " + std::to_string(epoch) +
                  ": non-finite mean loss (" + ToString(hyper.loss) + ")");
    }
    stats.step_size = step;
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(stats);
  }
  report.final_eval = Evaluate(model, test_set, hyper.loss, hyper.collapse, hyper.threads);
  return report;
}

DemoReport RunDemo(const DemoConfig& config) {
  if (config.train_count < 1 || config.test_count < 1) {
    throw ShapeError("demo needs non-empty train and test splits");
  }
  const auto start = std::chrono::steady_clock::now();
  // Test instances continue the stream after the training instances.
  const auto train_set = synth::Generate(config.generator, config.train_count);
  const auto test_set = synth::Generate(config.generator, config.test_count,
                                        static_cast<uint64_t>(config.train_count));
  const ReadoutModel init =
      ReadoutModel::Random(synth::NumChannels(config.generator),
                           config.generator.alphabet_size + 1, config.init_seed,
                           config.init_scale);
  DemoReport report;
  for (LossKind kind : {LossKind::kVanilla, LossKind::k2D}) {
    ReadoutModel model = init;
    TrainHyper hyper = config.hyper;
    hyper.loss = kind;
    (kind == LossKind::k2D ? report.two_d : report.vanilla) =
        Train(model, train_set, test_set, hyper);
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace ctc2d::train
