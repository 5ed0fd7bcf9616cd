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

// Desk-scale training demo: a tiny linear readout over synthetic feature grids,
// trained by gradient descent with either vanilla CTC (after collapsing the
// height axis) or 2D-CTC, then scored by exact-match accuracy.

#ifndef CTC2D_TRAINER_H_
#define CTC2D_TRAINER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ctc2d/synth.h"
#include "ctc2d/tensor.h"

namespace ctc2d::train {

enum class LossKind { kVanilla, k2D };
enum class HeightCollapse { kMean, kMax };

std::string ToString(LossKind kind);
std::string ToString(HeightCollapse collapse);

struct ModelOutputs {
  ProbMap2D classes;
  TransitionMap transitions;  // Simplified, uniform Gamma
};

// Per-position linear readout over [raw features; stencil-mixed features].
// The stencil is a fixed 3x3 neighbourhood average (centre excluded), giving
// each position a view of its surroundings.
//
//   class logits       z[h][w][c] = Wc[c] . phi(h, w) + bc[c]
//   transition logits  t[w][h]    = wt . phi(h, w + 1)
class ReadoutModel {
 public:
  ReadoutModel(int channels, int num_classes);

  // Small Gaussian weights.
  static ReadoutModel Random(int channels, int num_classes, uint64_t seed,
                             double scale = 0.01);
  // Hand-set weights that read the synth channels directly: class c follows
  // evidence channel c, blank wins where evidence is below half the peak,
  // transitions follow the ink channel.
  static ReadoutModel Identity(const synth::SynthConfig& config, double sharpness = 10.0);

  int channels() const { return channels_; }
  int num_classes() const { return num_classes_; }
  int inputs() const { return 2 * channels_; }
  size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  std::span<double> mutable_parameters() { return params_; }

  // phi for every position, [h][w][2F].
  std::vector<double> Inputs(const synth::SynthInstance& inst) const;
  ModelOutputs Forward(const synth::SynthInstance& inst) const;

  // Accumulates d loss / d params given logit gradients.
  void Backward(std::span<const double> phi, int height, int width,
                std::span<const double> class_logit_grad,
                std::span<const double> transition_logit_grad,
                std::span<double> param_grad) const;

  size_t class_weight(int c, int i) const { return static_cast<size_t>(c) * (inputs() + 1) + i; }
  size_t class_bias(int c) const { return class_weight(c, inputs()); }
  size_t transition_weight(int i) const {
    return static_cast<size_t>(num_classes_) * (inputs() + 1) + i;
  }

 private:
  int channels_;
  int num_classes_;
  std::vector<double> params_;
};

// Collapses a 2D map to a sequence over the height axis and renormalises.
ProbSeq1D CollapseHeight(const ProbMap2D& x, HeightCollapse mode);

struct TrainHyper {
  LossKind loss = LossKind::k2D;
  HeightCollapse collapse = HeightCollapse::kMean;
  double step_size = 0.1;
  double momentum = 0.9;
  int epochs = 10;
  int batch_size = 32;
  uint64_t seed = 1;
  // With full-batch descent: undo a step that raised the loss and halve the
  // step size.
  bool backtrack = false;
  int threads = 0;
};

struct EvalResult {
  double accuracy = 0.0;
  double edit_distance = 0.0;  // mean normalised
  double mean_loss = 0.0;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double step_size = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  LossKind loss = LossKind::k2D;
  EvalResult initial;
  std::vector<EpochStats> epochs;
  EvalResult final_eval;
};

// Levenshtein distance over max(|a|, |b|, 1).
double NormalizedEditDistance(const Label& a, const Label& b);

// Loss and decoded label for one instance.
struct ItemResult {
  double loss = 0.0;
  Label decoded;
};
ItemResult EvaluateOne(const ReadoutModel& model, const synth::SynthInstance& inst,
                       LossKind kind, HeightCollapse collapse = HeightCollapse::kMean);

EvalResult Evaluate(const ReadoutModel& model, std::span<const synth::SynthInstance> data,
                    LossKind kind, HeightCollapse collapse = HeightCollapse::kMean,
                    int threads = 0);

// Loss of one instance and its gradient w.r.t. the model parameters.
double LossAndGradient(const ReadoutModel& model, const synth::SynthInstance& inst,
                       LossKind kind, HeightCollapse collapse, std::span<double> param_grad);

// Throws Error on a non-finite loss.
TrainReport Train(ReadoutModel& model, std::span<const synth::SynthInstance> train_set,
                  std::span<const synth::SynthInstance> test_set, const TrainHyper& hyper);

// End-to-end comparison: one generated train/test split, one initial model,
// trained once with each loss kind under the same hyper-parameters.
struct DemoConfig {
  synth::SynthConfig generator;
  int train_count = 2000;
  int test_count = 500;
  uint64_t init_seed = 7;
  double init_scale = 0.01;
  TrainHyper hyper;  // `loss` is ignored; both kinds are run
};

struct DemoReport {
  TrainReport vanilla;
  TrainReport two_d;
  double seconds = 0.0;
};

DemoReport RunDemo(const DemoConfig& config);

}  // namespace ctc2d::train

#endif  // CTC2D_TRAINER_H_
