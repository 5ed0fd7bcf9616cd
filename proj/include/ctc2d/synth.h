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

// Seeded generator of toy scene-text instances: feature grids with character
// evidence laid along flat, slanted or sinusoidal baselines, plus optional
// noise and off-baseline distractors.
//
// Channel layout (F = alphabet_size + 2):
//   0                  ink: where stroke-like evidence is present
//   1 .. alphabet_size evidence for class c (channel index == class index)
//   alphabet_size + 1  pure noise

#ifndef CTC2D_SYNTH_H_
#define CTC2D_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ctc2d/tensor.h"

namespace ctc2d::synth {

enum class Curvature { kFlat, kSlanted, kSinusoidal };

std::string ToString(Curvature c);
Curvature CurvatureFromString(const std::string& name);

struct SynthConfig {
  uint64_t seed = 1;
  int height = 8;
  int width = 24;
  int alphabet_size = 10;
  Curvature curvature = Curvature::kSinusoidal;
  double noise = 0.0;    // Gaussian sigma added to every feature
  double clutter = 0.0;  // per-column probability of a distractor
  int min_label = 3;
  int max_label = 5;
  int span_width = 2;        // columns of evidence per symbol
  double amplitude = 0.3;    // sinusoid amplitude as a fraction of the height
  double bump_width = 0.6;   // vertical std-dev of an evidence bump, in cells
  double evidence = 1.0;     // peak character evidence
  double ink = 1.0;          // peak ink along the text line
  double contrast_jitter = 0.0;   // per-instance gain drawn from [1-j, 1+j]
  double clutter_strength = 1.0;  // distractor peak relative to `evidence`
};

// Throws ValidationError naming the offending field.
void Validate(const SynthConfig& config);

inline constexpr int kInkChannel = 0;
inline int NumChannels(const SynthConfig& c) { return c.alphabet_size + 2; }

// "-0123456789abc..." truncated to alphabet_size real symbols.
Alphabet SynthAlphabet(int alphabet_size);

struct SynthInstance {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> features;  // [h][w][f]
  Label label;
  std::vector<int> baseline;  // per-column true height, diagnostics only

  double feature(int h, int w, int f) const {
    return features[(static_cast<size_t>(h) * width + w) * channels + f];
  }
};

// Instance `index` of the stream defined by `config`; a pure function of both.
SynthInstance GenerateOne(const SynthConfig& config, uint64_t index);

// Instances first_index .. first_index + count - 1.
std::vector<SynthInstance> Generate(const SynthConfig& config, int count,
                                    uint64_t first_index = 0);

}  // namespace ctc2d::synth

#endif  // CTC2D_SYNTH_H_
