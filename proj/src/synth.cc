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

#include "ctc2d/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ctc2d::synth {
namespace {

constexpr char kSymbols[] = "0123456789abcdefghijklmnopqrstuvwxyz";

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[noreturn]] void Fail(const std::string& field, double value, const std::string& why) {
  throw ValidationError(Violation{field, value, "config field '" + field + "': " + why});
}

int MinTextWidth(const SynthConfig& c, int length) {
  // Leading margin column, one span per symbol, one gap between symbols.
  return 1 + length * c.span_width + std::max(0, length - 1);
}

std::vector<int> Baseline(const SynthConfig& c, std::mt19937_64& rng) {
  const int H = c.height, W = c.width;
  std::vector<int> b(W);
  auto clamp = [H](double v) {
    return std::clamp(static_cast<int>(std::lround(v)), 0, H - 1);
  };
  switch (c.curvature) {
    case Curvature::kFlat: {
      const int level = H >= 3 ? std::uniform_int_distribution<int>(1, H - 2)(rng) : 0;
      std::fill(b.begin(), b.end(), level);
      break;
    }
    case Curvature::kSlanted: {
      std::uniform_real_distribution<double> end(0.0, H - 1.0);
      const double b0 = end(rng), b1 = end(rng);
      for (int w = 0; w < W; ++w) {
        b[w] = clamp(b0 + (b1 - b0) * w / std::max(1, W - 1));
      }
      break;
    }
    case Curvature::kSinusoidal: {
      const double amp = c.amplitude * H;
      const double center = std::uniform_real_distribution<double>(amp, H - 1.0 - amp)(rng);
      const double period = std::uniform_real_distribution<double>(0.5 * W, 1.0 * W)(rng);
      const double phase =
          std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
      for (int w = 0; w < W; ++w) {
        b[w] = clamp(center + amp * std::sin(2.0 * std::numbers::pi * w / period + phase));
      }
      break;
    }
  }
  return b;
}

}  // namespace

std::string ToString(Curvature c) {
  switch (c) {
    case Curvature::kFlat: return "flat";
    case Curvature::kSlanted: return "slanted";
    case Curvature::kSinusoidal: return "sinusoidal";
  }
  return "unknown";
}

Curvature CurvatureFromString(const std::string& name) {
  if (name == "flat") return Curvature::kFlat;
  if (name == "slanted") return Curvature::kSlanted;
  if (name == "sinusoidal") return Curvature::kSinusoidal;
  Fail("curvature", 0.0, "expected flat, slanted or sinusoidal, got '" + name + "'");
}

void Validate(const SynthConfig& c) {
  if (c.height < 1) Fail("height", c.height, "must be >= 1");
  if (c.width < 2) Fail("width", c.width, "must be >= 2");
  if (c.alphabet_size < 1 || c.alphabet_size > 36) {
    Fail("alphabet_size", c.alphabet_size, "must be in [1, 36]");
  }
  if (!(c.noise >= 0.0)) Fail("noise", c.noise, "must be >= 0");
  if (!(c.clutter >= 0.0 && c.clutter <= 1.0)) Fail("clutter", c.clutter, "must be in [0, 1]");
  if (c.min_label < 1 || c.max_label < c.min_label) {
    Fail("min_label", c.min_label, "need 1 <= min_label <= max_label");
  }
  if (c.span_width < 1) Fail("span_width", c.span_width, "must be >= 1");
  if (MinTextWidth(c, c.max_label) > c.width) {
    Fail("max_label", c.max_label,
         "label longer than capacity: needs " + std::to_string(MinTextWidth(c, c.max_label)) +
             " columns, width is " + std::to_string(c.width));
  }
  if (!(c.amplitude >= 0.0) || c.amplitude * c.height > (c.height - 1) / 2.0) {
    Fail("amplitude", c.amplitude, "sinusoid would leave the map");
  }
  if (!(c.bump_width > 0.0)) Fail("bump_width", c.bump_width, "must be > 0");
  if (!(c.contrast_jitter >= 0.0 && c.contrast_jitter < 1.0)) {
    Fail("contrast_jitter", c.contrast_jitter, "must be in [0, 1)");
  }
}

Alphabet SynthAlphabet(int alphabet_size) {
  return Alphabet::WithBlank(std::string(kSymbols, kSymbols + alphabet_size));
}

SynthInstance GenerateOne(const SynthConfig& c, uint64_t index) {
  Validate(c);
  std::mt19937_64 rng(SplitMix(c.seed ^ SplitMix(index)));
  const int H = c.height, W = c.width, K = c.alphabet_size;

  SynthInstance inst;
  inst.height = H;
  inst.width = W;
  inst.channels = NumChannels(c);
  inst.features.assign(static_cast<size_t>(H) * W * inst.channels, 0.0);
  auto at = [&](int h, int w, int f) -> double& {
    return inst.features[(static_cast<size_t>(h) * W + w) * inst.channels + f];
  };

  const int length = std::uniform_int_distribution<int>(c.min_label, c.max_label)(rng);
  std::vector<int> classes(length);
  std::uniform_int_distribution<int> pick_class(1, K);
  for (int& v : classes) v = pick_class(rng);
  inst.label = Label(classes);
  inst.baseline = Baseline(c, rng);

  // Spread the spare columns over the leading margin, the gaps and the tail.
  std::vector<int> extra(length + 1, 0);
  std::uniform_int_distribution<int> pick_slot(0, length);
  for (int s = W - MinTextWidth(c, length); s > 0; --s) ++extra[pick_slot(rng)];
  std::vector<int> span_start(length);
  int col = 1 + extra[0];
  for (int i = 0; i < length; ++i) {
    span_start[i] = col;
    col += c.span_width + 1 + (i + 1 < length ? extra[i + 1] : 0);
  }
  const int text_begin = span_start.front();
  const int text_end = span_start.back() + c.span_width;  // exclusive

  const double gain =
      std::uniform_real_distribution<double>(1.0 - c.contrast_jitter, 1.0 + c.contrast_jitter)(rng);
  auto bump = [&](int h, double center) {
    const double d = (h - center) / c.bump_width;
    return std::exp(-0.5 * d * d);
  };

  for (int w = text_begin; w < text_end; ++w) {
    for (int h = 0; h < H; ++h) at(h, w, kInkChannel) += gain * c.ink * bump(h, inst.baseline[w]);
  }
  for (int i = 0; i < length; ++i) {
    for (int w = span_start[i]; w < span_start[i] + c.span_width; ++w) {
      for (int h = 0; h < H; ++h) {
        at(h, w, classes[i]) += gain * c.evidence * bump(h, inst.baseline[w]);
      }
    }
  }

  // Distractors: isolated single-column characters away from the baseline.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_height(0, H - 1);
  for (int w = 0; w < W; ++w) {
    if (!(unit(rng) < c.clutter)) continue;
    const int cls = pick_class(rng);
    int hc = pick_height(rng);
    for (int tries = 0; tries < 16 && std::abs(hc - inst.baseline[w]) < 2; ++tries) {
      hc = pick_height(rng);
    }
    if (std::abs(hc - inst.baseline[w]) < 2) continue;
    const double peak = gain * c.evidence * c.clutter_strength;
    for (int h = 0; h < H; ++h) {
      at(h, w, cls) += peak * bump(h, hc);
      at(h, w, kInkChannel) += gain * c.ink * c.clutter_strength * bump(h, hc);
    }
  }

  if (c.noise > 0.0) {
    std::normal_distribution<double> gauss(0.0, c.noise);
    for (double& v : inst.features) v += gauss(rng);
  }
  return inst;
}

std::vector<SynthInstance> Generate(const SynthConfig& config, int count,
                                    uint64_t first_index) {
  Validate(config);
  std::vector<SynthInstance> out(std::max(count, 0));
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<size_t>(i)] = GenerateOne(config, first_index + static_cast<uint64_t>(i));
  }
  return out;
}

}  // namespace ctc2d::synth
