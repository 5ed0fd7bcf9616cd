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

// Random loss workload shared by the benchmark and the acceptance timing check.

#ifndef CTC2D_BENCH_WORKLOAD_H_
#define CTC2D_BENCH_WORKLOAD_H_

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <random>
#include <vector>

#include "ctc2d/tensor.h"

namespace ctc2d::bench {

struct Workload {
  std::vector<ProbSeq1D> seqs;
  std::vector<ProbMap2D> maps;
  std::vector<TransitionMap> simplified;
  std::vector<TransitionMap> full;
  std::vector<Label> labels;
};

// `batch` items of an H x W map over C classes with random logits, labels of
// 1 .. W/3 symbols; the sequence inputs are H=1 rows of the same shape.
inline Workload MakeWorkload(int batch, int H, int W, int C, uint64_t seed,
                             bool with_full = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 2.0);
  std::uniform_int_distribution<int> cls(1, C - 1), len(1, std::max(1, W / 3));
  Workload wl;
  for (int b = 0; b < batch; ++b) {
    std::vector<double> z(static_cast<size_t>(H) * W * C);
    for (double& v : z) v = gauss(rng);
    wl.maps.push_back(ProbMap2D::FromLogits(H, W, C, z));
    wl.seqs.push_back(ProbSeq1D::FromLogits(
        W, C, std::span<const double>(z).subspan(0, static_cast<size_t>(W) * C)));
    std::vector<double> t(static_cast<size_t>(W - 1) * H);
    for (double& v : t) v = gauss(rng);
    wl.simplified.push_back(
        TransitionMap::FromLogits(TransitionVariant::kSimplified, H, W, t));
    if (with_full) {
      std::vector<double> f(static_cast<size_t>(H) * (W - 1) * H);
      for (double& v : f) v = gauss(rng);
      wl.full.push_back(TransitionMap::FromLogits(TransitionVariant::kFull, H, W, f));
    }
    std::vector<int> y(static_cast<size_t>(len(rng)));
    for (int& c : y) c = cls(rng);
    wl.labels.emplace_back(std::move(y));
  }
  return wl;
}

// Median wall-clock milliseconds of `reps` calls after one warm-up call.
template <class Fn>
double MedianMillis(int reps, Fn&& fn) {
  fn();
  std::vector<double> ms;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                     .count());
  }
  std::nth_element(ms.begin(), ms.begin() + ms.size() / 2, ms.end());
  return ms[ms.size() / 2];
}

}  // namespace ctc2d::bench

#endif  // CTC2D_BENCH_WORKLOAD_H_
