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

#include "ctc2d/kernels.h"

#include <omp.h>

#include <exception>

#include <limits>
#include <optional>

namespace ctc2d::omp {
namespace {

int Resolve(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

// Runs `fn(i)` for every item; rethrows the exception of the lowest failing
// index after the parallel region.
template <class Fn>
void ForEachItem(size_t n, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4) num_threads(Resolve(threads))
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

BatchLoss Reduce(std::vector<LossValue> values, std::span<const Label> ys,
                 auto&& available, const LossOptions& options) {
  BatchLoss out;
  out.items.resize(values.size());
  double sum = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (!values[i].feasible) {
      if (options.policy == InfeasiblePolicy::kStrict) {
        throw InfeasibleError(MinWidth(ys[i]), available(i));
      }
      ++out.infeasible;
      out.items[i] = options.clamp;
    } else {
      out.items[i] = values[i].value;
    }
    sum += out.items[i];
  }
  out.mean = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
  return out;
}

}  // namespace

int MaxThreads() { return omp_get_max_threads(); }

BatchLoss CtcBatchLoss(std::span<const ProbSeq1D> xs, std::span<const Label> ys,
                       const LossOptions& options, int threads) {
  if (xs.size() != ys.size()) throw ShapeError("batch inputs and labels differ in size");
  std::vector<LossValue> values(xs.size());
  ForEachItem(xs.size(), threads, [&](size_t i) { values[i] = CtcLoss(xs[i], ys[i]); });
  return Reduce(std::move(values), ys, [&](size_t i) { return xs[i].frames(); }, options);
}

BatchLoss Ctc2dBatchLoss(std::span<const ProbMap2D> xs,
                         std::span<const TransitionMap> psis,
                         std::span<const Label> ys, const LossOptions& options,
                         int threads) {
  if (xs.size() != ys.size() || xs.size() != psis.size()) {
    throw ShapeError("batch inputs, transition maps and labels differ in size");
  }
  std::vector<LossValue> values(xs.size());
  ForEachItem(xs.size(), threads,
              [&](size_t i) { values[i] = Ctc2dLoss(xs[i], psis[i], ys[i]); });
  return Reduce(std::move(values), ys, [&](size_t i) { return xs[i].width(); }, options);
}

std::vector<CtcGradient> CtcBatchGrad(std::span<const ProbSeq1D> xs,
                                      std::span<const Label> ys, int threads) {
  if (xs.size() != ys.size()) throw ShapeError("batch inputs and labels differ in size");
  std::vector<CtcGradient> out(xs.size());
  ForEachItem(xs.size(), threads, [&](size_t i) { out[i] = CtcGrad(xs[i], ys[i]); });
  return out;
}

std::vector<Ctc2dGradient> Ctc2dBatchGrad(std::span<const ProbMap2D> xs,
                                          std::span<const TransitionMap> psis,
                                          std::span<const Label> ys,
                                          const Ctc2dGradOptions& options,
                                          int threads) {
  if (xs.size() != ys.size() || xs.size() != psis.size()) {
    throw ShapeError("batch inputs, transition maps and labels differ in size");
  }
  std::vector<Ctc2dGradient> out(xs.size());
  ForEachItem(xs.size(), threads,
              [&](size_t i) { out[i] = Ctc2dGrad(xs[i], psis[i], ys[i], options); });
  return out;
}

}  // namespace ctc2d::omp
