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

// OpenMP batch kernels. Items are evaluated in parallel into per-item slots
// and reduced serially in item order, so results are bit-identical to the
// serial entry points in ctc.h / ctc2d.h for any thread count.

#ifndef CTC2D_KERNELS_H_
#define CTC2D_KERNELS_H_

#include <span>
#include <vector>

#include "ctc2d/ctc.h"
#include "ctc2d/ctc2d.h"

namespace ctc2d::omp {

// threads <= 0 uses the OpenMP default.
BatchLoss CtcBatchLoss(std::span<const ProbSeq1D> xs, std::span<const Label> ys,
                       const LossOptions& options = {}, int threads = 0);

BatchLoss Ctc2dBatchLoss(std::span<const ProbMap2D> xs,
                         std::span<const TransitionMap> psis,
                         std::span<const Label> ys, const LossOptions& options = {},
                         int threads = 0);

// Per-item gradients. Throws InfeasibleError for the lowest-index infeasible
// item.
std::vector<CtcGradient> CtcBatchGrad(std::span<const ProbSeq1D> xs,
                                      std::span<const Label> ys, int threads = 0);

std::vector<Ctc2dGradient> Ctc2dBatchGrad(std::span<const ProbMap2D> xs,
                                          std::span<const TransitionMap> psis,
                                          std::span<const Label> ys,
                                          const Ctc2dGradOptions& options = {},
                                          int threads = 0);

int MaxThreads();

}  // namespace ctc2d::omp

#endif  // CTC2D_KERNELS_H_
