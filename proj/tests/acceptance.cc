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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Criteria 1-8 are run twice single-threaded; the
// second run only feeds the determinism check.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ctc2d/ctc.h"
#include "ctc2d/ctc2d.h"
#include "ctc2d/decoder.h"
#include "ctc2d/io.h"
#include "ctc2d/kernels.h"
#include "ctc2d/oracle.h"
#include "ctc2d/tensor.h"
#include "ctc2d/trainer.h"
#include "test_util.h"
#include "workload.h"

namespace ctc2d {
namespace {

using testing::Rng;
using testing::Uniform;

constexpr TransitionVariant kVariants[] = {TransitionVariant::kFull,
                                           TransitionVariant::kSimplified};

// FNV-1a over the bit patterns of every value a criterion computes.
class Fingerprint {
 public:
  void Add(double v) { Mix(std::bit_cast<uint64_t>(v)); }
  void Add(std::span<const double> vs) {
    for (double v : vs) Add(v);
  }
  void Add(const Label& y) {
    Mix(static_cast<uint64_t>(y.size()));
    for (int c : y.classes()) Mix(static_cast<uint64_t>(c));
  }
  void Add(const std::string& s) {
    for (char c : s) Mix(static_cast<unsigned char>(c));
  }
  uint64_t value() const { return h_; }

 private:
  void Mix(uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xff;
      h_ *= 1099511628211ull;
    }
  }
  uint64_t h_ = 1469598103934665603ull;
};

struct Outcome {
  bool pass = false;
  std::string detail;
  uint64_t fingerprint = 0;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Label FeasibleLabel(Rng& rng, int max_len, int C, int frames) {
  for (;;) {
    Label y = testing::RandomLabel(rng, max_len, C);
    if (MinWidth(y) <= frames) return y;
  }
}

Outcome OracleVanilla() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  Fingerprint fp;
  double worst = 0.0;
  constexpr int kCount = 1000;
  for (int i = 0; i < kCount; ++i) {
    const int T = Uniform(rng, 1, 5), C = Uniform(rng, 2, 3);
    const ProbSeq1D x = testing::RandomSeq(rng, T, C);
    const Label y = testing::RandomLabel(rng, 3, C);
    const double dp = std::exp(CtcLogProb(x, y));
    const double ref = oracle::CtcProb(x, y);
    worst = std::max(worst, testing::ProbRelErr(dp, ref));
    fp.Add(dp);
    fp.Add(ref);
  }
  const double secs = Seconds(t0);
  return {worst <= 1e-9 && secs < 10.0,
          Format("%d instances, max rel err %.3g, %.2f s", kCount, worst, secs), fp.value()};
}

Outcome OracleTwoD() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  Fingerprint fp;
  double worst = 0.0;
  constexpr int kPerVariant = 500;
  for (TransitionVariant v : kVariants) {
    for (int i = 0; i < kPerVariant; ++i) {
      const int H = Uniform(rng, 1, 3), W = Uniform(rng, 1, 4), C = Uniform(rng, 2, 3);
      const ProbMap2D x = testing::RandomMap(rng, H, W, C);
      const TransitionMap psi = testing::RandomPsi(rng, v, H, W);
      const Label y = testing::RandomLabel(rng, 3, C);
      const double ref = oracle::Ctc2dProb(x, psi, y);
      const double fast = std::exp(Ctc2dLogProb(x, psi, y));
      const double table = std::exp(Ctc2dForward(x, psi, y).log_prob);
      worst = std::max({worst, testing::ProbRelErr(fast, ref),
                        testing::ProbRelErr(table, ref)});
      fp.Add(fast);
      fp.Add(table);
      fp.Add(ref);
    }
  }
  const double secs = Seconds(t0);
  return {worst <= 1e-9 && secs < 60.0,
          Format("%d instances per variant, max rel err %.3g, %.2f s", kPerVariant, worst,
                 secs),
          fp.value()};
}

Outcome HeightOne() {
  Rng rng(303);
  Fingerprint fp;
  double loss_err = 0.0, grad_err = 0.0;
  constexpr int kCount = 1000;
  for (int i = 0; i < kCount; ++i) {
    const int T = Uniform(rng, 1, 8), C = Uniform(rng, 2, 5);
    const ProbSeq1D x = testing::RandomSeq(rng, T, C);
    const Label y = FeasibleLabel(rng, 4, C, T);
    const TransitionMap psi = TransitionMap::Uniform(kVariants[i % 2], 1, T);
    const ProbMap2D map = ProbMap2D::FromSeq(x);
    const double a = CtcLogProb(x, y);
    const double b = Ctc2dLogProb(map, psi, y);
    loss_err = std::max(loss_err, std::abs(a - b));
    const CtcGradient g1 = CtcGrad(x, y);
    const Ctc2dGradient g2 = Ctc2dGrad(map, psi, y);
    for (size_t k = 0; k < g1.logits.size(); ++k) {
      grad_err = std::max(grad_err, std::abs(g1.logits[k] - g2.class_logits[k]));
    }
    fp.Add(a);
    fp.Add(b);
    fp.Add(g2.class_logits);
  }
  return {loss_err <= 1e-10 && grad_err <= 1e-10,
          Format("%d instances, max |dlog p| %.3g, max |dgrad| %.3g", kCount, loss_err,
                 grad_err),
          fp.value()};
}

Outcome Normalization() {
  Rng rng(404);
  Fingerprint fp;
  double worst = 0.0;
  int count = 0;
  for (int i = 0; i < 100; ++i) {
    const int T = Uniform(rng, 1, 5), C = Uniform(rng, 2, 3);
    const ProbSeq1D x = testing::RandomSeq(rng, T, C);
    double sum = 0.0;
    for (const Label& y : testing::AllLabels(T, C)) sum += std::exp(CtcLogProb(x, y));
    worst = std::max(worst, std::abs(sum - 1.0));
    fp.Add(sum);
    ++count;
  }
  for (TransitionVariant v : kVariants) {
    for (int i = 0; i < 100; ++i) {
      const int H = Uniform(rng, 1, 3), W = Uniform(rng, 1, 4), C = Uniform(rng, 2, 3);
      const ProbMap2D x = testing::RandomMap(rng, H, W, C);
      const TransitionMap psi = testing::RandomPsi(rng, v, H, W);
      double sum = 0.0;
      for (const Label& y : testing::AllLabels(W, C)) {
        sum += std::exp(Ctc2dLogProb(x, psi, y));
      }
      worst = std::max(worst, std::abs(sum - 1.0));
      fp.Add(sum);
      ++count;
    }
  }
  return {worst <= 1e-8, Format("%d distributions, max |sum - 1| %.3g", count, worst),
          fp.value()};
}

Outcome GradientCheck() {
  Rng rng(505);
  Fingerprint fp;
  double worst_1d = 0.0, worst_2d = 0.0;
  constexpr int kVanilla = 200, kPerVariant = 100;
  for (int i = 0; i < kVanilla; ++i) {
    const int T = Uniform(rng, 1, 6), C = Uniform(rng, 2, 4);
    const std::vector<double> z = testing::Gaussian(rng, static_cast<size_t>(T) * C);
    const Label y = FeasibleLabel(rng, 3, C, T);
    const CtcGradient g = CtcGrad(ProbSeq1D::FromLogits(T, C, z), y);
    const auto num = testing::NumericGrad(
        [&](auto zz) { return -CtcLogProb(ProbSeq1D::FromLogits(T, C, zz), y); }, z);
    worst_1d = std::max(worst_1d, testing::MaxRelErr(g.logits, num));
    fp.Add(g.logits);
  }
  for (TransitionVariant v : kVariants) {
    for (int i = 0; i < kPerVariant; ++i) {
      const int H = Uniform(rng, 1, 3), W = Uniform(rng, 2, 5), C = Uniform(rng, 2, 4);
      const Label y = FeasibleLabel(rng, 3, C, W);
      const auto in = testing::LogitInstance::Random(rng, H, W, C, v, y);
      const Ctc2dGradient g = Ctc2dGrad(in.map(in.z), in.psi(in.t, in.gamma), in.y,
                                        Ctc2dGradOptions{.gamma_trainable = true});
      worst_2d = std::max(worst_2d, testing::Ctc2dFdError(in, g));
      fp.Add(g.class_logits);
      fp.Add(g.transition_logits);
      fp.Add(g.gamma_logits);
    }
  }
  return {std::max(worst_1d, worst_2d) <= 1e-4,
          Format("%d vanilla + %d 2D instances, max rel err vanilla %.3g, 2D %.3g", kVanilla,
                 2 * kPerVariant, worst_1d, worst_2d),
          fp.value()};
}

// Argmax of an exhaustive label distribution; ties go to the smaller label.
std::pair<Label, double> Argmax(const std::map<Label, double>& dist) {
  std::pair<Label, double> best{Label(), -1.0};
  for (const auto& [y, p] : dist) {
    if (p > best.second) best = {y, p};
  }
  return best;
}

// Planted alignment: runs of blanks and symbols whose collapse is `y`, with
// the spare frames spread over random runs.
std::vector<int> PlantPath(Rng& rng, const Label& y, int frames) {
  // Run k is a blank run for even k and symbol y[k/2] for odd k.
  const int runs = 2 * y.size() + 1;
  std::vector<int> length(static_cast<size_t>(runs), 0);
  int used = 0;
  for (int k = 1; k < runs; k += 2) {
    length[k] = 1;
    if (k >= 3 && y[k / 2] == y[k / 2 - 1]) length[k - 1] = 1;
  }
  for (int n : length) used += n;
  for (; used < frames; ++used) ++length[Uniform(rng, 0, runs - 1)];
  std::vector<int> path;
  for (int k = 0; k < runs; ++k) {
    path.insert(path.end(), length[k], k % 2 == 0 ? kBlank : y[k / 2]);
  }
  return path;
}

Outcome DecodeSoundness() {
  Rng rng(606);
  Fingerprint fp;
  // Wide enough that no prefix is ever pruned at these sizes.
  constexpr int kBeam = 1024;
  int beam_count = 0, beam_wrong = 0;
  double score_err = 0.0;
  auto check = [&](const std::vector<DecodeResult>& beam, std::pair<Label, double> want) {
    ++beam_count;
    if (beam.empty() || !(beam.front().label == want.first)) {
      ++beam_wrong;
      return;
    }
    score_err = std::max(score_err,
                         testing::ProbRelErr(std::exp(beam.front().score), want.second));
    fp.Add(beam.front().label);
    fp.Add(beam.front().score);
  };
  for (int i = 0; i < 100; ++i) {
    const int T = Uniform(rng, 1, 5), C = Uniform(rng, 2, 3);
    const ProbSeq1D x = testing::RandomSeq(rng, T, C);
    check(BeamDecode(x, kBeam), Argmax(oracle::LabelDistribution(x)));
  }
  for (TransitionVariant v : kVariants) {
    for (int i = 0; i < 100; ++i) {
      const int H = Uniform(rng, 1, 3), W = Uniform(rng, 1, 4), C = Uniform(rng, 2, 3);
      const ProbMap2D x = testing::RandomMap(rng, H, W, C);
      const TransitionMap psi = testing::RandomPsi(rng, v, H, W);
      check(BeamDecode(x, psi, kBeam), Argmax(oracle::LabelDistribution(x, psi)));
    }
  }

  int planted = 0, greedy_wrong = 0;
  auto greedy = [&](const DecodeResult& r, const Label& y) {
    ++planted;
    if (!(r.label == y) || r.score != 0.0) ++greedy_wrong;
    fp.Add(r.label);
    fp.Add(r.score);
  };
  for (int i = 0; i < 100; ++i) {
    const int C = Uniform(rng, 2, 6), W = Uniform(rng, 4, 12);
    const Label y = FeasibleLabel(rng, 4, C, W);
    const std::vector<int> path = PlantPath(rng, y, W);
    std::vector<double> p1(static_cast<size_t>(W) * C, 0.0);
    for (int w = 0; w < W; ++w) p1[static_cast<size_t>(w) * C + path[w]] = 1.0;
    greedy(GreedyDecode1D(ProbSeq1D(W, C, p1)), y);

    const int H = Uniform(rng, 1, 4);
    std::vector<int> heights(static_cast<size_t>(W));
    for (int& h : heights) h = Uniform(rng, 0, H - 1);
    std::vector<double> p2(static_cast<size_t>(H) * W * C, 0.0);
    for (int h = 0; h < H; ++h) {
      for (int w = 0; w < W; ++w) {
        p2[(static_cast<size_t>(h) * W + w) * C + (heights[w] == h ? path[w] : kBlank)] = 1.0;
      }
    }
    const ProbMap2D x(H, W, C, std::move(p2));
    std::vector<double> gamma(static_cast<size_t>(H), 0.0);
    gamma[heights[0]] = 1.0;
    std::vector<double> simple(static_cast<size_t>(W - 1) * H, 0.0);
    std::vector<double> full(static_cast<size_t>(H) * (W - 1) * H, 1.0 / H);
    for (int w = 0; w + 1 < W; ++w) {
      simple[static_cast<size_t>(w) * H + heights[w + 1]] = 1.0;
      const size_t row = (static_cast<size_t>(heights[w]) * (W - 1) + w) * H;
      for (int to = 0; to < H; ++to) full[row + to] = to == heights[w + 1] ? 1.0 : 0.0;
    }
    greedy(GreedyDecode2D(x, TransitionMap(TransitionVariant::kSimplified, H, W, simple,
                                           gamma)),
           y);
    greedy(GreedyDecode2D(x, TransitionMap(TransitionVariant::kFull, H, W, full, gamma)),
           y);
  }
  return {beam_wrong == 0 && score_err <= 1e-9 && greedy_wrong == 0,
          Format("beam top-1 %d/%d match (score rel err %.3g), greedy planted %d/%d exact",
                 beam_count - beam_wrong, beam_count, score_err, planted - greedy_wrong,
                 planted),
          fp.value()};
}

Outcome LossOverhead() {
  constexpr int kBatch = 256, kH = 16, kW = 32, kC = 37;
  const bench::Workload wl = bench::MakeWorkload(kBatch, kH, kW, kC, 707);
  Fingerprint fp;
  double vanilla_mean = 0.0, twod_mean = 0.0;
  const double vanilla_ms = bench::MedianMillis(7, [&] {
    vanilla_mean = omp::CtcBatchLoss(wl.seqs, wl.labels, {}, 1).mean;
  });
  const double twod_ms = bench::MedianMillis(7, [&] {
    twod_mean = omp::Ctc2dBatchLoss(wl.maps, wl.simplified, wl.labels, {}, 1).mean;
  });
  fp.Add(vanilla_mean);
  fp.Add(twod_mean);
  const double ratio = twod_ms / vanilla_ms;
  return {ratio <= 5.0 && twod_ms <= 50.0,
          Format("H%d W%d C%d batch %d, vanilla %.2f ms, 2D simplified %.2f ms, ratio %.2f",
                 kH, kW, kC, kBatch, vanilla_ms, twod_ms, ratio),
          fp.value()};
}

Outcome Demo() {
  train::DemoConfig config = io::ReadDemoConfig(CTC2D_DEFAULT_CONFIG);
  config.hyper.threads = 1;
  const train::DemoReport report = train::RunDemo(config);
  const double vanilla = report.vanilla.final_eval.accuracy;
  const double two_d = report.two_d.final_eval.accuracy;
  const double margin = two_d - vanilla;
  Fingerprint fp;
  fp.Add(io::DemoReportToJson(config, report, /*timings=*/false).dump());
  return {margin >= 0.05 && vanilla > 0.5 && two_d > 0.5 && report.seconds <= 600.0,
          Format("%d train / %d test, vanilla %.1f%%, 2D %.1f%%, margin %.1f pp, %.1f s",
                 config.train_count, config.test_count, 100 * vanilla, 100 * two_d,
                 100 * margin, report.seconds),
          fp.value()};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

Outcome Guarded(const Criterion& c) {
  try {
    return c.run();
  } catch (const std::exception& e) {
    return {false, std::string("threw: ") + e.what(), 0};
  }
}

int Main() {
  const std::vector<Criterion> criteria = {
      {"vanilla DP matches brute force", OracleVanilla},
      {"2D DP matches brute force", OracleTwoD},
      {"height-1 2D equals vanilla", HeightOne},
      {"label distributions sum to one", Normalization},
      {"analytic gradients match finite differences", GradientCheck},
      {"decoders match exhaustive search", DecodeSoundness},
      {"2D loss overhead", LossOverhead},
      {"curved-text demo margin", Demo},
  };
  bool all = true;
  std::vector<uint64_t> first;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const Outcome o = Guarded(criteria[i]);
    all = all && o.pass;
    first.push_back(o.fingerprint);
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  int mismatched = 0;
  std::string which;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const Outcome o = Guarded(criteria[i]);
    if (o.fingerprint != first[i] || o.fingerprint == 0) {
      ++mismatched;
      which += " " + std::to_string(i + 1);
    }
  }
  const bool deterministic = mismatched == 0;
  all = all && deterministic;
  std::printf("%s criterion 9 (repeat run is bit-identical): %zu criteria rerun, %d differ%s\n",
              deterministic ? "PASS" : "FAIL", criteria.size(), mismatched,
              deterministic ? "" : (" (" + which.substr(1) + ")").c_str());
  return all ? 0 : 1;
}

}  // namespace
}  // namespace ctc2d

int main() { return ctc2d::Main(); }
