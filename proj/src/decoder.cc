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

#include "ctc2d/decoder.h"

#include <algorithm>
#include <map>
#include <stdexcept>


namespace ctc2d {
namespace {

// Prefix probabilities split by the height of the last column. A 1D
// sequence uses a single lane.
struct PrefixScore {
  std::vector<double> blank;      // ends in blank
  std::vector<double> non_blank;  // ends in the prefix's last symbol
  explicit PrefixScore(int lanes = 1)
      : blank(static_cast<size_t>(lanes), kLogZero),
        non_blank(static_cast<size_t>(lanes), kLogZero) {}
  double total() const {
    double out = kLogZero;
    for (size_t h = 0; h < blank.size(); ++h) {
      out = LogSumExp(out, LogSumExp(blank[h], non_blank[h]));
    }
    return out;
  }
};

// Best first; equal scores fall back to the shorter, then lexicographically
// smaller prefix.
bool Better(const std::pair<std::vector<int>, double>& a,
            const std::pair<std::vector<int>, double>& b) {
  if (a.second != b.second) return a.second > b.second;
  if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
  return a.first < b.first;
}

// `emit(t, h, c)` is the log-probability of class c at lane h in frame t.
// `carry(t, in, out)` maps per-lane mass after frame t-1 to the mass entering
// each lane at frame t; for t == 0 it ignores `in` and writes the initial
// lane distribution.
std::vector<DecodeResult> PrefixSearch(int frames, int lanes, int classes,
                                       auto&& emit, auto&& carry,
                                       int beam_width) {
  if (beam_width < 1) throw std::invalid_argument("beam width must be at least 1");
  using Beam = std::map<std::vector<int>, PrefixScore>;
  const size_t n = static_cast<size_t>(lanes);
  Beam beam;
  beam.emplace(std::vector<int>{}, PrefixScore(lanes));
  std::vector<std::pair<std::vector<int>, double>> ranked;
  std::vector<double> in_blank(n), in_non_blank(n), in_total(n), sum(n);
  auto slot = [&](Beam& b, const std::vector<int>& key) -> PrefixScore& {
    return b.try_emplace(key, lanes).first->second;
  };
  for (int t = 0; t < frames; ++t) {
    Beam next;
    for (const auto& [prefix, score] : beam) {
      if (t == 0) {
        carry(0, std::span<const double>(), std::span<double>(in_blank));
        std::fill(in_non_blank.begin(), in_non_blank.end(), kLogZero);
      } else {
        carry(t, std::span<const double>(score.blank), std::span<double>(in_blank));
        carry(t, std::span<const double>(score.non_blank),
              std::span<double>(in_non_blank));
      }
      for (size_t h = 0; h < n; ++h) {
        in_total[h] = LogSumExp(in_blank[h], in_non_blank[h]);
      }
      auto& stay = slot(next, prefix);
      for (size_t h = 0; h < n; ++h) {
        stay.blank[h] = LogSumExp(stay.blank[h],
                                  in_total[h] + emit(t, static_cast<int>(h), kBlank));
      }
      const int last = prefix.empty() ? -1 : prefix.back();
      for (int c = 1; c < classes; ++c) {
        bool reachable = false;
        for (size_t h = 0; h < n && !reachable; ++h) {
          reachable = emit(t, static_cast<int>(h), c) != kLogZero;
        }
        if (!reachable) continue;
        std::vector<int> extended = prefix;
        extended.push_back(c);
        auto& ext = slot(next, extended);
        auto& same = slot(next, prefix);
        for (size_t h = 0; h < n; ++h) {
          const double lp = emit(t, static_cast<int>(h), c);
          if (c == last) {
            // A repeat only extends after a blank; otherwise it merges.
            ext.non_blank[h] = LogSumExp(ext.non_blank[h], in_blank[h] + lp);
            same.non_blank[h] = LogSumExp(same.non_blank[h], in_non_blank[h] + lp);
          } else {
            ext.non_blank[h] = LogSumExp(ext.non_blank[h], in_total[h] + lp);
          }
        }
      }
    }
    ranked.clear();
    for (const auto& [prefix, score] : next) {
      const double total = score.total();
      if (total != kLogZero) ranked.emplace_back(prefix, total);
    }
    std::sort(ranked.begin(), ranked.end(), Better);
    if (ranked.size() > static_cast<size_t>(beam_width)) ranked.resize(beam_width);
    beam.clear();
    for (const auto& [prefix, unused] : ranked) {
      beam.emplace(prefix, std::move(next.at(prefix)));
    }
  }
  std::vector<DecodeResult> out;
  for (const auto& [prefix, score] : ranked) {
    out.push_back(DecodeResult{Label(prefix), score, std::nullopt});
  }
  return out;
}

}  // namespace

Label Collapse(std::span<const int> classes) {
  std::vector<int> out;
  int prev = -1;
  for (int c : classes) {
    if (c != prev && c != kBlank) out.push_back(c);
    prev = c;
  }
  return Label(std::move(out));
}

DecodeResult GreedyDecode1D(const ProbSeq1D& x) {
  PathChoice path;
  double score = 0.0;
  for (int t = 0; t < x.frames(); ++t) {
    int best = 0;
    for (int c = 1; c < x.num_classes(); ++c) {
      if (x.prob(t, c) > x.prob(t, best)) best = c;
    }
    path.classes.push_back(best);
    score += x.log_prob(t, best);
  }
  DecodeResult result{Collapse(path.classes), score, std::move(path)};
  return result;
}

DecodeResult GreedyDecode2D(const ProbMap2D& x, const TransitionMap& psi) {
  CheckCompatible(x, psi);
  PathChoice path;
  double score = 0.0;
  int prev_h = 0;
  for (int w = 0; w < x.width(); ++w) {
    int best_h = 0, best_c = 0;
    double best = kLogZero;
    bool found = false;
    for (int c = 0; c < x.num_classes(); ++c) {
      for (int h = 0; h < x.height(); ++h) {
        const double lq =
            w == 0 ? psi.log_gamma()[h] : psi.log_transition(prev_h, w - 1, h);
        const double v = lq + x.log_prob(h, w, c);
        if (!found || v > best) {
          best = v;
          best_h = h;
          best_c = c;
          found = true;
        }
      }
    }
    path.heights.push_back(best_h);
    path.classes.push_back(best_c);
    score += best;
    prev_h = best_h;
  }
  DecodeResult result{Collapse(path.classes), score, std::move(path)};
  return result;
}

std::vector<DecodeResult> BeamDecode(const ProbSeq1D& x, int beam_width) {
  return PrefixSearch(
      x.frames(), 1, x.num_classes(),
      [&x](int t, int, int c) { return x.log_prob(t, c); },
      [](int t, std::span<const double> in, std::span<double> out) {
        out[0] = t == 0 ? 0.0 : in[0];
      },
      beam_width);
}

std::vector<DecodeResult> BeamDecode(const ProbMap2D& x, const TransitionMap& psi,
                                     int beam_width) {
  CheckCompatible(x, psi);
  const int height = x.height();
  const bool full = psi.variant() == TransitionVariant::kFull;
  std::vector<double> terms(static_cast<size_t>(height));
  auto carry = [&](int t, std::span<const double> in, std::span<double> out) {
    if (t == 0) {
      std::copy(psi.log_gamma().begin(), psi.log_gamma().end(), out.begin());
      return;
    }
    if (!full) {
      const double mass = LogSumExp(in);
      for (int h = 0; h < height; ++h) {
        out[h] = mass + psi.log_transition(0, t - 1, h);
      }
      return;
    }
    for (int to = 0; to < height; ++to) {
      for (int from = 0; from < height; ++from) {
        terms[from] = in[from] + psi.log_transition(from, t - 1, to);
      }
      out[to] = LogSumExp(terms);
    }
  };
  return PrefixSearch(
      x.width(), height, x.num_classes(),
      [&x](int t, int h, int c) { return x.log_prob(h, t, c); }, carry,
      beam_width);
}

}  // namespace ctc2d
