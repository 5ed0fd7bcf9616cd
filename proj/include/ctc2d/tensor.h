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

// Domain types shared by the loss, decoder and oracle modules: the alphabet,
// labels, 1D probability sequences, 2D probability maps and path transition
// maps. Every probability container is immutable once built and keeps a
// log-domain view next to the linear values.

#ifndef CTC2D_TENSOR_H_
#define CTC2D_TENSOR_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctc2d {

inline constexpr int kBlank = 0;
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();
// Absolute per-row tolerance on probability normalization.
inline constexpr double kNormTolerance = 1e-6;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes disagree, an index is out of range, or a label uses a class the
// alphabet does not have.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A first violated invariant: where it was found and the observed value.
struct Violation {
  std::string where;
  double observed = 0.0;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(Violation v)
      : Error(v.message), violation_(std::move(v)) {}
  const Violation& violation() const { return violation_; }

 private:
  Violation violation_;
};

// The label needs more frames (columns) than the input has, so no alignment
// exists and P(Y|X) = 0.
class InfeasibleError : public Error {
 public:
  InfeasibleError(int min_width, int available);
  int min_width() const { return min_width_; }
  int available() const { return available_; }

 private:
  int min_width_;
  int available_;
};

// log(exp(a) + exp(b)) without overflow; kLogZero is absorbing.
inline double LogSumExp(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double LogSumExp(double a, double b, double c) {
  const double m = std::max(a, std::max(b, c));
  if (m == kLogZero) return kLogZero;
  return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

double LogSumExp(std::span<const double> values);

// Ordered symbol set; index 0 is always the blank.
class Alphabet {
 public:
  // `symbols` lists every class glyph, blank first. Throws ValidationError if
  // there are fewer than two symbols or any symbol repeats.
  explicit Alphabet(std::string symbols);

  // Blank glyph '-' followed by `real_symbols`.
  static Alphabet WithBlank(std::string_view real_symbols, char blank = '-');

  int size() const { return static_cast<int>(symbols_.size()); }
  char symbol(int index) const { return symbols_.at(static_cast<size_t>(index)); }
  const std::string& symbols() const { return symbols_; }
  std::optional<int> IndexOf(char symbol) const;

 private:
  std::string symbols_;
};

// Target class sequence Y. Elements are in [1, |Omega|-1]; never blank.
class Label {
 public:
  Label() = default;
  explicit Label(std::vector<int> classes);

  // Encodes `text` through `alphabet`. Throws ShapeError on unknown or blank
  // glyphs.
  static Label FromString(std::string_view text, const Alphabet& alphabet);
  std::string ToString(const Alphabet& alphabet) const;

  std::span<const int> classes() const { return classes_; }
  int size() const { return static_cast<int>(classes_.size()); }
  bool empty() const { return classes_.empty(); }
  int operator[](int i) const { return classes_[static_cast<size_t>(i)]; }
  int max_class() const;

  friend bool operator==(const Label&, const Label&) = default;
  friend auto operator<=>(const Label& a, const Label& b) {
    return a.classes_ <=> b.classes_;
  }

 private:
  std::vector<int> classes_;
};

// Y* = [blank, y1, blank, y2, ..., yL, blank].
class ExpandedLabel {
 public:
  explicit ExpandedLabel(const Label& label);

  int size() const { return static_cast<int>(classes_.size()); }
  int operator[](int s) const { return classes_[static_cast<size_t>(s)]; }
  std::span<const int> classes() const { return classes_; }

  // True when state s may be entered directly from s-2 (the blank between
  // two different symbols can be skipped).
  bool CanSkip(int s) const {
    return s >= 2 && classes_[s] != kBlank && classes_[s] != classes_[s - 2];
  }

  Label Strip() const;

 private:
  std::vector<int> classes_;
};

ExpandedLabel ExpandLabel(const Label& label);

// Smallest frame count for which some alignment collapses to `label`:
// one frame per symbol plus one separating blank per adjacent repeat.
int MinWidth(const Label& label);

// Numerically stable softmax over `axis` of a row-major grid with `shape`.
// Throws ValidationError on non-finite input.
std::vector<double> SoftmaxNormalize(std::span<const double> logits,
                                     std::span<const size_t> shape, size_t axis);
// Same, but returns log-softmax values.
std::vector<double> LogSoftmaxNormalize(std::span<const double> logits,
                                        std::span<const size_t> shape,
                                        size_t axis);

// Invariant checks. Each returns the first violation or nullopt.
std::optional<Violation> ValidateSeq(std::span<const double> probs, int frames,
                                     int num_classes);
std::optional<Violation> ValidateMap(std::span<const double> probs, int height,
                                     int width, int num_classes);

// Per-frame class distributions X, shape T x |Omega|, row-major.
class ProbSeq1D {
 public:
  // Strict: rejects rows that do not sum to 1 within kNormTolerance.
  ProbSeq1D(int frames, int num_classes, std::vector<double> probs);

  static ProbSeq1D FromLogits(int frames, int num_classes,
                              std::span<const double> logits);
  // Divides every row by its sum; rows must be non-negative with a positive sum.
  static ProbSeq1D Renormalized(int frames, int num_classes,
                                std::vector<double> values);

  int frames() const { return frames_; }
  int num_classes() const { return num_classes_; }
  double prob(int t, int c) const { return probs_[Index(t, c)]; }
  double log_prob(int t, int c) const { return log_probs_[Index(t, c)]; }
  std::span<const double> probs() const { return probs_; }
  std::span<const double> log_probs() const { return log_probs_; }
  std::span<const double> frame_log_probs(int t) const {
    return std::span<const double>(log_probs_).subspan(
        static_cast<size_t>(t) * num_classes_, num_classes_);
  }

 private:
  friend class ProbMap2D;
  ProbSeq1D(int frames, int num_classes, std::vector<double> probs,
            std::vector<double> log_probs);
  size_t Index(int t, int c) const {
    return static_cast<size_t>(t) * num_classes_ + c;
  }

  int frames_;
  int num_classes_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
};

// Per-position class distributions X', shape H x W x |Omega|, row-major.
class ProbMap2D {
 public:
  ProbMap2D(int height, int width, int num_classes, std::vector<double> probs);

  static ProbMap2D FromLogits(int height, int width, int num_classes,
                              std::span<const double> logits);
  static ProbMap2D Renormalized(int height, int width, int num_classes,
                                std::vector<double> values);

  int height() const { return height_; }
  int width() const { return width_; }
  int num_classes() const { return num_classes_; }
  double prob(int h, int w, int c) const { return probs_[Index(h, w, c)]; }
  double log_prob(int h, int w, int c) const { return log_probs_[Index(h, w, c)]; }
  std::span<const double> probs() const { return probs_; }
  std::span<const double> log_probs() const { return log_probs_; }
  size_t Index(int h, int w, int c) const {
    return (static_cast<size_t>(h) * width_ + w) * num_classes_ + c;
  }

  // Height-1 view as a sequence, or a sequence viewed as a height-1 map.
  ProbSeq1D Row(int h) const;
  static ProbMap2D FromSeq(const ProbSeq1D& seq);

 private:
  ProbMap2D(int height, int width, int num_classes, std::vector<double> probs,
            std::vector<double> log_probs);

  int height_;
  int width_;
  int num_classes_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
};

enum class TransitionVariant { kFull, kSimplified };

std::optional<Violation> ValidateTransition(TransitionVariant variant,
                                            int height, int width,
                                            std::span<const double> psi,
                                            std::span<const double> gamma);

// Path transition map for an H x W probability map, plus the initial height
// distribution Gamma.
//
//   Full:        psi[(from * (W-1) + w) * H + to], rows over `to` sum to 1.
//   Simplified:  psi[w * H + to], each column w sums to 1; the source height
//                does not matter.
//
// `width` is the probability-map width W, so there are W-1 transition columns.
class TransitionMap {
 public:
  TransitionMap(TransitionVariant variant, int height, int width,
                std::vector<double> psi, std::vector<double> gamma);

  // Uniform psi and uniform Gamma.
  static TransitionMap Uniform(TransitionVariant variant, int height, int width);
  static TransitionMap Simplified(int height, int width, std::vector<double> psi);
  // Softmax over the destination height; Gamma defaults to uniform when
  // `gamma_logits` is empty.
  static TransitionMap FromLogits(TransitionVariant variant, int height,
                                  int width, std::span<const double> psi_logits,
                                  std::span<const double> gamma_logits = {});

  TransitionVariant variant() const { return variant_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::span<const double> psi() const { return psi_; }
  std::span<const double> log_psi() const { return log_psi_; }
  std::span<const double> gamma() const { return gamma_; }
  std::span<const double> log_gamma() const { return log_gamma_; }

  // Probability of moving from height `from` in column w to `to` in w+1.
  double transition(int from, int w, int to) const { return psi_[Index(from, w, to)]; }
  double log_transition(int from, int w, int to) const {
    return log_psi_[Index(from, w, to)];
  }

 private:
  size_t Index(int from, int w, int to) const {
    return variant_ == TransitionVariant::kFull
               ? (static_cast<size_t>(from) * (width_ - 1) + w) * height_ + to
               : static_cast<size_t>(w) * height_ + to;
  }

  TransitionVariant variant_;
  int height_;
  int width_;
  std::vector<double> psi_;
  std::vector<double> gamma_;
  std::vector<double> log_psi_;
  std::vector<double> log_gamma_;
};

// Broadcasts a Simplified map over the source-height axis.
TransitionMap ExpandSimplified(const TransitionMap& simplified);

// Throws ShapeError unless `psi` fits an H x W map.
void CheckCompatible(const ProbMap2D& x, const TransitionMap& psi);
// Throws ShapeError if the label uses a class outside [1, num_classes).
void CheckLabel(const Label& label, int num_classes);

}  // namespace ctc2d

#endif  // CTC2D_TENSOR_H_
