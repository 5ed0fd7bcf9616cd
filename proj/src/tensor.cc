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

#include "ctc2d/tensor.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <utility>

namespace ctc2d {
namespace {

std::string Fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

// Checks `rows` consecutive distributions of length `len`.
std::optional<Violation> CheckRows(std::span<const double> values, size_t rows,
                                   size_t len, auto&& describe) {
  for (size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (size_t k = 0; k < len; ++k) {
      const double p = values[r * len + k];
      if (!(p >= 0.0 && p <= 1.0)) {
        std::string where = describe(r);
        return Violation{where, p,
                         Fmt("entry %zu of %s is %.17g, outside [0, 1]", k,
                             where.c_str(), p)};
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kNormTolerance) {
      std::string where = describe(r);
      return Violation{where, sum,
                       Fmt("%s sums to %.17g, not 1", where.c_str(), sum)};
    }
  }
  return std::nullopt;
}

std::vector<double> LogOf(std::span<const double> probs) {
  std::vector<double> out(probs.size());
  std::transform(probs.begin(), probs.end(), out.begin(),
                 [](double p) { return p > 0.0 ? std::log(p) : kLogZero; });
  return out;
}

std::vector<double> ExpOf(std::span<const double> logs) {
  std::vector<double> out(logs.size());
  std::transform(logs.begin(), logs.end(), out.begin(),
                 [](double l) { return std::exp(l); });
  return out;
}

void RenormalizeRows(std::vector<double>& values, size_t len) {
  for (size_t r = 0; r * len < values.size(); ++r) {
    double sum = 0.0;
    for (size_t k = 0; k < len; ++k) {
      const double v = values[r * len + k];
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ValidationError(Violation{Fmt("row %zu", r), v,
                                        Fmt("row %zu has invalid entry %.17g", r, v)});
      }
      sum += v;
    }
    if (!(sum > 0.0)) {
      throw ValidationError(
          Violation{Fmt("row %zu", r), sum, Fmt("row %zu has zero mass", r)});
    }
    for (size_t k = 0; k < len; ++k) values[r * len + k] /= sum;
  }
}

void CheckSize(size_t got, size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(Fmt("%s has %zu values, expected %zu", what, got, want));
  }
}

}  // namespace

InfeasibleError::InfeasibleError(int min_width, int available)
    : Error(Fmt("label needs at least min_width=%d frames but only %d are available",
                min_width, available)),
      min_width_(min_width),
      available_(available) {}

double LogSumExp(std::span<const double> values) {
  double m = kLogZero;
  for (double v : values) m = std::max(m, v);
  if (m == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

// --- Alphabet ---------------------------------------------------------------

Alphabet::Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 2) {
    throw ValidationError(Violation{"alphabet", static_cast<double>(symbols_.size()),
                                    "alphabet needs a blank and at least one symbol"});
  }
  std::set<char> seen;
  for (size_t i = 0; i < symbols_.size(); ++i) {
    if (!seen.insert(symbols_[i]).second) {
      throw ValidationError(Violation{Fmt("symbol %zu", i), static_cast<double>(i),
                                      Fmt("alphabet symbol '%c' repeats at index %zu",
                                          symbols_[i], i)});
    }
  }
}

Alphabet Alphabet::WithBlank(std::string_view real_symbols, char blank) {
  std::string s(1, blank);
  s.append(real_symbols);
  return Alphabet(std::move(s));
}

std::optional<int> Alphabet::IndexOf(char symbol) const {
  const auto pos = symbols_.find(symbol);
  if (pos == std::string::npos) return std::nullopt;
  return static_cast<int>(pos);
}

// --- Labels -----------------------------------------------------------------

Label::Label(std::vector<int> classes) : classes_(std::move(classes)) {
  for (size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i] < 1) {
      throw ShapeError(Fmt("label element %zu is %d; labels hold classes >= 1",
                           i, classes_[i]));
    }
  }
}

Label Label::FromString(std::string_view text, const Alphabet& alphabet) {
  std::vector<int> classes;
  classes.reserve(text.size());
  for (char ch : text) {
    const auto idx = alphabet.IndexOf(ch);
    if (!idx) throw ShapeError(Fmt("symbol '%c' is not in the alphabet", ch));
    if (*idx == kBlank) throw ShapeError("label contains the blank symbol");
    classes.push_back(*idx);
  }
  return Label(std::move(classes));
}

std::string Label::ToString(const Alphabet& alphabet) const {
  std::string out;
  out.reserve(classes_.size());
  for (int c : classes_) {
    if (c >= alphabet.size()) {
      throw ShapeError(Fmt("class %d outside alphabet of size %d", c, alphabet.size()));
    }
    out.push_back(alphabet.symbol(c));
  }
  return out;
}

int Label::max_class() const {
  return classes_.empty() ? 0 : *std::max_element(classes_.begin(), classes_.end());
}

ExpandedLabel::ExpandedLabel(const Label& label) {
  classes_.reserve(2 * label.classes().size() + 1);
  classes_.push_back(kBlank);
  for (int c : label.classes()) {
    classes_.push_back(c);
    classes_.push_back(kBlank);
  }
}

Label ExpandedLabel::Strip() const {
  std::vector<int> out;
  for (int c : classes_) {
    if (c != kBlank) out.push_back(c);
  }
  return Label(std::move(out));
}

ExpandedLabel ExpandLabel(const Label& label) { return ExpandedLabel(label); }

int MinWidth(const Label& label) {
  int width = label.size();
  for (int i = 1; i < label.size(); ++i) {
    if (label[i] == label[i - 1]) ++width;
  }
  return width;
}

void CheckLabel(const Label& label, int num_classes) {
  if (label.max_class() >= num_classes) {
    throw ShapeError(Fmt("label class %d is outside an alphabet of %d classes",
                         label.max_class(), num_classes));
  }
}

// --- Softmax ----------------------------------------------------------------

namespace {

// Visits every line of `shape` along `axis` as fn(base, stride, len).
template <class Fn>
std::vector<double> PerLine(std::span<const double> logits, std::span<const size_t> shape,
                            size_t axis, Fn&& fn) {
  if (axis >= shape.size()) throw ShapeError("softmax axis out of range");
  const size_t total = std::accumulate(shape.begin(), shape.end(), size_t{1},
                                       std::multiplies<>());
  CheckSize(logits.size(), total, "logit grid");
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw ValidationError(Violation{Fmt("element %zu", i), logits[i],
                                      Fmt("non-finite logit %g at element %zu",
                                          logits[i], i)});
    }
  }
  size_t inner = 1;
  for (size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  const size_t len = shape[axis];
  const size_t outer = len == 0 ? 0 : total / (len * inner);
  std::vector<double> out(total);
  for (size_t o = 0; o < outer; ++o) {
    for (size_t i = 0; i < inner; ++i) fn(o * len * inner + i, inner, len, out);
  }
  return out;
}

}  // namespace

std::vector<double> LogSoftmaxNormalize(std::span<const double> logits,
                                        std::span<const size_t> shape,
                                        size_t axis) {
  return PerLine(logits, shape, axis, [&](size_t base, size_t stride, size_t len, auto& out) {
    double m = kLogZero;
    for (size_t k = 0; k < len; ++k) m = std::max(m, logits[base + k * stride]);
    double sum = 0.0;
    for (size_t k = 0; k < len; ++k) sum += std::exp(logits[base + k * stride] - m);
    const double log_sum = std::log(sum);
    for (size_t k = 0; k < len; ++k) {
      out[base + k * stride] = (logits[base + k * stride] - m) - log_sum;
    }
  });
}

std::vector<double> SoftmaxNormalize(std::span<const double> logits,
                                     std::span<const size_t> shape, size_t axis) {
  return PerLine(logits, shape, axis, [&](size_t base, size_t stride, size_t len, auto& out) {
    double m = kLogZero;
    for (size_t k = 0; k < len; ++k) m = std::max(m, logits[base + k * stride]);
    double sum = 0.0;
    for (size_t k = 0; k < len; ++k) {
      out[base + k * stride] = std::exp(logits[base + k * stride] - m);
      sum += out[base + k * stride];
    }
    for (size_t k = 0; k < len; ++k) out[base + k * stride] /= sum;
  });
}

// --- Validation -------------------------------------------------------------

std::optional<Violation> ValidateSeq(std::span<const double> probs, int frames,
                                     int num_classes) {
  if (frames < 1 || num_classes < 2 ||
      probs.size() != static_cast<size_t>(frames) * num_classes) {
    return Violation{"shape", static_cast<double>(probs.size()),
                     Fmt("sequence shape %dx%d does not match %zu values", frames,
                         num_classes, probs.size())};
  }
  return CheckRows(probs, frames, num_classes,
                   [](size_t t) { return Fmt("frame t=%zu", t); });
}

std::optional<Violation> ValidateMap(std::span<const double> probs, int height,
                                     int width, int num_classes) {
  if (height < 1 || width < 1 || num_classes < 2 ||
      probs.size() != static_cast<size_t>(height) * width * num_classes) {
    return Violation{"shape", static_cast<double>(probs.size()),
                     Fmt("map shape %dx%dx%d does not match %zu values", height,
                         width, num_classes, probs.size())};
  }
  return CheckRows(probs, static_cast<size_t>(height) * width, num_classes,
                   [width](size_t r) {
                     return Fmt("position (h=%zu, w=%zu)", r / width, r % width);
                   });
}

std::optional<Violation> ValidateTransition(TransitionVariant variant,
                                            int height, int width,
                                            std::span<const double> psi,
                                            std::span<const double> gamma) {
  if (height < 1 || width < 1) {
    return Violation{"shape", 0.0, "transition map needs height >= 1 and width >= 1"};
  }
  const size_t cols = static_cast<size_t>(width - 1);
  const size_t want = variant == TransitionVariant::kFull
                          ? static_cast<size_t>(height) * cols * height
                          : cols * height;
  if (psi.size() != want) {
    return Violation{"shape", static_cast<double>(psi.size()),
                     Fmt("transition map has %zu values, expected %zu", psi.size(), want)};
  }
  if (gamma.size() != static_cast<size_t>(height)) {
    return Violation{"gamma", static_cast<double>(gamma.size()),
                     Fmt("gamma has %zu values, expected %d", gamma.size(), height)};
  }
  if (auto v = variant == TransitionVariant::kFull
                   ? CheckRows(psi, height * cols, height,
                               [cols](size_t r) {
                                 return Fmt("transition (h=%zu, w=%zu)", r / cols,
                                            r % cols);
                               })
                   : CheckRows(psi, cols, height,
                               [](size_t w) { return Fmt("transition column w=%zu", w); })) {
    return v;
  }
  double sum = 0.0;
  for (size_t h = 0; h < gamma.size(); ++h) {
    if (!(gamma[h] >= 0.0 && gamma[h] <= 1.0)) {
      return Violation{"gamma", gamma[h],
                       Fmt("gamma[%zu] is %.17g, outside [0, 1]", h, gamma[h])};
    }
    sum += gamma[h];
  }
  if (std::abs(sum - 1.0) > kNormTolerance) {
    return Violation{"gamma", sum, Fmt("gamma sum %g", sum)};
  }
  return std::nullopt;
}

namespace {

// Shape mismatches are ShapeErrors; everything else is a ValidationError.
void ThrowIfInvalid(const std::optional<Violation>& v) {
  if (!v) return;
  if (v->where == "shape") throw ShapeError(v->message);
  throw ValidationError(*v);
}

}  // namespace

// --- ProbSeq1D --------------------------------------------------------------

ProbSeq1D::ProbSeq1D(int frames, int num_classes, std::vector<double> probs)
    : frames_(frames), num_classes_(num_classes), probs_(std::move(probs)) {
  ThrowIfInvalid(ValidateSeq(probs_, frames_, num_classes_));
  log_probs_ = LogOf(probs_);
}

ProbSeq1D::ProbSeq1D(int frames, int num_classes, std::vector<double> probs,
                     std::vector<double> log_probs)
    : frames_(frames),
      num_classes_(num_classes),
      probs_(std::move(probs)),
      log_probs_(std::move(log_probs)) {
  ThrowIfInvalid(ValidateSeq(probs_, frames_, num_classes_));
}

ProbSeq1D ProbSeq1D::FromLogits(int frames, int num_classes,
                                std::span<const double> logits) {
  const size_t shape[] = {static_cast<size_t>(frames), static_cast<size_t>(num_classes)};
  auto logs = LogSoftmaxNormalize(logits, shape, 1);
  auto probs = ExpOf(logs);
  return ProbSeq1D(frames, num_classes, std::move(probs), std::move(logs));
}

ProbSeq1D ProbSeq1D::Renormalized(int frames, int num_classes,
                                  std::vector<double> values) {
  CheckSize(values.size(), static_cast<size_t>(frames) * num_classes, "sequence");
  RenormalizeRows(values, num_classes);
  return ProbSeq1D(frames, num_classes, std::move(values));
}

// --- ProbMap2D --------------------------------------------------------------

ProbMap2D::ProbMap2D(int height, int width, int num_classes, std::vector<double> probs)
    : height_(height), width_(width), num_classes_(num_classes), probs_(std::move(probs)) {
  ThrowIfInvalid(ValidateMap(probs_, height_, width_, num_classes_));
  log_probs_ = LogOf(probs_);
}

ProbMap2D::ProbMap2D(int height, int width, int num_classes,
                     std::vector<double> probs, std::vector<double> log_probs)
    : height_(height),
      width_(width),
      num_classes_(num_classes),
      probs_(std::move(probs)),
      log_probs_(std::move(log_probs)) {
  ThrowIfInvalid(ValidateMap(probs_, height_, width_, num_classes_));
}

ProbMap2D ProbMap2D::FromLogits(int height, int width, int num_classes,
                                std::span<const double> logits) {
  const size_t shape[] = {static_cast<size_t>(height), static_cast<size_t>(width),
                          static_cast<size_t>(num_classes)};
  auto logs = LogSoftmaxNormalize(logits, shape, 2);
  auto probs = ExpOf(logs);
  return ProbMap2D(height, width, num_classes, std::move(probs), std::move(logs));
}

ProbMap2D ProbMap2D::Renormalized(int height, int width, int num_classes,
                                  std::vector<double> values) {
  CheckSize(values.size(), static_cast<size_t>(height) * width * num_classes, "map");
  RenormalizeRows(values, num_classes);
  return ProbMap2D(height, width, num_classes, std::move(values));
}

ProbSeq1D ProbMap2D::Row(int h) const {
  if (h < 0 || h >= height_) throw ShapeError(Fmt("row %d out of range", h));
  const size_t n = static_cast<size_t>(width_) * num_classes_;
  const auto first = static_cast<std::ptrdiff_t>(Index(h, 0, 0));
  std::vector<double> probs(probs_.begin() + first, probs_.begin() + first + n);
  std::vector<double> logs(log_probs_.begin() + first, log_probs_.begin() + first + n);
  return ProbSeq1D(width_, num_classes_, std::move(probs), std::move(logs));
}

ProbMap2D ProbMap2D::FromSeq(const ProbSeq1D& seq) {
  return ProbMap2D(1, seq.frames(), seq.num_classes(),
                   std::vector<double>(seq.probs().begin(), seq.probs().end()),
                   std::vector<double>(seq.log_probs().begin(), seq.log_probs().end()));
}

// --- TransitionMap ----------------------------------------------------------

TransitionMap::TransitionMap(TransitionVariant variant, int height, int width,
                             std::vector<double> psi, std::vector<double> gamma)
    : variant_(variant),
      height_(height),
      width_(width),
      psi_(std::move(psi)),
      gamma_(std::move(gamma)) {
  ThrowIfInvalid(ValidateTransition(variant_, height_, width_, psi_, gamma_));
  log_psi_ = LogOf(psi_);
  log_gamma_ = LogOf(gamma_);
}

TransitionMap TransitionMap::Uniform(TransitionVariant variant, int height, int width) {
  if (height < 1 || width < 1) throw ShapeError("transition map needs positive shape");
  const size_t cols = static_cast<size_t>(width - 1);
  const size_t n = variant == TransitionVariant::kFull
                       ? static_cast<size_t>(height) * cols * height
                       : cols * height;
  return TransitionMap(variant, height, width, std::vector<double>(n, 1.0 / height),
                       std::vector<double>(height, 1.0 / height));
}

TransitionMap TransitionMap::Simplified(int height, int width, std::vector<double> psi) {
  return TransitionMap(TransitionVariant::kSimplified, height, width, std::move(psi),
                       std::vector<double>(height, 1.0 / height));
}

TransitionMap TransitionMap::FromLogits(TransitionVariant variant, int height,
                                        int width, std::span<const double> psi_logits,
                                        std::span<const double> gamma_logits) {
  if (height < 1 || width < 1) throw ShapeError("transition map needs positive shape");
  const size_t h = static_cast<size_t>(height);
  const size_t cols = static_cast<size_t>(width - 1);
  std::vector<double> psi;
  if (variant == TransitionVariant::kFull) {
    const size_t shape[] = {h, cols, h};
    psi = SoftmaxNormalize(psi_logits, shape, 2);
  } else {
    const size_t shape[] = {cols, h};
    psi = SoftmaxNormalize(psi_logits, shape, 1);
  }
  std::vector<double> gamma;
  if (gamma_logits.empty()) {
    gamma.assign(h, 1.0 / height);
  } else {
    const size_t shape[] = {h};
    gamma = SoftmaxNormalize(gamma_logits, shape, 0);
  }
  return TransitionMap(variant, height, width, std::move(psi), std::move(gamma));
}

TransitionMap ExpandSimplified(const TransitionMap& simplified) {
  if (simplified.variant() != TransitionVariant::kSimplified) return simplified;
  const int height = simplified.height();
  const int cols = simplified.width() - 1;
  std::vector<double> full(static_cast<size_t>(height) * cols * height);
  for (int from = 0; from < height; ++from) {
    for (int w = 0; w < cols; ++w) {
      for (int to = 0; to < height; ++to) {
        full[(static_cast<size_t>(from) * cols + w) * height + to] =
            simplified.transition(0, w, to);
      }
    }
  }
  return TransitionMap(TransitionVariant::kFull, height, simplified.width(),
                       std::move(full),
                       std::vector<double>(simplified.gamma().begin(),
                                           simplified.gamma().end()));
}

void CheckCompatible(const ProbMap2D& x, const TransitionMap& psi) {
  if (x.height() != psi.height() || x.width() != psi.width()) {
    throw ShapeError(Fmt("transition map for %dx%d does not fit a %dx%d probability map",
                         psi.height(), psi.width(), x.height(), x.width()));
  }
}

}  // namespace ctc2d
