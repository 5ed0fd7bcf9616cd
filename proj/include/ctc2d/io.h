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

// File formats: binary and JSON tensors, synthetic datasets on disk, and PGM
// images for map visualisation.
//
// Binary tensor layout (all integers little-endian):
//
//   offset  size     field
//   0       6        magic "CTC2DT"
//   6       1        format version (1)
//   7       1        element type tag (1 = float32)
//   8       4        rank r (uint32)
//   12      8 * r    dimension sizes (uint64 each)
//   ...     4 * n    row-major IEEE-754 float32 payload, n = prod(dims)
//
// JSON tensors are {"shape": [...], "data": [...]} with rank <= 3.

#ifndef CTC2D_IO_H_
#define CTC2D_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ctc2d/synth.h"
#include "ctc2d/tensor.h"
#include "ctc2d/trainer.h"
#include "json.hpp"

namespace ctc2d::io {

inline constexpr char kTensorMagic[] = "CTC2DT";
inline constexpr uint8_t kTensorVersion = 1;
inline constexpr uint8_t kFloat32Tag = 1;

// Malformed or unreadable input.
class FormatError : public Error {
 public:
  using Error::Error;
};

struct Tensor {
  std::vector<uint64_t> shape;
  std::vector<float> data;

  size_t size() const;
  int rank() const { return static_cast<int>(shape.size()); }
  std::vector<double> ToDouble() const { return {data.begin(), data.end()}; }
  static Tensor FromDouble(std::vector<uint64_t> shape, std::span<const double> values);

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::vector<uint8_t> EncodeTensor(const Tensor& t);
Tensor DecodeTensor(std::span<const uint8_t> bytes);

nlohmann::json TensorToJson(const Tensor& t);
Tensor TensorFromJson(const nlohmann::json& j);

// Binary unless the path ends in ".json".
void WriteTensor(const std::filesystem::path& path, const Tensor& t);
// Detects the format from the first byte ('{' means JSON).
Tensor ReadTensor(const std::filesystem::path& path);

// Binary P5 greyscale image, one byte per pixel, rows top to bottom.
// `values` are probabilities; a pixel is round(255 * p) clamped to [0, 255].
void WritePgm(const std::filesystem::path& path, int rows, int cols,
              std::span<const double> values);
struct Pgm {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> pixels;
};
Pgm ReadPgm(const std::filesystem::path& path);

// Dataset directory: manifest.json plus one feature tensor per instance.
//
// manifest.json:
//   {"format": "ctc2d-dataset", "version": 1, "alphabet": "-0123...",
//    "count": N, "height": H, "width": W, "channels": F,
//    "generator": {...config echo...},
//    "instances": [{"file": "000000.ctt", "label": "314", "baseline": [...]}]}
nlohmann::json ConfigToJson(const synth::SynthConfig& config);
// Unknown fields are rejected; missing fields keep their defaults.
synth::SynthConfig ConfigFromJson(const nlohmann::json& j);

void WriteDataset(const std::filesystem::path& dir, const synth::SynthConfig& config,
                  std::span<const synth::SynthInstance> instances);

struct Dataset {
  synth::SynthConfig config;
  Alphabet alphabet = Alphabet("-a");
  std::vector<synth::SynthInstance> instances;
};
Dataset ReadDataset(const std::filesystem::path& dir);

// Demo configuration file:
//
//   {"generator": {...}, "train_count": 2000, "test_count": 500,
//    "init_seed": 7, "init_scale": 0.01,
//    "training": {"step_size": 0.1, "momentum": 0.9, "epochs": 10,
//                 "batch_size": 32, "seed": 1, "collapse": "mean",
//                 "backtrack": false}}
//
// Errors name the offending field; JSON syntax errors carry the byte offset.
train::DemoConfig DemoConfigFromJson(const nlohmann::json& j);
train::DemoConfig ReadDemoConfig(const std::filesystem::path& path);
nlohmann::json DemoConfigToJson(const train::DemoConfig& config);
nlohmann::json TrainReportToJson(const train::TrainReport& report);
// `timings` = false drops wall-clock fields so reports compare bit-for-bit.
nlohmann::json DemoReportToJson(const train::DemoConfig& config,
                                const train::DemoReport& report, bool timings = true);

}  // namespace ctc2d::io

#endif  // CTC2D_IO_H_
