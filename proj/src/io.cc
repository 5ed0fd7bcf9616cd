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

#include "ctc2d/io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string_view>

namespace ctc2d::io {
namespace {

using nlohmann::json;

void PutLE(std::vector<uint8_t>& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint64_t GetLE(std::span<const uint8_t> in, size_t offset, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(in[offset + i]) << (8 * i);
  return v;
}

std::vector<uint8_t> ReadAll(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteAll(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

size_t Product(std::span<const uint64_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1}, std::multiplies<>());
}

}  // namespace

size_t Tensor::size() const { return Product(shape); }

Tensor Tensor::FromDouble(std::vector<uint64_t> shape, std::span<const double> values) {
  Tensor t;
  t.shape = std::move(shape);
  if (t.size() != values.size()) throw ShapeError("tensor shape does not match value count");
  t.data.assign(values.begin(), values.end());
  return t;
}

std::vector<uint8_t> EncodeTensor(const Tensor& t) {
  if (t.data.size() != t.size()) throw ShapeError("tensor shape does not match payload");
  std::vector<uint8_t> out(kTensorMagic, kTensorMagic + 6);
  out.push_back(kTensorVersion);
  out.push_back(kFloat32Tag);
  PutLE(out, t.shape.size(), 4);
  for (uint64_t d : t.shape) PutLE(out, d, 8);
  out.reserve(out.size() + 4 * t.data.size());
  for (float v : t.data) PutLE(out, std::bit_cast<uint32_t>(v), 4);
  return out;
}

Tensor DecodeTensor(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kTensorMagic, 6) != 0) {
    throw FormatError("not a CTC2DT tensor (bad magic)");
  }
  if (bytes[6] != kTensorVersion) {
    throw FormatError("unsupported tensor format version " + std::to_string(bytes[6]));
  }
  if (bytes[7] != kFloat32Tag) {
    throw FormatError("unsupported element type tag " + std::to_string(bytes[7]));
  }
  const uint64_t rank = GetLE(bytes, 8, 4);
  if (rank > 8 || bytes.size() < 12 + 8 * rank) throw FormatError("truncated tensor header");
  Tensor t;
  for (uint64_t i = 0; i < rank; ++i) t.shape.push_back(GetLE(bytes, 12 + 8 * i, 8));
  const size_t offset = 12 + 8 * rank;
  const size_t n = t.size();
  if (bytes.size() - offset != 4 * n) {
    throw FormatError("tensor payload has " + std::to_string(bytes.size() - offset) +
                      " bytes, expected " + std::to_string(4 * n));
  }
  t.data.resize(n);
  for (size_t i = 0; i < n; ++i) {
    t.data[i] = std::bit_cast<float>(static_cast<uint32_t>(GetLE(bytes, offset + 4 * i, 4)));
  }
  return t;
}

json TensorToJson(const Tensor& t) {
  if (t.rank() > 3) throw ShapeError("JSON tensors are limited to rank <= 3");
  json data = json::array();
  for (float v : t.data) data.push_back(static_cast<double>(v));
  return json{{"shape", t.shape}, {"data", data}};
}

Tensor TensorFromJson(const json& j) {
  try {
    Tensor t;
    t.shape = j.at("shape").get<std::vector<uint64_t>>();
    if (t.rank() > 3) throw FormatError("JSON tensors are limited to rank <= 3");
    for (const auto& v : j.at("data")) t.data.push_back(static_cast<float>(v.get<double>()));
    if (t.data.size() != t.size()) {
      throw FormatError("JSON tensor has " + std::to_string(t.data.size()) +
                        " values, shape needs " + std::to_string(t.size()));
    }
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed JSON tensor: ") + e.what());
  }
}

void WriteTensor(const std::filesystem::path& path, const Tensor& t) {
  if (path.extension() == ".json") {
    const std::string text = TensorToJson(t).dump();
    WriteAll(path, std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
  } else {
    WriteAll(path, EncodeTensor(t));
  }
}

Tensor ReadTensor(const std::filesystem::path& path) {
  const auto bytes = ReadAll(path);
  if (!bytes.empty() && bytes[0] == '{') {
    try {
      return TensorFromJson(json::parse(bytes.begin(), bytes.end()));
    } catch (const json::parse_error& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  return DecodeTensor(bytes);
}

void WritePgm(const std::filesystem::path& path, int rows, int cols,
              std::span<const double> values) {
  if (values.size() != static_cast<size_t>(rows) * cols) {
    throw ShapeError("image size does not match value count");
  }
  const std::string header =
      "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  std::vector<uint8_t> bytes(header.begin(), header.end());
  for (double p : values) {
    const double level = std::round(255.0 * p);
    bytes.push_back(static_cast<uint8_t>(std::clamp(level, 0.0, 255.0)));
  }
  WriteAll(path, bytes);
}

Pgm ReadPgm(const std::filesystem::path& path) {
  const auto bytes = ReadAll(path);
  std::string text(bytes.begin(), bytes.end());
  int cols = 0, rows = 0, maxval = 0, consumed = 0;
  if (std::sscanf(text.c_str(), "P5 %d %d %d%n", &cols, &rows, &maxval, &consumed) != 3 ||
      maxval != 255) {
    throw FormatError("not an 8-bit P5 image: " + path.string());
  }
  const size_t offset = static_cast<size_t>(consumed) + 1;
  if (bytes.size() != offset + static_cast<size_t>(rows) * cols) {
    throw FormatError("truncated P5 image: " + path.string());
  }
  return Pgm{rows, cols, std::vector<uint8_t>(bytes.begin() + offset, bytes.end())};
}

// --- Datasets -----------------------------------------------------------------

json ConfigToJson(const synth::SynthConfig& c) {
  return json{{"seed", c.seed},
              {"height", c.height},
              {"width", c.width},
              {"alphabet_size", c.alphabet_size},
              {"curvature", synth::ToString(c.curvature)},
              {"noise", c.noise},
              {"clutter", c.clutter},
              {"min_label", c.min_label},
              {"max_label", c.max_label},
              {"span_width", c.span_width},
              {"amplitude", c.amplitude},
              {"bump_width", c.bump_width},
              {"evidence", c.evidence},
              {"ink", c.ink},
              {"contrast_jitter", c.contrast_jitter},
              {"clutter_strength", c.clutter_strength}};
}

synth::SynthConfig ConfigFromJson(const json& j) {
  synth::SynthConfig c;
  if (!j.is_object()) throw FormatError("generator config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "height") c.height = value.get<int>();
      else if (key == "width") c.width = value.get<int>();
      else if (key == "alphabet_size") c.alphabet_size = value.get<int>();
      else if (key == "curvature") c.curvature = synth::CurvatureFromString(value.get<std::string>());
      else if (key == "noise") c.noise = value.get<double>();
      else if (key == "clutter") c.clutter = value.get<double>();
      else if (key == "min_label") c.min_label = value.get<int>();
      else if (key == "max_label") c.max_label = value.get<int>();
      else if (key == "span_width") c.span_width = value.get<int>();
      else if (key == "amplitude") c.amplitude = value.get<double>();
      else if (key == "bump_width") c.bump_width = value.get<double>();
      else if (key == "evidence") c.evidence = value.get<double>();
      else if (key == "ink") c.ink = value.get<double>();
      else if (key == "contrast_jitter") c.contrast_jitter = value.get<double>();
      else if (key == "clutter_strength") c.clutter_strength = value.get<double>();
      else throw FormatError("unknown generator field '" + key + "'");
    } catch (const json::exception& e) {
      throw FormatError("generator field '" + key + "': " + e.what());
    }
  }
  synth::Validate(c);
  return c;
}

void WriteDataset(const std::filesystem::path& dir, const synth::SynthConfig& config,
                  std::span<const synth::SynthInstance> instances) {
  std::filesystem::create_directories(dir);
  const Alphabet alphabet = synth::SynthAlphabet(config.alphabet_size);
  json manifest{{"format", "ctc2d-dataset"},
                {"version", 1},
                {"alphabet", alphabet.symbols()},
                {"count", instances.size()},
                {"height", config.height},
                {"width", config.width},
                {"channels", synth::NumChannels(config)},
                {"generator", ConfigToJson(config)}};
  json list = json::array();
  for (size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.ctt", i);
    WriteTensor(dir / name,
                Tensor::FromDouble({static_cast<uint64_t>(inst.height),
                                    static_cast<uint64_t>(inst.width),
                                    static_cast<uint64_t>(inst.channels)},
                                   inst.features));
    list.push_back(json{{"file", name},
                        {"label", inst.label.ToString(alphabet)},
                        {"baseline", inst.baseline}});
  }
  manifest["instances"] = std::move(list);
  const std::string text = manifest.dump(2);
  WriteAll(dir / "manifest.json",
           std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

Dataset ReadDataset(const std::filesystem::path& dir) {
  const auto bytes = ReadAll(dir / "manifest.json");
  json m;
  try {
    m = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw FormatError("manifest.json: " + std::string(e.what()));
  }
  try {
    if (m.at("format") != "ctc2d-dataset") throw FormatError("not a ctc2d dataset manifest");
    Dataset ds;
    ds.config = ConfigFromJson(m.at("generator"));
    ds.alphabet = Alphabet(m.at("alphabet").get<std::string>());
    const int H = m.at("height").get<int>(), W = m.at("width").get<int>();
    const int F = m.at("channels").get<int>();
    const auto& list = m.at("instances");
    if (list.size() != m.at("count").get<size_t>()) {
      throw FormatError("manifest count does not match the instance list");
    }
    for (const auto& entry : list) {
      synth::SynthInstance inst;
      const Tensor t = ReadTensor(dir / entry.at("file").get<std::string>());
      if (t.shape != std::vector<uint64_t>{static_cast<uint64_t>(H), static_cast<uint64_t>(W),
                                           static_cast<uint64_t>(F)}) {
        throw FormatError(entry.at("file").get<std::string>() +
                          ": feature shape disagrees with the manifest");
      }
      inst.height = H;
      inst.width = W;
      inst.channels = F;
      inst.features = t.ToDouble();
      inst.label = Label::FromString(entry.at("label").get<std::string>(), ds.alphabet);
      inst.baseline = entry.at("baseline").get<std::vector<int>>();
      if (inst.baseline.size() != static_cast<size_t>(W)) {
        throw FormatError("baseline length disagrees with the manifest width");
      }
      ds.instances.push_back(std::move(inst));
    }
    return ds;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest.json: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
}

// --- Demo configuration and reports -------------------------------------------

namespace {

template <class T>
void Field(const json& obj, const char* section, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string(section) + "." + key + ": " + e.what());
  }
}

void RejectUnknown(const json& obj, const char* section,
                   std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) throw FormatError(std::string(section) + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw FormatError("unknown field '" + std::string(section) + "." + key + "'");
    }
  }
}

}  // namespace

train::DemoConfig DemoConfigFromJson(const json& j) {
  RejectUnknown(j, "config",
                {"generator", "train_count", "test_count", "init_seed", "init_scale",
                 "training"});
  train::DemoConfig c;
  if (j.contains("generator")) c.generator = ConfigFromJson(j.at("generator"));
  Field(j, "config", "train_count", c.train_count);
  Field(j, "config", "test_count", c.test_count);
  Field(j, "config", "init_seed", c.init_seed);
  Field(j, "config", "init_scale", c.init_scale);
  if (c.train_count < 1) throw FormatError("config.train_count must be >= 1");
  if (c.test_count < 1) throw FormatError("config.test_count must be >= 1");
  if (!(c.init_scale >= 0.0)) throw FormatError("config.init_scale must be >= 0");
  if (j.contains("training")) {
    const json& t = j.at("training");
    RejectUnknown(t, "training",
                  {"step_size", "momentum", "epochs", "batch_size", "seed", "collapse",
                   "backtrack"});
    auto& h = c.hyper;
    Field(t, "training", "step_size", h.step_size);
    Field(t, "training", "momentum", h.momentum);
    Field(t, "training", "epochs", h.epochs);
    Field(t, "training", "batch_size", h.batch_size);
    Field(t, "training", "seed", h.seed);
    Field(t, "training", "backtrack", h.backtrack);
    std::string collapse = train::ToString(h.collapse);
    Field(t, "training", "collapse", collapse);
    if (collapse == "mean") {
      h.collapse = train::HeightCollapse::kMean;
    } else if (collapse == "max") {
      h.collapse = train::HeightCollapse::kMax;
    } else {
      throw FormatError("training.collapse: expected \"mean\" or \"max\", got \"" + collapse +
                        "\"");
    }
    if (!(h.step_size > 0.0)) throw FormatError("training.step_size must be > 0");
    if (!(h.momentum >= 0.0 && h.momentum < 1.0)) {
      throw FormatError("training.momentum must be in [0, 1)");
    }
    if (h.epochs < 0) throw FormatError("training.epochs must be >= 0");
    if (h.batch_size < 1) throw FormatError("training.batch_size must be >= 1");
  }
  return c;
}

train::DemoConfig ReadDemoConfig(const std::filesystem::path& path) {
  const auto bytes = ReadAll(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    return DemoConfigFromJson(j);
  } catch (const ValidationError& e) {
    throw FormatError(path.string() + ": generator." + e.violation().where + ": " + e.what());
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json DemoConfigToJson(const train::DemoConfig& c) {
  const auto& h = c.hyper;
  return json{{"generator", ConfigToJson(c.generator)},
              {"train_count", c.train_count},
              {"test_count", c.test_count},
              {"init_seed", c.init_seed},
              {"init_scale", c.init_scale},
              {"training",
               {{"step_size", h.step_size},
                {"momentum", h.momentum},
                {"epochs", h.epochs},
                {"batch_size", h.batch_size},
                {"seed", h.seed},
                {"collapse", train::ToString(h.collapse)},
                {"backtrack", h.backtrack}}}};
}

namespace {

json EvalToJson(const train::EvalResult& e) {
  return json{{"accuracy", e.accuracy},
              {"edit_distance", e.edit_distance},
              {"mean_loss", e.mean_loss}};
}

json ReportToJson(const train::TrainReport& r, bool timings) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    json row{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"step_size", e.step_size}};
    if (timings) row["seconds"] = e.seconds;
    epochs.push_back(std::move(row));
  }
  return json{{"loss", train::ToString(r.loss)},
              {"initial", EvalToJson(r.initial)},
              {"epochs", std::move(epochs)},
              {"final", EvalToJson(r.final_eval)}};
}

}  // namespace

json TrainReportToJson(const train::TrainReport& report) { return ReportToJson(report, true); }

json DemoReportToJson(const train::DemoConfig& config, const train::DemoReport& report,
                      bool timings) {
  json j{{"config", DemoConfigToJson(config)},
         {"vanilla", ReportToJson(report.vanilla, timings)},
         {"2d", ReportToJson(report.two_d, timings)},
         {"accuracy_margin",
          report.two_d.final_eval.accuracy - report.vanilla.final_eval.accuracy}};
  if (timings) j["seconds"] = report.seconds;
  return j;
}

}  // namespace ctc2d::io
