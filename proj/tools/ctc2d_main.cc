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

// ctc2d command-line tool.
//
//   ctc2d loss      --probs X [--psi P] [--gamma G] --label Y
//   ctc2d decode    --probs X [--psi P] [--gamma G] (--greedy | --beam N)
//   ctc2d visualize --probs X [--psi P] [--gamma G] --out PREFIX
//   ctc2d demo      [--config FILE] [--out REPORT] [--epochs N]
//   ctc2d generate  [--config FILE] --count N --out DIR
//
// Exit status: 0 success, 1 malformed input, 2 infeasible label (strict mode).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "ctc2d/ctc.h"
#include "ctc2d/ctc2d.h"
#include "ctc2d/decoder.h"
#include "ctc2d/io.h"
#include "ctc2d/synth.h"
#include "ctc2d/tensor.h"
#include "ctc2d/trainer.h"

namespace {

using namespace ctc2d;
using nlohmann::json;

constexpr int kExitMalformed = 1;
constexpr int kExitInfeasible = 2;

// Fixed-point with 12 digits after the point; -0 prints as 0.
std::string Number(double v) {
  if (v == 0.0) v = 0.0;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12f", v);
  return buf;
}

struct InputFlags {
  std::string probs;
  std::string psi;
  std::string gamma;
  std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::string variant;  // empty: infer from the psi tensor rank
  bool logits = false;
};

void AddInputFlags(CLI::App* cmd, InputFlags& f) {
  cmd->add_option("--probs", f.probs,
                  "Class probabilities: [T, C] for a sequence or [H, W, C] for a map")
      ->required();
  cmd->add_option("--psi", f.psi,
                  "Path transitions: [W-1, H] (simplified) or [H, W-1, H] (full, "
                  "from x column x to); uniform when omitted");
  cmd->add_option("--gamma", f.gamma, "Initial height distribution [H]; uniform when omitted");
  cmd->add_option("--alphabet", f.alphabet,
                  "Symbols for classes 1..C-1; class 0 is the blank '-'");
  cmd->add_option("--variant", f.variant, "Transition variant")
      ->check(CLI::IsMember({"full", "simplified"}));
  cmd->add_flag("--logits", f.logits,
                "Inputs are unnormalised logits; apply softmax before use");
}

// Parsed inputs: either a sequence or a map with its transitions.
struct Inputs {
  std::optional<ProbSeq1D> seq;
  std::optional<ProbMap2D> map;
  std::optional<TransitionMap> psi;
  Alphabet alphabet = Alphabet("-a");
};

std::vector<size_t> Dims(const io::Tensor& t) { return {t.shape.begin(), t.shape.end()}; }

int AsInt(uint64_t d, const char* what) {
  if (d == 0 || d > (1u << 24)) throw io::FormatError(std::string("bad ") + what + " size");
  return static_cast<int>(d);
}

Inputs LoadInputs(const InputFlags& f) {
  Inputs in;
  const io::Tensor probs = io::ReadTensor(f.probs);
  const auto values = probs.ToDouble();
  int C = 0;
  if (probs.rank() == 2) {
    const int T = AsInt(probs.shape[0], "frame"), c = AsInt(probs.shape[1], "class");
    in.seq = f.logits ? ProbSeq1D::FromLogits(T, c, values) : ProbSeq1D(T, c, values);
    C = c;
  } else if (probs.rank() == 3) {
    const int H = AsInt(probs.shape[0], "height"), W = AsInt(probs.shape[1], "width");
    C = AsInt(probs.shape[2], "class");
    in.map = f.logits ? ProbMap2D::FromLogits(H, W, C, values) : ProbMap2D(H, W, C, values);
  } else {
    throw io::FormatError("--probs must have rank 2 [T, C] or rank 3 [H, W, C]");
  }
  if (C < 2) throw io::FormatError("need at least one class besides the blank");
  if (static_cast<size_t>(C - 1) > f.alphabet.size()) {
    throw io::FormatError("alphabet has " + std::to_string(f.alphabet.size()) +
                          " symbols, probabilities have " + std::to_string(C - 1) +
                          " non-blank classes");
  }
  in.alphabet = Alphabet::WithBlank(std::string_view(f.alphabet).substr(0, C - 1));

  if (!in.map) {
    if (!f.psi.empty() || !f.gamma.empty()) {
      throw io::FormatError("--psi/--gamma need a rank-3 [H, W, C] probability map");
    }
    return in;
  }
  const int H = in.map->height(), W = in.map->width();
  std::optional<io::Tensor> psi_t;
  if (!f.psi.empty()) psi_t = io::ReadTensor(f.psi);
  TransitionVariant variant = TransitionVariant::kSimplified;
  if (!f.variant.empty()) {
    variant = f.variant == "full" ? TransitionVariant::kFull : TransitionVariant::kSimplified;
  } else if (psi_t && psi_t->rank() == 3) {
    variant = TransitionVariant::kFull;
  }
  std::vector<double> psi, gamma;
  if (psi_t) {
    const std::vector<uint64_t> want =
        variant == TransitionVariant::kFull
            ? std::vector<uint64_t>{uint64_t(H), uint64_t(W - 1), uint64_t(H)}
            : std::vector<uint64_t>{uint64_t(W - 1), uint64_t(H)};
    if (psi_t->shape != want) {
      throw io::FormatError("--psi shape does not match a " +
                            std::string(variant == TransitionVariant::kFull ? "full" : "simplified") +
                            " map for H=" + std::to_string(H) + ", W=" + std::to_string(W));
    }
    psi = psi_t->ToDouble();
  }
  if (!f.gamma.empty()) {
    const io::Tensor g = io::ReadTensor(f.gamma);
    if (g.shape != std::vector<uint64_t>{uint64_t(H)}) {
      throw io::FormatError("--gamma must have shape [" + std::to_string(H) + "]");
    }
    gamma = g.ToDouble();
  }
  if (f.logits) {
    in.psi = TransitionMap::FromLogits(variant, H, W, psi_t ? psi : std::vector<double>(
        variant == TransitionVariant::kFull ? size_t(H) * (W - 1) * H : size_t(W - 1) * H, 0.0),
        gamma);
  } else {
    const TransitionMap uniform = TransitionMap::Uniform(variant, H, W);
    if (!psi_t) psi.assign(uniform.psi().begin(), uniform.psi().end());
    if (gamma.empty()) gamma.assign(uniform.gamma().begin(), uniform.gamma().end());
    in.psi = TransitionMap(variant, H, W, std::move(psi), std::move(gamma));
  }
  return in;
}

// --- loss ---------------------------------------------------------------------

struct LossFlags {
  InputFlags in;
  std::string label;
  std::string loss;  // empty: vanilla for [T, C], 2d for [H, W, C]
  bool permissive = false;
  double clamp = 1e4;
  std::string grad_out;
};

void WriteGrad(const std::string& prefix, const std::string& name,
               std::vector<uint64_t> shape, const std::vector<double>& values) {
  io::WriteTensor(prefix + name + ".ctt", io::Tensor::FromDouble(std::move(shape), values));
}

int RunLoss(const LossFlags& f) {
  const Inputs in = LoadInputs(f.in);
  const Label y = Label::FromString(f.label, in.alphabet);
  const bool two_d = f.loss.empty() ? in.map.has_value() : f.loss == "2d";
  if (two_d && !in.map) throw io::FormatError("--loss 2d needs a rank-3 [H, W, C] map");

  // Vanilla on a map collapses the height axis by mean first.
  const std::optional<ProbSeq1D> seq =
      two_d ? std::nullopt
            : (in.seq ? in.seq : std::optional(train::CollapseHeight(*in.map,
                                                                     train::HeightCollapse::kMean)));
  const LossValue loss = two_d ? Ctc2dLoss(*in.map, *in.psi, y) : CtcLoss(*seq, y);
  if (!loss.feasible) {
    const int frames = two_d ? in.map->width() : seq->frames();
    if (!f.permissive) throw InfeasibleError(MinWidth(y), frames);
    std::cerr << "warning: label needs min_width=" << MinWidth(y) << " but only " << frames
              << " columns; loss clamped\n";
    std::cout << "loss=" << Number(f.clamp) << "\n";
    return 0;
  }
  std::cout << "loss=" << Number(loss.value) << "\n";
  if (f.grad_out.empty()) return 0;
  if (!two_d) {
    const CtcGradient g = CtcGrad(*seq, y);
    WriteGrad(f.grad_out, "logits", {uint64_t(seq->frames()), uint64_t(seq->num_classes())},
              g.logits);
    return 0;
  }
  const int H = in.map->height(), W = in.map->width(), C = in.map->num_classes();
  const Ctc2dGradient g = Ctc2dGrad(*in.map, *in.psi, y, {.gamma_trainable = true});
  WriteGrad(f.grad_out, "class_logits", {uint64_t(H), uint64_t(W), uint64_t(C)}, g.class_logits);
  if (W > 1) {
    WriteGrad(f.grad_out, "transition_logits",
              in.psi->variant() == TransitionVariant::kFull
                  ? std::vector<uint64_t>{uint64_t(H), uint64_t(W - 1), uint64_t(H)}
                  : std::vector<uint64_t>{uint64_t(W - 1), uint64_t(H)},
              g.transition_logits);
  }
  WriteGrad(f.grad_out, "gamma_logits", {uint64_t(H)}, g.gamma_logits);
  return 0;
}

// --- decode -------------------------------------------------------------------

struct DecodeFlags {
  InputFlags in;
  bool greedy = false;
  int beam = 0;
};

int RunDecode(const DecodeFlags& f) {
  const Inputs in = LoadInputs(f.in);
  DecodeResult r;
  if (f.beam > 0) {
    r = in.map ? BeamDecode(*in.map, *in.psi, f.beam).front() : BeamDecode(*in.seq, f.beam).front();
  } else {
    r = in.map ? GreedyDecode2D(*in.map, *in.psi) : GreedyDecode1D(*in.seq);
  }
  std::cout << "label=" << r.label.ToString(in.alphabet) << " score=" << Number(r.score) << "\n";
  return 0;
}

// --- visualize ----------------------------------------------------------------

int RunVisualize(const InputFlags& flags, const std::string& prefix) {
  const Inputs in = LoadInputs(flags);
  json sidecar{{"alphabet", in.alphabet.symbols()}};
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, int rows, int cols, const std::vector<double>& v) {
    const std::string path = prefix + name + ".pgm";
    io::WritePgm(path, rows, cols, v);
    files.push_back(path);
  };
  const int C = in.map ? in.map->num_classes() : in.seq->num_classes();
  const int H = in.map ? in.map->height() : 1;
  const int W = in.map ? in.map->width() : in.seq->frames();
  const auto probs = in.map ? in.map->probs() : in.seq->probs();
  for (int c = 0; c < C; ++c) {
    std::vector<double> plane(static_cast<size_t>(H) * W);
    for (size_t r = 0; r < plane.size(); ++r) plane[r] = probs[r * C + c];
    emit("class_" + std::to_string(c), H, W, plane);
  }
  std::vector<uint64_t> shape = in.map ? std::vector<uint64_t>{uint64_t(H), uint64_t(W), uint64_t(C)}
                                       : std::vector<uint64_t>{uint64_t(W), uint64_t(C)};
  sidecar["probs"] = io::TensorToJson(io::Tensor::FromDouble(shape, probs));
  if (in.map && W > 1) {
    const TransitionMap& psi = *in.psi;
    const bool full = psi.variant() == TransitionVariant::kFull;
    // Rows are destination heights; columns are transition columns, and for
    // the full variant each column widens into one sub-column per source.
    const int cols = full ? (W - 1) * H : W - 1;
    std::vector<double> image(static_cast<size_t>(H) * cols);
    for (int to = 0; to < H; ++to) {
      for (int w = 0; w + 1 < W; ++w) {
        if (full) {
          for (int from = 0; from < H; ++from) {
            image[static_cast<size_t>(to) * cols + w * H + from] = psi.transition(from, w, to);
          }
        } else {
          image[static_cast<size_t>(to) * cols + w] = psi.transition(0, w, to);
        }
      }
    }
    emit("psi", H, cols, image);
    sidecar["variant"] = full ? "full" : "simplified";
    sidecar["psi"] = io::TensorToJson(io::Tensor::FromDouble(
        full ? std::vector<uint64_t>{uint64_t(H), uint64_t(W - 1), uint64_t(H)}
             : std::vector<uint64_t>{uint64_t(W - 1), uint64_t(H)},
        psi.psi()));
    sidecar["gamma"] = io::TensorToJson(io::Tensor::FromDouble({uint64_t(H)}, psi.gamma()));
  }
  const std::string side = prefix + "maps.json";
  std::ofstream out(side);
  out << sidecar.dump(1) << "\n";
  if (!out) throw io::FormatError("cannot write " + side);
  files.push_back(side);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
  return 0;
}

// --- demo / generate ----------------------------------------------------------

int RunDemo(const std::string& config_path, const std::string& out_path,
            std::optional<int> epochs, int threads, bool timings) {
  train::DemoConfig config =
      config_path.empty() ? train::DemoConfig{} : io::ReadDemoConfig(config_path);
  if (epochs) {
    if (*epochs < 0) throw io::FormatError("--epochs must be >= 0");
    config.hyper.epochs = *epochs;
  }
  config.hyper.threads = threads;
  const train::DemoReport report = train::RunDemo(config);
  const std::string text = io::DemoReportToJson(config, report, timings).dump(2);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << text << "\n";
    if (!out) throw io::FormatError("cannot write " + out_path);
  }
  std::printf("vanilla_accuracy=%.4f\n2d_accuracy=%.4f\n",
              report.vanilla.final_eval.accuracy, report.two_d.final_eval.accuracy);
  return 0;
}

int RunGenerate(const std::string& config_path, int count, uint64_t first,
                const std::string& dir) {
  synth::SynthConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw io::FormatError("cannot open " + config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw io::FormatError(config_path + ": " + e.what());
    }
    // Accept either a bare generator config or a demo config.
    config = j.contains("generator") ? io::DemoConfigFromJson(j).generator
                                     : io::ConfigFromJson(j);
  }
  if (count < 0) throw io::FormatError("--count must be >= 0");
  const auto instances = synth::Generate(config, count, first);
  io::WriteDataset(dir, config, instances);
  std::cout << "wrote " << instances.size() << " instances to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D-CTC loss, decoding and synthetic training demo"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = OpenMP default)")
      ->check(CLI::NonNegativeNumber);

  LossFlags loss;
  auto* loss_cmd = app.add_subcommand("loss", "Print the loss of a label");
  AddInputFlags(loss_cmd, loss.in);
  loss_cmd->add_option("--label", loss.label, "Target label")->required();
  loss_cmd->add_option("--loss", loss.loss, "Loss kind")
      ->check(CLI::IsMember({"vanilla", "2d"}));
  loss_cmd->add_flag("--permissive", loss.permissive,
                     "Clamp the loss of an infeasible label instead of failing");
  loss_cmd->add_option("--clamp", loss.clamp, "Loss reported for infeasible labels")
      ->capture_default_str();
  loss_cmd->add_option("--grad-out", loss.grad_out,
                       "Write logit gradients to PREFIX<name>.ctt");

  DecodeFlags decode;
  auto* decode_cmd = app.add_subcommand("decode", "Decode the most likely label");
  AddInputFlags(decode_cmd, decode.in);
  auto* greedy = decode_cmd->add_flag("--greedy", decode.greedy, "Best-path decoding");
  auto* beam = decode_cmd->add_option("--beam", decode.beam, "Prefix beam search width")
                   ->check(CLI::PositiveNumber);
  greedy->excludes(beam);

  InputFlags vis;
  std::string vis_out;
  auto* vis_cmd = app.add_subcommand("visualize", "Export maps as PGM images");
  AddInputFlags(vis_cmd, vis);
  vis_cmd->add_option("--out", vis_out, "Output path prefix")->required();

  std::string demo_config, demo_out;
  std::optional<int> demo_epochs;
  bool no_timings = false;
  auto* demo_cmd = app.add_subcommand("demo", "Train vanilla and 2D readouts and compare");
  demo_cmd->add_option("--config", demo_config, "Demo configuration (JSON)");
  demo_cmd->add_option("--out", demo_out, "Report path (JSON)");
  demo_cmd->add_option("--epochs", demo_epochs, "Override training.epochs");
  demo_cmd->add_flag("--no-timings", no_timings, "Omit wall-clock fields from the report");

  std::string gen_config, gen_out;
  int gen_count = 0;
  uint64_t gen_first = 0;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic dataset");
  gen_cmd->add_option("--config", gen_config, "Generator or demo configuration (JSON)");
  gen_cmd->add_option("--count", gen_count, "Number of instances")->required();
  gen_cmd->add_option("--first", gen_first, "Index of the first instance");
  gen_cmd->add_option("--out", gen_out, "Dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitMalformed;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*loss_cmd) return RunLoss(loss);
    if (*decode_cmd) {
      if (!decode.greedy && decode.beam == 0) decode.greedy = true;
      return RunDecode(decode);
    }
    if (*vis_cmd) return RunVisualize(vis, vis_out);
    if (*demo_cmd) return RunDemo(demo_config, demo_out, demo_epochs, threads, !no_timings);
    if (*gen_cmd) return RunGenerate(gen_config, gen_count, gen_first, gen_out);
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMalformed;
  }
  return kExitMalformed;
}
