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

// End-to-end checks of the ctc2d command-line tool.

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ctc2d/ctc2d.h"
#include "ctc2d/decoder.h"
#include "ctc2d/io.h"
#include "ctc2d/oracle.h"
#include "test_util.h"

#ifndef CTC2D_CLI_PATH
#error "CTC2D_CLI_PATH must name the ctc2d executable"
#endif

namespace ctc2d {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int status = -1;
  std::string out;
};

// Captures stdout, or stderr when `want_stderr` is set.
CliResult Cli(const std::string& args, bool want_stderr = false) {
  const std::string cmd = std::string(CTC2D_CLI_PATH) + " " + args +
                          (want_stderr ? " 2>&1 >/dev/null" : " 2>/dev/null");
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

CliResult CliStderr(const std::string& args) { return Cli(args, true); }

std::string FirstLine(const std::string& s) { return s.substr(0, s.find('\n')); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ctc2d_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string Write(const std::string& name, std::vector<uint64_t> shape,
                    const std::vector<double>& values) {
    const fs::path p = dir_ / name;
    io::WriteTensor(p, io::Tensor::FromDouble(std::move(shape), values));
    return p.string();
  }
  // One-hot rows spelling `path` over the default alphabet "-A..Z0..9".
  std::string WriteDelta(const std::string& name, const std::string& path, int H = 0,
                         std::vector<int> heights = {}) {
    const Alphabet a = Alphabet::WithBlank("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789");
    const int W = static_cast<int>(path.size()), C = a.size();
    if (H == 0) {
      std::vector<double> p(static_cast<size_t>(W) * C, 0.0);
      for (int t = 0; t < W; ++t) p[t * C + *a.IndexOf(path[t])] = 1.0;
      return Write(name, {uint64_t(W), uint64_t(C)}, p);
    }
    std::vector<double> p(static_cast<size_t>(H) * W * C, 0.0);
    for (int h = 0; h < H; ++h) {
      for (int w = 0; w < W; ++w) {
        p[(h * W + w) * C + (heights[w] == h ? *a.IndexOf(path[w]) : 0)] = 1.0;
      }
    }
    return Write(name, {uint64_t(H), uint64_t(W), uint64_t(C)}, p);
  }
  fs::path dir_;
};

TEST_F(CliTest, LossGoldenValues) {
  const auto u = Write("u.json", {2, 2}, {0.5, 0.5, 0.5, 0.5});
  const CliResult r = Cli("loss --probs " + u + " --label A");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(FirstLine(r.out), "loss=0.287682072452");

  const auto d = WriteDelta("d.ctt", "F-RE-E");
  EXPECT_EQ(FirstLine(Cli("loss --probs " + d + " --label FREE").out), "loss=0.000000000000");

  // The same uniform case as a 2 x 2 map through the 2D loss.
  const auto m = Write("m.ctt", {2, 2, 2}, std::vector<double>(8, 0.5));
  EXPECT_EQ(FirstLine(Cli("loss --probs " + m + " --label A").out), "loss=0.287682072452");
  EXPECT_EQ(FirstLine(Cli("loss --probs " + m + " --label A --loss vanilla").out),
            "loss=0.287682072452");
}

TEST_F(CliTest, InfeasibleLabel) {
  const auto d = WriteDelta("d4.ctt", "FREE", 2, {0, 1, 1, 0});
  const CliResult strict = Cli("loss --probs " + d + " --label FREE");
  EXPECT_EQ(strict.status, 2);
  EXPECT_EQ(strict.out, "");
  const CliResult msg = CliStderr("loss --probs " + d + " --label FREE");
  EXPECT_NE(msg.out.find("min_width=5"), std::string::npos) << msg.out;
  const CliResult lax = Cli("loss --probs " + d + " --label FREE --permissive --clamp 77");
  EXPECT_EQ(lax.status, 0);
  EXPECT_EQ(FirstLine(lax.out), "loss=77.000000000000");
}

TEST_F(CliTest, MalformedInput) {
  const auto u = Write("u.json", {2, 2}, {0.5, 0.5, 0.5, 0.5});
  EXPECT_EQ(Cli("loss --probs " + (dir_ / "missing.ctt").string() + " --label A").status, 1);
  EXPECT_EQ(Cli("loss --probs " + u).status, 1);
  EXPECT_EQ(Cli("loss --probs " + u + " --label Q").status, 1);
  EXPECT_EQ(Cli("loss --probs " + u + " --label A --loss 3d").status, 1);
  EXPECT_EQ(Cli("frobnicate").status, 1);
  const auto bad = Write("bad.json", {2, 2}, {0.5, 0.6, 0.5, 0.5});
  EXPECT_EQ(Cli("loss --probs " + bad + " --label A").status, 1);
  std::ofstream(dir_ / "junk.ctt") << "CTC2DT garbage";
  EXPECT_EQ(Cli("loss --probs " + (dir_ / "junk.ctt").string() + " --label A").status, 1);
  const auto m = Write("m.ctt", {2, 3, 2}, std::vector<double>(12, 0.5));
  const auto wrong_psi = Write("p.ctt", {3, 2}, std::vector<double>(6, 0.5));
  EXPECT_EQ(Cli("loss --probs " + m + " --psi " + wrong_psi + " --label A").status, 1);
}

TEST_F(CliTest, GradientFiles) {
  testing::Rng rng(1);
  const ProbMap2D x = testing::RandomMap(rng, 2, 4, 3);
  const auto psi = testing::RandomPsi(rng, TransitionVariant::kSimplified, 2, 4);
  const auto px = Write("x.ctt", {2, 4, 3}, {x.probs().begin(), x.probs().end()});
  const auto pp = Write("psi.ctt", {3, 2}, {psi.psi().begin(), psi.psi().end()});
  const auto pg = Write("gamma.ctt", {2}, {psi.gamma().begin(), psi.gamma().end()});
  const std::string prefix = (dir_ / "g_").string();
  const CliResult r = Cli("loss --probs " + px + " --psi " + pp + " --gamma " + pg +
                    " --label AB --alphabet AB --grad-out " + prefix);
  ASSERT_EQ(r.status, 0);
  const io::Tensor g = io::ReadTensor(prefix + "class_logits.ctt");
  EXPECT_EQ(g.shape, (std::vector<uint64_t>{2, 4, 3}));
  EXPECT_EQ(io::ReadTensor(prefix + "transition_logits.ctt").shape,
            (std::vector<uint64_t>{3, 2}));
  EXPECT_EQ(io::ReadTensor(prefix + "gamma_logits.ctt").shape, (std::vector<uint64_t>{2}));
  // Values agree with the library at float precision of the inputs.
  const ProbMap2D xf(2, 4, 3, io::ReadTensor(px).ToDouble());
  const TransitionMap tf(TransitionVariant::kSimplified, 2, 4, io::ReadTensor(pp).ToDouble(),
                         io::ReadTensor(pg).ToDouble());
  const auto want = Ctc2dGrad(xf, tf, Label({1, 2}));
  for (size_t k = 0; k < want.class_logits.size(); ++k) {
    EXPECT_NEAR(g.data[k], want.class_logits[k], 1e-6);
  }
}

TEST_F(CliTest, DecodeDeltaFixtures) {
  const std::vector<int> heights = {0, 1, 2, 2, 1, 0, 0, 1};
  const int H = 3, W = static_cast<int>(heights.size());
  std::vector<double> psi(static_cast<size_t>(W - 1) * H, 0.0);
  for (int w = 0; w + 1 < W; ++w) psi[w * H + heights[w + 1]] = 1.0;
  std::vector<double> gamma(H, 0.0);
  gamma[heights[0]] = 1.0;
  const std::string d1 = WriteDelta("d1.ctt", "F-RE-E");
  const std::string d2 = WriteDelta("d2.ctt", "FF-RE-EE", H, heights) + " --psi " +
                         Write("dpsi.ctt", {uint64_t(W - 1), uint64_t(H)}, psi) +
                         " --gamma " + Write("dg.ctt", {uint64_t(H)}, gamma);
  for (const auto& f : {d1, d2}) {
    const CliResult g = Cli("decode --probs " + f + " --greedy");
    EXPECT_EQ(g.status, 0);
    EXPECT_EQ(FirstLine(g.out), "label=FREE score=0.000000000000");
    EXPECT_EQ(FirstLine(Cli("decode --probs " + f + " --beam 1").out), FirstLine(g.out));
  }
}

TEST_F(CliTest, BeamMatchesExhaustiveArgmax) {
  testing::Rng rng(2);
  for (int i = 0; i < 5; ++i) {
    const ProbMap2D x = testing::RandomMap(rng, 2, 4, 3);
    const auto psi = testing::RandomPsi(rng, TransitionVariant::kSimplified, 2, 4);
    const auto px = Write("x.ctt", {2, 4, 3}, {x.probs().begin(), x.probs().end()});
    const auto pp = Write("psi.ctt", {3, 2}, {psi.psi().begin(), psi.psi().end()});
    const auto pg = Write("g.ctt", {2}, {psi.gamma().begin(), psi.gamma().end()});
    const ProbMap2D xf(2, 4, 3, io::ReadTensor(px).ToDouble());
    const TransitionMap tf(TransitionVariant::kSimplified, 2, 4, io::ReadTensor(pp).ToDouble(),
                           io::ReadTensor(pg).ToDouble());
    Label best;
    double p = -1;
    for (const auto& [y, q] : oracle::LabelDistribution(xf, tf)) {
      if (q > p) best = y, p = q;
    }
    const CliResult r = Cli("decode --probs " + px + " --psi " + pp + " --gamma " + pg +
                      " --alphabet AB --beam 64");
    const Alphabet a = Alphabet::WithBlank("AB");
    const std::string line = FirstLine(r.out);
    const size_t sep = line.find(" score=");
    ASSERT_NE(sep, std::string::npos) << line;
    EXPECT_EQ(line.substr(0, sep), "label=" + best.ToString(a));
    EXPECT_NEAR(std::stod(line.substr(sep + 7)), std::log(p), 1e-11);
  }
}

TEST_F(CliTest, VisualizeUniformAndDelta) {
  const auto u = Write("u.ctt", {2, 3, 4}, std::vector<double>(24, 0.25));
  const std::string prefix = (dir_ / "u_").string();
  ASSERT_EQ(Cli("visualize --probs " + u + " --out " + prefix).status, 0);
  for (int c = 0; c < 4; ++c) {
    const io::Pgm img = io::ReadPgm(prefix + "class_" + std::to_string(c) + ".pgm");
    EXPECT_EQ(img.rows, 2);
    EXPECT_EQ(img.cols, 3);
    for (uint8_t v : img.pixels) EXPECT_EQ(v, std::lround(255.0 / 4));
  }
  const io::Pgm psi = io::ReadPgm(prefix + "psi.pgm");
  EXPECT_EQ(psi.rows, 2);
  EXPECT_EQ(psi.cols, 2);

  // Delta transitions along heights 0 -> 2 -> 1: one bright pixel per column.
  const auto x = Write("x.ctt", {3, 3, 2}, std::vector<double>(18, 0.5));
  const auto p = Write("p.ctt", {2, 3}, {0, 0, 1, 0, 1, 0});
  const std::string dp = (dir_ / "d_").string();
  ASSERT_EQ(Cli("visualize --probs " + x + " --psi " + p + " --out " + dp).status, 0);
  const io::Pgm trace = io::ReadPgm(dp + "psi.pgm");
  EXPECT_EQ(trace.pixels, (std::vector<uint8_t>{0, 0, 0, 255, 255, 0}));

  // The sidecar keeps the raw values.
  const auto side = nlohmann::json::parse(std::ifstream(dp + "maps.json"));
  EXPECT_EQ(io::TensorFromJson(side["psi"]), io::ReadTensor(p));
  EXPECT_EQ(io::TensorFromJson(side["probs"]), io::ReadTensor(x));
}

TEST_F(CliTest, DemoEvaluationOnlyAndDeterministic) {
  std::ofstream(dir_ / "cfg.json") << R"({
    "generator": {"height": 4, "width": 12, "alphabet_size": 4, "min_label": 2,
                  "max_label": 3, "amplitude": 0.25, "noise": 0.1},
    "train_count": 30, "test_count": 12,
    "training": {"epochs": 2, "batch_size": 8}})";
  const std::string cfg = (dir_ / "cfg.json").string();
  const std::string r0 = (dir_ / "r0.json").string();
  const CliResult zero = Cli("demo --config " + cfg + " --epochs 0 --out " + r0);
  ASSERT_EQ(zero.status, 0);
  EXPECT_NE(zero.out.find("vanilla_accuracy="), std::string::npos);
  EXPECT_NE(zero.out.find("2d_accuracy="), std::string::npos);
  const auto rep = nlohmann::json::parse(std::ifstream(r0));
  EXPECT_TRUE(rep["2d"]["epochs"].empty());
  EXPECT_EQ(rep["2d"]["initial"], rep["2d"]["final"]);

  const std::string a = (dir_ / "a.json").string(), b = (dir_ / "b.json").string();
  ASSERT_EQ(Cli("--threads 1 demo --no-timings --config " + cfg + " --out " + a).status, 0);
  ASSERT_EQ(Cli("--threads 1 demo --no-timings --config " + cfg + " --out " + b).status, 0);
  std::ifstream fa(a), fb(b);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(fa), {}),
            std::string(std::istreambuf_iterator<char>(fb), {}));

  std::ofstream(dir_ / "bad.json") << R"({"training": {"epochs": -1}})";
  const CliResult bad = CliStderr("demo --config " + (dir_ / "bad.json").string());
  EXPECT_NE(bad.out.find("training.epochs"), std::string::npos) << bad.out;
}

TEST_F(CliTest, GenerateDataset) {
  const std::string out = (dir_ / "ds").string();
  ASSERT_EQ(Cli("generate --count 3 --out " + out).status, 0);
  EXPECT_EQ(io::ReadDataset(out).instances.size(), 3u);
}

}  // namespace
}  // namespace ctc2d
