// Drives the installed binary end to end through a shell, checking exit
// codes, artifacts and byte-level determinism.

#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "greedypixel/attack.hpp"
#include "greedypixel/image_io.hpp"
#include "greedypixel/nets.hpp"
#include "greedypixel/priority_map.hpp"
#include "greedypixel/rng.hpp"
#include "greedypixel/serialize.hpp"
#include "greedypixel/synthetic.hpp"

namespace gp = greedypixel;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(GP_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr) << cmd;
  CliResult r;
  char buf[4096];
  while (pipe && fgets(buf, sizeof buf, pipe)) r.out += buf;
  if (pipe) {
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gp_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// image whose values sit exactly on the 8-bit grid, so a PPM round trip is
// lossless and the on-disk image equals the in-memory one
gp::Image byte_grid_image(gp::Shape s, std::uint64_t seed) {
  gp::SplitMix64 g(seed);
  std::vector<double> data(s.volume());
  for (double& v : data) {
    v = static_cast<double>(26 + g.next_below(204)) / 255.0;  // bytes 26..229
  }
  return gp::Image(s, std::move(data));
}

gp::Json parse_file(const std::string& path) {
  return gp::Json::parse(gp::read_text_file(path));
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli("--help").code, 0);
  EXPECT_EQ(run_cli("").code, 2);              // subcommand required
  EXPECT_EQ(run_cli("frobnicate").code, 2);    // unknown subcommand
  EXPECT_EQ(run_cli("attack --label 0").code, 2);  // missing required options
  EXPECT_EQ(run_cli("gen-model --arch linear --task random --shape bogus --out /tmp/x.json").code,
            2);
}

TEST(Cli, GenModelIsByteDeterministic) {
  TempDir dir;
  const std::string args =
      "gen-model --arch tinyconv --task random --shape 3x5x5 --k 3 --filters 2 --seed 7 --out ";
  EXPECT_EQ(run_cli(args + dir.file("a.json")).code, 0);
  EXPECT_EQ(run_cli(args + dir.file("b.json")).code, 0);
  EXPECT_EQ(gp::read_text_file(dir.file("a.json")), gp::read_text_file(dir.file("b.json")));

  // and the file loads back as a working model
  const auto model = gp::load_model(dir.file("a.json"));
  EXPECT_EQ(model->class_count(), 3);
  EXPECT_EQ(model->input_shape(), (gp::Shape{3, 5, 5}));
}

TEST(Cli, AttackEndToEndMatchesLibrary) {
  TempDir dir;
  const gp::Shape s{3, 8, 8};
  const std::string model_path = dir.file("model.json");
  ASSERT_EQ(run_cli("gen-model --arch linear --task random --shape 3x8x8 --k 3 --seed 40 --out " +
                    model_path)
                .code,
            0);
  const auto net = gp::load_model(model_path);

  const gp::Image x = byte_grid_image(s, 400);
  const std::string image_path = dir.file("clean.ppm");
  gp::write_image(x, image_path);
  ASSERT_EQ(gp::read_image(image_path), x);
  const int label = gp::argmax(net->logits(x));

  gp::AttackConfig cfg;
  cfg.epsilon = 8.0 / 255.0;
  cfg.threat = gp::ThreatModel::WhiteBoxLimited;
  cfg.max_queries = 4096;
  const gp::AttackResult expect = gp::run_attack(*net, nullptr, x, label, cfg);

  const std::string out = dir.file("run");
  const CliResult cli = run_cli(
      "attack --image " + image_path + " --label " + std::to_string(label) + " --target file:" +
      model_path + " --threat wb --eps 0.03137254901960784 --max-queries 4096 --out " + out);
  EXPECT_EQ(cli.code, expect.success ? 0 : 3) << cli.out;

  const gp::Json r = parse_file(out + "/result.json");
  EXPECT_EQ(r["success"].get<bool>(), expect.success);
  EXPECT_EQ(r["pixel_steps"].get<std::uint64_t>(), expect.pixel_steps);
  EXPECT_EQ(r["queries_used"].get<std::uint64_t>(), expect.queries_used);
  EXPECT_EQ(r["queries_used"].get<std::uint64_t>(), r["pixel_steps"].get<std::uint64_t>() * 8);
  EXPECT_EQ(r["setup_queries"].get<std::uint64_t>(), 1u);
  EXPECT_EQ(r["modified_pixels"].get<std::uint64_t>(), expect.modified_pixels);
  EXPECT_DOUBLE_EQ(r["final_loss"].get<double>(), expect.final_loss);
  EXPECT_EQ(r["loss_trace"].size(), expect.pixel_steps + 1);
  EXPECT_EQ(r["config"]["threat"].get<std::string>(), "wb");

  // artifacts: perturbed image within budget of the clean one, plus heatmap
  const gp::Image adv = gp::read_image(out + "/adversarial.ppm");
  double linf = 0.0;
  for (std::size_t i = 0; i < adv.data().size(); ++i) {
    linf = std::max(linf, std::abs(adv.data()[i] - x.data()[i]));
  }
  EXPECT_LE(linf, cfg.epsilon + 0.5 / 255.0);
  const gp::Image gray = gp::read_image(out + "/delta_gray.pgm");
  EXPECT_EQ(gray.shape(), (gp::Shape{1, 8, 8}));

  // manifest checksums match the files on disk
  const gp::Json manifest = parse_file(out + "/manifest.json");
  for (const auto& entry : manifest["outputs"]) {
    EXPECT_EQ(entry["fnv1a64"].get<std::string>(),
              gp::file_checksum(entry["path"].get<std::string>()));
  }
}

TEST(Cli, DominantChannelAttackSucceedsAtFullScale) {
  TempDir dir;
  const gp::Shape s{3, 16, 16};
  const std::string model_path = dir.file("model.json");
  ASSERT_EQ(
      run_cli("gen-model --arch linear --task dominant-channel --shape 3x16x16 --seed 50 --out " +
              model_path)
          .code,
      0);
  const gp::SyntheticSample sample = gp::make_dominant_channel_sample(s, 50, 500);
  const std::string image_path = dir.file("clean.ppm");
  gp::write_image(sample.x, image_path);

  const CliResult cli = run_cli("attack --image " + image_path + " --label " +
                                std::to_string(sample.label) + " --target file:" + model_path +
                                " --threat wb --eps 0.03137254901960784 --max-queries 8192" +
                                " --out " + dir.file("run"));
  EXPECT_EQ(cli.code, 0) << cli.out;
  const gp::Json r = parse_file(dir.file("run") + "/result.json");
  EXPECT_TRUE(r["success"].get<bool>());
  EXPECT_LT(r["final_loss"].get<double>(), 0.0);
  EXPECT_LE(r["linf"].get<double>(), 8.0 / 255.0 + 1e-12);
  EXPECT_EQ(gp::read_image(dir.file("run") + "/adversarial.ppm").shape(), s);
}

TEST(Cli, AttackArtifactsAreDeterministic) {
  TempDir dir;
  const std::string model_path = dir.file("model.json");
  ASSERT_EQ(run_cli("gen-model --arch linear --task random --shape 3x6x6 --k 3 --seed 41 --out " +
                    model_path)
                .code,
            0);
  const gp::Image x = byte_grid_image({3, 6, 6}, 410);
  const std::string image_path = dir.file("clean.ppm");
  gp::write_image(x, image_path);
  const auto net = gp::load_model(model_path);
  const int label = gp::argmax(net->logits(x));

  const std::string common = "attack --image " + image_path + " --label " +
                             std::to_string(label) + " --target file:" + model_path +
                             " --threat wb --max-queries 2048 --out ";
  run_cli(common + dir.file("r1"));
  run_cli(common + dir.file("r2"));
  EXPECT_EQ(gp::read_text_file(dir.file("r1") + "/result.json"),
            gp::read_text_file(dir.file("r2") + "/result.json"));
  EXPECT_EQ(gp::read_text_file(dir.file("r1") + "/adversarial.ppm"),
            gp::read_text_file(dir.file("r2") + "/adversarial.ppm"));
}

TEST(Cli, AlreadyMisclassifiedInputShortCircuits) {
  TempDir dir;
  const std::string model_path = dir.file("model.json");
  ASSERT_EQ(run_cli("gen-model --arch linear --task random --shape 3x4x4 --k 3 --seed 42 --out " +
                    model_path)
                .code,
            0);
  const gp::Image x = byte_grid_image({3, 4, 4}, 420);
  const std::string image_path = dir.file("clean.ppm");
  gp::write_image(x, image_path);
  const auto net = gp::load_model(model_path);
  const int wrong_label = gp::cw_runner_up(net->logits(x), gp::argmax(net->logits(x)));

  const CliResult cli = run_cli("attack --image " + image_path + " --label " +
                                std::to_string(wrong_label) + " --target file:" + model_path +
                                " --threat wb --out " + dir.file("run"));
  EXPECT_EQ(cli.code, 0) << cli.out;
  const gp::Json r = parse_file(dir.file("run") + "/result.json");
  EXPECT_TRUE(r["success"].get<bool>());
  EXPECT_EQ(r["pixel_steps"].get<std::uint64_t>(), 0u);
  EXPECT_EQ(r["queries_used"].get<std::uint64_t>(), 0u);
  EXPECT_EQ(r["setup_queries"].get<std::uint64_t>(), 1u);
  EXPECT_EQ(r["modified_pixels"].get<std::uint64_t>(), 0u);
}

TEST(Cli, UnlimitedThreatPinsEpsilon) {
  TempDir dir;
  const std::string model_path = dir.file("model.json");
  ASSERT_EQ(run_cli("gen-model --arch linear --task random --shape 3x4x4 --k 3 --seed 43 --out " +
                    model_path)
                .code,
            0);
  const gp::Image x = byte_grid_image({3, 4, 4}, 430);
  const std::string image_path = dir.file("clean.ppm");
  gp::write_image(x, image_path);
  const auto net = gp::load_model(model_path);
  const int label = gp::argmax(net->logits(x));
  const std::string base = "attack --image " + image_path + " --label " + std::to_string(label) +
                           " --target file:" + model_path + " --threat bb-unl --map random ";

  EXPECT_EQ(run_cli(base + "--eps 0.5 --out " + dir.file("bad")).code, 2);

  const CliResult ok = run_cli(base + "--out " + dir.file("run"));
  EXPECT_TRUE(ok.code == 0 || ok.code == 3) << ok.out;
  const gp::Json r = parse_file(dir.file("run") + "/result.json");
  EXPECT_DOUBLE_EQ(r["config"]["epsilon"].get<double>(), 1.0);
  EXPECT_EQ(r["success"].get<bool>(), ok.code == 0);
}

TEST(Cli, AttackConfigErrorsExitWithUsageCode) {
  TempDir dir;
  const std::string model_path = dir.file("model.json");
  run_cli("gen-model --arch linear --task random --shape 3x4x4 --k 3 --seed 44 --out " +
          model_path);
  const gp::Image x = byte_grid_image({3, 4, 4}, 440);
  gp::write_image(x, dir.file("clean.ppm"));
  const std::string base = "attack --image " + dir.file("clean.ppm") +
                           " --label 0 --target file:" + model_path + " --out " + dir.file("o");

  EXPECT_EQ(run_cli(base + " --threat warlock").code, 2);
  EXPECT_EQ(run_cli(base + " --eps 1.5 --threat wb").code, 2);
  EXPECT_EQ(run_cli(base + " --threat bb").code, 2);  // gradient map needs a surrogate
  EXPECT_EQ(run_cli("attack --image " + dir.file("nope.ppm") +
                    " --label 0 --target file:" + model_path + " --out " + dir.file("o"))
                .code,
            2);
  EXPECT_EQ(run_cli("attack --image " + dir.file("clean.ppm") +
                    " --label 0 --target weights.json --out " + dir.file("o"))
                .code,
            2);  // target needs a file: or url: prefix
}

TEST(Cli, OracleCompareReportsZeroGapForTwoClassLinear) {
  TempDir dir;
  const std::string model_path = dir.file("model.json");
  ASSERT_EQ(run_cli("gen-model --arch linear --task random --shape 3x2x2 --k 2 --seed 45 --out " +
                    model_path)
                .code,
            0);
  const std::string report_path = dir.file("gap.json");
  const CliResult cli = run_cli("oracle-compare --model " + model_path +
                                " --label 0 --eps 0.03137254901960784 --seed 9 --out " +
                                report_path);
  EXPECT_EQ(cli.code, 0) << cli.out;
  const gp::Json report = parse_file(report_path);
  EXPECT_DOUBLE_EQ(report["gap"].get<double>(), 0.0);
  EXPECT_TRUE(report["is_coordinate_min"].get<bool>());
  EXPECT_EQ(report["states_visited"].get<std::uint64_t>(), 4096u);
  // stdout carries the same report
  EXPECT_NE(cli.out.find("\"gap\""), std::string::npos);
}

TEST(Cli, OracleCompareRefusesOversizedInstances) {
  TempDir dir;
  const std::string model_path = dir.file("model.json");
  ASSERT_EQ(run_cli("gen-model --arch linear --task random --shape 3x3x3 --k 2 --seed 46 --out " +
                    model_path)
                .code,
            0);
  EXPECT_EQ(run_cli("oracle-compare --model " + model_path + " --label 0").code, 2);
}

TEST(Cli, CoverageSimMatchesExpectation) {
  const CliResult cli = run_cli("coverage-sim --m 16 --trials 2000 --seed 3");
  EXPECT_EQ(cli.code, 0) << cli.out;
  EXPECT_NE(cli.out.find("M=16"), std::string::npos);
  const auto pos = cli.out.find("ratio=");
  ASSERT_NE(pos, std::string::npos);
  const double ratio = std::stod(cli.out.substr(pos + 6));
  EXPECT_NEAR(ratio, 1.0, 0.05);
}

TEST(Cli, MetricsAggregatesRunArtifacts) {
  TempDir dir;
  const std::string model_path = dir.file("model.json");
  ASSERT_EQ(run_cli("gen-model --arch linear --task random --shape 3x8x8 --k 3 --seed 47 --out " +
                    model_path)
                .code,
            0);
  const auto net = gp::load_model(model_path);
  std::vector<std::string> results, pairs;
  for (int i = 0; i < 2; ++i) {
    const gp::Image x = byte_grid_image({3, 8, 8}, 470 + static_cast<std::uint64_t>(i));
    const std::string image_path = dir.file("clean" + std::to_string(i) + ".ppm");
    gp::write_image(x, image_path);
    const int label = gp::argmax(net->logits(x));
    const std::string out = dir.file("run" + std::to_string(i));
    const CliResult cli = run_cli("attack --image " + image_path + " --label " +
                                  std::to_string(label) + " --target file:" + model_path +
                                  " --threat wb --max-queries 4096 --out " + out);
    ASSERT_TRUE(cli.code == 0 || cli.code == 3) << cli.out;
    results.push_back(out + "/result.json");
    pairs.push_back(image_path + ":" + out + "/adversarial.ppm");
  }
  const std::string report_path = dir.file("report.json");
  const CliResult cli = run_cli("metrics --results " + results[0] + " " + results[1] +
                                " --pair " + pairs[0] + " " + pairs[1] + " --out " + report_path);
  EXPECT_EQ(cli.code, 0) << cli.out;
  const gp::Json report = parse_file(report_path);
  EXPECT_EQ(report["samples"].size(), 2u);
  EXPECT_GE(report["asr"].get<double>(), 0.0);
  EXPECT_TRUE(report["samples"][0].contains("ssim"));
  EXPECT_GT(report["mean_ssim"].get<double>(), 0.5);  // tiny sparse perturbations
}

TEST(Cli, PriorityMapArtifacts) {
  TempDir dir;
  const std::string model_path = dir.file("model.json");
  ASSERT_EQ(run_cli("gen-model --arch linear --task random --shape 3x6x6 --k 3 --seed 48 --out " +
                    model_path)
                .code,
            0);
  const gp::Image x = byte_grid_image({3, 6, 6}, 480);
  const std::string image_path = dir.file("clean.ppm");
  gp::write_image(x, image_path);
  const auto net = gp::load_model(model_path);
  const int label = gp::argmax(net->logits(x));

  const CliResult cli = run_cli("priority-map --model " + model_path + " --image " + image_path +
                                " --label " + std::to_string(label) + " --out-json " +
                                dir.file("pm.json") + " --out-heatmap " + dir.file("heat.pgm"));
  EXPECT_EQ(cli.code, 0) << cli.out;

  const gp::Json pm = parse_file(dir.file("pm.json"));
  ASSERT_EQ(pm["order"].size(), 36u);
  const gp::PriorityMap expect = gp::build_priority_map(*net, x, label);
  EXPECT_EQ(pm["order"][0][0].get<int>(), expect.order[0].h);
  EXPECT_EQ(pm["order"][0][1].get<int>(), expect.order[0].w);

  const gp::Image heat = gp::read_image(dir.file("heat.pgm"));
  EXPECT_EQ(heat.shape(), (gp::Shape{1, 6, 6}));
}
