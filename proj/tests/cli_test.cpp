#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gievents/io.hpp"

#ifndef GIEVENTS_CLI
#error "GIEVENTS_CLI must point at the gievents executable"
#endif

namespace gievents {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gievents_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(GIEVENTS_CLI) + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string p(const std::string& name) { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, SynthDecodeEvalRoundTrip) {
  ASSERT_EQ(run("synth --banded-prior --out-dir " + p("c") + " --videos 2 --frames 500 --seed 3"),
            0);
  ASSERT_TRUE(fs::exists(p("c/synth_000_probs.csv")));
  ASSERT_TRUE(fs::exists(p("c/synth_001_gt.json")));

  ASSERT_EQ(run("eval --pred " + p("c/synth_000_gt.json") + " --gt " + p("c/synth_000_gt.json")),
            1) << "GT files carry no scores and must be rejected as predictions";

  ASSERT_EQ(run("decode -i " + p("c/synth_000_probs.csv") + " " + p("c/synth_001_probs.csv") +
                " --out-dir " + p("pred")),
            0);
  ASSERT_EQ(run("eval --pred " + p("pred/synth_000_pred.json") + " " +
                p("pred/synth_001_pred.json") + " --gt " + p("c/synth_000_gt.json") + " " +
                p("c/synth_001_gt.json") + " -o " + p("report.json")),
            0);
  const auto report = json::parse(slurp(p("report.json")));
  EXPECT_EQ(report["overall_map"]["0.5"].get<double>(), 1.0);

  ASSERT_EQ(run("eval --pred " + p("pred/synth_000_pred.json") + " --gt " +
                p("pred/synth_000_pred.json")),
            0);
  EXPECT_NE(slurp(p("stdout.txt")).find("1.0000"), std::string::npos);
}

TEST_F(Cli, DecodeIsByteDeterministic) {
  ASSERT_EQ(run("synth --out-dir " + p("c") + " --frames 800 --noise 0.2 --implausible-rate 0.1"),
            0);
  ASSERT_EQ(run("decode -i " + p("c/synth_000_probs.csv") + " -o " + p("a.json")), 0);
  ASSERT_EQ(run("decode -i " + p("c/synth_000_probs.csv") + " -o " + p("b.json")), 0);
  EXPECT_EQ(slurp(p("a.json")), slurp(p("b.json")));
  ASSERT_EQ(run("decode --decoder viterbi --stay-prob 0.95 --temperature 1.5 -i " +
                p("c/synth_000_probs.csv") + " -o " + p("v.json")),
            0);
  EXPECT_NE(slurp(p("v.json")), slurp(p("a.json")));
}

TEST_F(Cli, DebugReportsCounts) {
  ASSERT_EQ(run("synth --out-dir " + p("c") + " --frames 600 --noise 0.1"), 0);
  ASSERT_EQ(run("decode --composition per_label -i " + p("c/synth_000_probs.csv") + " -o " +
                p("pl.json")),
            0);
  ASSERT_EQ(run("debug --pred " + p("pl.json") + " --gt " + p("c/synth_000_gt.json") + " -o " +
                p("counts.json")),
            0);
  const auto counts = json::parse(slurp(p("counts.json")));
  EXPECT_GE(counts["total_ground_truth"].get<std::size_t>(),
            counts["total_predicted"].get<std::size_t>());
}

TEST_F(Cli, WeightsOnBalancedLabels) {
  {
    std::ofstream out(p("labels.csv"));
    const auto space = LabelSpace::default_space();
    Matrix<std::uint8_t> m(4, kNumClasses, 0);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      m(0, c) = 1;
      m(2, c) = 1;
    }
    write_frame_csv(out, m, space);
  }
  ASSERT_EQ(run("weights --labels " + p("labels.csv") + " -o " + p("w.json")), 0);
  const auto w = json::parse(slurp(p("w.json")));
  EXPECT_EQ(w["w_min"].get<double>(), 1.0);
  EXPECT_EQ(w["w_max"].get<double>(), 50.0);
  for (const auto& [name, c] : w["classes"].items()) EXPECT_EQ(c["weight"].get<double>(), 1.0);
}

TEST_F(Cli, ConfigFileAndEnvironment) {
  std::ofstream(p("cfg.json")) << R"({"decoder":{"t_on":0.9,"t_off":0.8}})";
  ASSERT_EQ(run("synth --out-dir " + p("c") + " --frames 300 --noise 0.2"), 0);
  ASSERT_EQ(run("--config " + p("cfg.json") + " decode -i " + p("c/synth_000_probs.csv") +
                " -o " + p("strict.json")),
            0);
  const std::string env = "GIEVENTS_CONFIG=" + p("cfg.json") + " ";
  const std::string cmd = env + GIEVENTS_CLI + " decode -i " + p("c/synth_000_probs.csv") +
                          " -o " + p("env.json") + " 2>/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(slurp(p("strict.json")), slurp(p("env.json")));
  ASSERT_EQ(run("decode -i " + p("c/synth_000_probs.csv") + " -o " + p("default.json")), 0);
  EXPECT_NE(slurp(p("strict.json")), slurp(p("default.json")));
}

TEST_F(Cli, ErrorsExitNonZeroWithDiagnostic) {
  std::ofstream(p("bad.csv")) << "frame,mouth\n0,0.5\n";
  EXPECT_NE(run("decode -i " + p("bad.csv") + " -o " + p("x.json")), 0);
  EXPECT_NE(slurp(p("stderr.txt")).find("missing column"), std::string::npos);
  EXPECT_NE(run("decode -i " + p("nope.csv") + " -o " + p("x.json")), 0);
  EXPECT_NE(run("frobnicate"), 0);
  std::ofstream(p("bad.json")) << R"({"video_id":"v","frame_count":3,"events":[{"label":"colon","start_frame":2,"end_frame":1}]})";
  EXPECT_NE(run("debug --pred " + p("bad.json") + " --gt " + p("bad.json")), 0);
  EXPECT_NE(slurp(p("stderr.txt")).find("event 0"), std::string::npos);
}

}  // namespace
}  // namespace gievents
