// Copyright 2026 The invpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the built command-line tool end to end.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <gtest/gtest.h>

#include "invpose/image.h"
#include "invpose/mesh.h"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int status = -1;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(INVPOSE_CLI) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("invpose_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").status, 0);
  EXPECT_EQ(run("").status, 1);
  EXPECT_EQ(run("render --bogus").status, 1);
  EXPECT_EQ(run("render --mode fisheye").status, 1);
  EXPECT_EQ(run("loss").status, 1);
}

TEST_F(Cli, FixtureWritesLoadableFiles) {
  const CliResult r = run("fixture --out " + path("data"));
  ASSERT_EQ(r.status, 0);
  EXPECT_NO_THROW(invpose::load_mesh(path("data/toy_car.mesh")));
  EXPECT_NO_THROW(invpose::load_annotations(path("data/toy_car.ann")));
}

TEST_F(Cli, RenderThenLossAtTruthIsZero) {
  ASSERT_EQ(run("render --width 96 --height 64 --out " + dir_.string()).status, 0);
  const invpose::GrayImage photo = invpose::read_gray_image(path("photo.p2f"));
  EXPECT_EQ(photo.width(), 96);
  EXPECT_TRUE(fs::exists(path("attributes.attr4")));
  EXPECT_TRUE(fs::exists(path("coverage.pgm")));

  const CliResult loss = run("loss --photo " + path("photo.p2f"));
  ASSERT_EQ(loss.status, 0);
  EXPECT_LE(std::stod(loss.out), 1e-9);

  const CliResult off = run("loss --photo " + path("photo.p2f") + " --pose '5000 5000 40 0 0.3 0.3'");
  ASSERT_EQ(off.status, 0);
  EXPECT_EQ(std::stod(off.out), 1.0);
}

std::string bytes(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// The checked-in PGM was produced by `invpose render` with default settings.
TEST_F(Cli, DefaultFixturePhotoMatchesGoldenFile) {
  ASSERT_EQ(run("render --out " + path("a")).status, 0);
  ASSERT_EQ(run("render --out " + path("b")).status, 0);
  EXPECT_EQ(bytes(path("a/photo.p2f")), bytes(path("b/photo.p2f")));
  const std::string golden = bytes(std::string(INVPOSE_TEST_DATA) + "/toy_car_128.pgm");
  ASSERT_FALSE(golden.empty());
  EXPECT_EQ(bytes(path("a/photo.pgm")), golden);
}

TEST_F(Cli, RuntimeFailuresExitWithTwo) {
  EXPECT_EQ(run("loss --photo " + path("missing.pgm")).status, 2);
  EXPECT_EQ(run("render --mesh " + path("missing.mesh") + " --annotations " + path("x.ann")).status,
            2);
}

TEST_F(Cli, EstimateFromTruthAndWritesTrace) {
  const CliResult r = run("estimate --width 64 --height 48 --set simplex.max_evals=100 --trace " +
                    path("trace.csv") + " --overlay " + path("overlay.pgm"));
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("restarts 0"), std::string::npos);
  EXPECT_NE(r.out.find("deviation 0"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("trace.csv")));
  EXPECT_EQ(invpose::read_pgm(path("overlay.pgm")).width(), 64);
}

TEST_F(Cli, ReliabilityWritesCsv) {
  const CliResult r = run("reliability --width 48 --height 48 --bands 1 --trials 1 "
                    "--set simplex.max_evals=40 --set simplex.max_restarts=0 --out " +
                    dir_.string());
  ASSERT_EQ(r.status, 0);
  EXPECT_TRUE(fs::exists(path("trials.csv")));
  EXPECT_TRUE(fs::exists(path("summary.csv")));
  EXPECT_TRUE(fs::exists(path("config.txt")));
}

TEST_F(Cli, LandscapeWritesFifteenGrids) {
  const CliResult r = run("landscape --width 48 --height 48 --resolution 3 --out " + dir_.string());
  ASSERT_EQ(r.status, 0);
  int csvs = 0;
  for (const auto& e : fs::directory_iterator(dir_)) csvs += e.path().extension() == ".csv";
  EXPECT_EQ(csvs, 15);
}

TEST_F(Cli, ConfigFileAndOverrides) {
  {
    FILE* f = std::fopen(path("run.cfg").c_str(), "w");
    std::fputs("width=40\nheight=30\n", f);
    std::fclose(f);
  }
  ASSERT_EQ(run("render --config " + path("run.cfg") + " --height 20 --out " + dir_.string()).status,
            0);
  const invpose::GrayImage photo = invpose::read_gray_image(path("photo.p2f"));
  EXPECT_EQ(photo.width(), 40);
  EXPECT_EQ(photo.height(), 20);
  EXPECT_EQ(run("render --config " + path("absent.cfg")).status, 2);
  EXPECT_EQ(run("render --set nokey=1").status, 1);
}

}  // namespace
