#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "test_helpers.hpp"

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

std::string cli_path() {
  const char* path = std::getenv("SKELSSL_BIN");
  REQUIRE_MESSAGE(path != nullptr, "SKELSSL_BIN must point at the CLI binary");
  return path;
}

RunResult run(const std::string& command_tail) {
  const std::string command = cli_path() + " " + command_tail + " 2>&1";
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

// Fast shared settings for every training command in this file.
const char* kTinyFlags =
    " -D model.hidden=3 -D model.t_prime=4 -D train.batch=8"
    " -D train.epochs=2 -D train.pretrain_epochs=2 -D train.probe_epochs=3";

}  // namespace

TEST_CASE("--help exits 0 and prints usage without side effects") {
  RunResult r = run("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("Usage") != std::string::npos);
  for (const char* sub : {"gen-data", "pretrain", "train", "probe", "sweep",
                          "transfer", "semi"}) {
    CHECK(r.output.find(sub) != std::string::npos);
    CHECK(run(std::string(sub) + " --help").exit_code == 0);
  }
}

TEST_CASE("gen-data writes a parseable, seed-stable file") {
  testutil::TempDir dir("cli_gen");
  const std::string flags =
      " -D synthetic.classes=2 -D synthetic.per_class=4 -D synthetic.frames=12"
      " -D synthetic.joints=2 -D synthetic.seed=9 --out ";
  CHECK(run("gen-data" + flags + dir.file("a.skel")).exit_code == 0);
  CHECK(run("gen-data" + flags + dir.file("b.skel")).exit_code == 0);
  const std::string a = testutil::read_file(dir.file("a.skel"));
  CHECK(!a.empty());
  CHECK(a == testutil::read_file(dir.file("b.skel")));
  CHECK(a.rfind("SKEL1 8 2 2", 0) == 0);
}

TEST_CASE("invalid configuration fails with exit code 2 listing every problem") {
  RunResult r = run("gen-data -D synthetic.classes=0 -D synthetic.frames=0");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("synthetic.classes") != std::string::npos);
  CHECK(r.output.find("synthetic.frames") != std::string::npos);

  RunResult unknown = run("gen-data -D nosuch.key=1");
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.output.find("unknown key") != std::string::npos);
}

TEST_CASE("missing dataset files are data errors with exit code 3") {
  RunResult r = run("pretrain --data /nonexistent.skel --seed 1");
  CHECK(r.exit_code == 3);
}

TEST_CASE("training without a seed is a config error") {
  testutil::TempDir dir("cli_seed");
  run("gen-data -D synthetic.classes=2 -D synthetic.per_class=3"
      " -D synthetic.frames=12 -D synthetic.joints=2 --out " +
      dir.file("d.skel"));
  RunResult r = run("pretrain --data " + dir.file("d.skel"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("train.seed") != std::string::npos);
}

TEST_CASE("pretraining twice produces identical artifacts") {
  testutil::TempDir dir("cli_det");
  run("gen-data -D synthetic.classes=2 -D synthetic.per_class=4"
      " -D synthetic.frames=12 -D synthetic.joints=2 --out " +
      dir.file("d.skel"));
  const std::string base = std::string("pretrain --data ") + dir.file("d.skel") +
                           " --seed 5" + kTinyFlags + " --out ";
  CHECK(run(base + dir.file("r1")).exit_code == 0);
  CHECK(run(base + dir.file("r2")).exit_code == 0);
  CHECK(testutil::read_file(dir.file("r1/pretrain.ckpt")) ==
        testutil::read_file(dir.file("r2/pretrain.ckpt")));
  CHECK(testutil::read_file(dir.file("r1/pretrain.csv")) ==
        testutil::read_file(dir.file("r2/pretrain.csv")));
  CHECK(!testutil::read_file(dir.file("r1/pretrain.ckpt")).empty());
}

TEST_CASE("moving without a checkpoint names the missing flag") {
  testutil::TempDir dir("cli_moving");
  run("gen-data -D synthetic.classes=2 -D synthetic.per_class=4"
      " -D synthetic.frames=12 -D synthetic.joints=2 --out " +
      dir.file("d.skel"));
  RunResult r = run("train --data " + dir.file("d.skel") +
                    " --strategy moving --seed 3" + kTinyFlags);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("moving requires --init") != std::string::npos);
}

TEST_CASE("the probe prints its contract line") {
  testutil::TempDir dir("cli_probe");
  run("gen-data -D synthetic.classes=2 -D synthetic.per_class=4"
      " -D synthetic.test_per_class=2 -D synthetic.frames=12"
      " -D synthetic.joints=2 --out " +
      dir.file("d.skel"));
  RunResult r = run("probe --data " + dir.file("d.skel") + " --test " +
                    dir.file("d.test.skel") + " --seed 3" + kTinyFlags);
  CHECK(r.exit_code == 0);
  CHECK(r.output.rfind("probe,rand,", 0) == 0);
}

TEST_CASE("an end-to-end train run emits checkpoint and report") {
  testutil::TempDir dir("cli_train");
  run("gen-data -D synthetic.classes=2 -D synthetic.per_class=4"
      " -D synthetic.test_per_class=2 -D synthetic.frames=12"
      " -D synthetic.joints=2 --out " +
      dir.file("d.skel"));
  RunResult r = run("train --data " + dir.file("d.skel") + " --test " +
                    dir.file("d.test.skel") + " --strategy jointly --seed 3" +
                    kTinyFlags + " --out " + dir.file("run"));
  CHECK(r.exit_code == 0);
  const std::string csv = testutil::read_file(dir.file("run/train.csv"));
  CHECK(csv.rfind("epoch,L_m,L_j,L_c,L_self,L_cls,theta,lr,train_acc,test_acc\n", 0) ==
        0);
  CHECK(!testutil::read_file(dir.file("run/train.ckpt")).empty());
}

TEST_CASE("a sweep over three subsets writes three rows") {
  testutil::TempDir dir("cli_sweep");
  run("gen-data -D synthetic.classes=2 -D synthetic.per_class=4"
      " -D synthetic.test_per_class=2 -D synthetic.frames=12"
      " -D synthetic.joints=2 --out " +
      dir.file("d.skel"));
  RunResult r = run("sweep --data " + dir.file("d.skel") + " --test " +
                    dir.file("d.test.skel") + " --seed 3 --subsets m,j,mjc" +
                    kTinyFlags + " --out " + dir.file("sw"));
  CHECK(r.exit_code == 0);
  const std::string csv = testutil::read_file(dir.file("sw/sweep.csv"));
  CHECK(csv.rfind("subset,accuracy\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.find("prediction+jigsaw+contrastive,") != std::string::npos);
}

TEST_CASE("config files and overrides merge, later wins") {
  testutil::TempDir dir("cli_cfg");
  {
    const std::string cfg =
        "# comment\n"
        "synthetic.classes = 3\n"
        "synthetic.per_class = 4\n"
        "synthetic.frames = 12\n"
        "synthetic.joints = 2\n";
    FILE* f = fopen(dir.file("run.cfg").c_str(), "wb");
    fwrite(cfg.data(), 1, cfg.size(), f);
    fclose(f);
  }
  RunResult r = run("gen-data --config " + dir.file("run.cfg") +
                    " -D synthetic.classes=2 --out " + dir.file("d.skel"));
  CHECK(r.exit_code == 0);
  CHECK(testutil::read_file(dir.file("d.skel")).rfind("SKEL1 8 2 2", 0) == 0);
}

TEST_CASE("semi splits, trains both phases and reports") {
  testutil::TempDir dir("cli_semi");
  run("gen-data -D synthetic.classes=2 -D synthetic.per_class=6"
      " -D synthetic.test_per_class=2 -D synthetic.frames=12"
      " -D synthetic.joints=2 --out " +
      dir.file("d.skel"));
  RunResult r = run("semi --data " + dir.file("d.skel") + " --test " +
                    dir.file("d.test.skel") + " --fraction 0.5 --seed 3" + kTinyFlags +
                    " --out " + dir.file("sm"));
  CHECK(r.exit_code == 0);
  const std::string csv = testutil::read_file(dir.file("sm/semi.csv"));
  // 2 pretrain epochs + 2 finetune epochs + header
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("transfer runs across two synthetic datasets") {
  testutil::TempDir dir("cli_transfer");
  run("gen-data -D synthetic.classes=2 -D synthetic.per_class=4"
      " -D synthetic.frames=12 -D synthetic.joints=2 -D synthetic.seed=1 --out " +
      dir.file("src.skel"));
  run("gen-data -D synthetic.classes=3 -D synthetic.per_class=4"
      " -D synthetic.frames=12 -D synthetic.joints=2 -D synthetic.seed=2 --out " +
      dir.file("tgt.skel"));
  RunResult r = run("transfer --source " + dir.file("src.skel") + " --target " +
                    dir.file("tgt.skel") + " --seed 3" + kTinyFlags + " --out " +
                    dir.file("tr"));
  CHECK(r.exit_code == 0);
  CHECK(!testutil::read_file(dir.file("tr/transfer.ckpt")).empty());
}
