// Drives the malclass executable end to end.

#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "malclass/report.hpp"

#ifndef MALCLASS_CLI_PATH
#error "MALCLASS_CLI_PATH must point at the malclass executable"
#endif

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status;
  std::string err;
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("malclass_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunResult run(const std::string& args, const fs::path& dir) {
  const auto err_file = dir / "stderr.txt";
  const std::string cmd = std::string(MALCLASS_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + err_file.string();
  const int raw = std::system(cmd.c_str());
  std::ifstream in(err_file);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(raw), ss.str()};
}

std::string slurp(const fs::path& p) { return malclass::read_text_file(p); }

}  // namespace

TEST_CASE("pipeline on the tiny corpus") {
  auto dir = scratch("tiny");
  auto r = run("pipeline --scale tiny --model random_forest --workdir " + (dir / "w").string(), dir);
  REQUIRE(r.status == 0);
  const auto metrics = slurp(dir / "w/eval/metrics.csv");
  CHECK(metrics.rfind("classifier,accuracy,f1,recall,precision\nRandom Forest,", 0) == 0);
  const auto confusion = slurp(dir / "w/eval/confusion.csv");
  CHECK(confusion.find("label,Adware,Backdoor,Downloader,Spyware,Trojan,Worm,Virus,Benign") == 0);
  CHECK(std::count(confusion.begin(), confusion.end(), '\n') == 9);
  CHECK(fs::exists(dir / "w/eval/confusion.svg"));
  CHECK(fs::exists(dir / "w/models/random_forest.json"));
  fs::remove_all(dir);
}

TEST_CASE("featurize without ingest reports a missing artifact") {
  auto dir = scratch("missing");
  auto r = run("featurize --workdir " + (dir / "w").string(), dir);
  CHECK(r.status != 0);
  CHECK(r.err.rfind("error: MissingArtifact:", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("bad configuration is rejected") {
  auto dir = scratch("badcfg");
  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "selection.nonsense = 3\n";
  }
  auto r = run("print-config --config " + (dir / "bad.cfg").string(), dir);
  CHECK(r.status != 0);
  CHECK(r.err.rfind("error: ConfigError:", 0) == 0);
  auto r2 = run("print-config --selection.target_ratio 0", dir);
  CHECK(r2.status != 0);
  fs::remove_all(dir);
}

TEST_CASE("help documents every config key") {
  auto dir = scratch("help");
  auto r = run("--help", dir);
  CHECK(r.status == 0);
  const auto out = slurp(dir / "stdout.txt");
  for (const char* key : {"selection.target_ratio", "selection.min_df", "ngram.sizes", "model.kind", "split.train_ratio",
                          "vectorizer.l2", "io.manifest", "seed"})
    CHECK(out.find(key) != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config file and flags agree; flags override the file") {
  auto dir = scratch("cfg");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# comment\nselection.target_ratio = 0.5\nmodel.kind = knn\nmodel.k = 3\n";
  }
  auto r = run("print-config --config " + (dir / "run.cfg").string() + " --selection.target_ratio 0.25", dir);
  REQUIRE(r.status == 0);
  const auto out = slurp(dir / "stdout.txt");
  CHECK(out.find("selection.target_ratio = 0.25") != std::string::npos);
  CHECK(out.find("model.kind = knn") != std::string::npos);
  CHECK(out.find("model.k = 3") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("stage-by-stage run equals the pipeline run") {
  auto dir = scratch("stages");
  const std::string common = " --model all --seed 5";
  REQUIRE(run("pipeline --workdir " + (dir / "a").string() + common, dir).status == 0);
  for (const char* stage : {"synth", "ingest", "featurize", "select", "train", "evaluate"})
    REQUIRE(run(std::string(stage) + " --workdir " + (dir / "b").string() + common, dir).status == 0);
  CHECK(slurp(dir / "a/eval/metrics.csv") == slurp(dir / "b/eval/metrics.csv"));
  CHECK(slurp(dir / "a/selection/mask.csv") == slurp(dir / "b/selection/mask.csv"));
  fs::remove_all(dir);
}

TEST_CASE("identity selection matches a run with selection switched off") {
  auto dir = scratch("identity");
  REQUIRE(run("pipeline --workdir " + (dir / "a").string(), dir).status == 0);
  // Reuse the features from run a, then select with the filters off.
  fs::copy(dir / "a", dir / "b", fs::copy_options::recursive);
  REQUIRE(run("select --target-ratio 1.0 --no-lexical --no-frequency --workdir " + (dir / "b").string(), dir).status == 0);
  REQUIRE(run("train --workdir " + (dir / "b").string(), dir).status == 0);
  REQUIRE(run("evaluate --workdir " + (dir / "b").string(), dir).status == 0);

  fs::copy(dir / "a", dir / "c", fs::copy_options::recursive);
  const std::string off = " --selection.lexical \"\" --selection.frequency false --selection.mi false"
                          " --selection.correlation false --selection.target_ratio 1 --workdir " +
                          (dir / "c").string();
  REQUIRE(run("select" + off, dir).status == 0);
  REQUIRE(run("train" + off, dir).status == 0);
  REQUIRE(run("evaluate" + off, dir).status == 0);

  const auto vocab_lines = slurp(dir / "b/features/vocabulary.csv");
  const auto mask_lines = slurp(dir / "b/selection/mask.csv");
  CHECK(std::count(vocab_lines.begin(), vocab_lines.end(), '\n') ==
        std::count(mask_lines.begin(), mask_lines.end(), '\n'));
  CHECK(slurp(dir / "b/eval/metrics.csv") == slurp(dir / "c/eval/metrics.csv"));
  fs::remove_all(dir);
}
