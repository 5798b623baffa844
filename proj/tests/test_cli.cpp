#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "crsynth/cli/run_config.hpp"
#include "doctest.h"

using namespace crsynth;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("crsynth_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

int run(const std::string& args, const std::string& cwd) {
  std::string cmd = "cd " + cwd + " && " + CRSYNTH_CLI_PATH + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string capture(const std::string& args, const std::string& cwd) {
  std::string out_file = cwd + "/cmd_out.txt";
  std::string cmd = "cd " + cwd + " && " + CRSYNTH_CLI_PATH + " " + args + " > cmd_out.txt 2>&1";
  (void)std::system(cmd.c_str());
  std::ifstream in(out_file);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

const char* kSmallConfig = R"({
  "schema_version": 1,
  "generator": {"base_width": 6, "swin_embed_dim": 8, "swin_depths": [1,1,1,1], "swin_heads": [1,1,2,4], "window_size": 8, "dropout_rate": 0.1},
  "discriminator": {"widths": [6, 12, 12]},
  "train": {"epochs": 1, "batch_size": 4, "seed": 11},
  "data": {"manifest": "toy/manifest.jsonl", "run_dir": "runs/exp", "tile_size": 64}
})";

}  // namespace

TEST_CASE("run config: defaults, overrides, strict keys") {
  cli::RunConfig cfg = cli::parse_run_config(cli::default_run_config_text());
  CHECK(cfg.train.epochs == 200);
  CHECK(cfg.train.batch_size == 8);
  CHECK(cfg.train.lr == 0.001);
  CHECK(cfg.loss.lambda_gp == 10.0);
  CHECK(cfg.discriminator.in_channels == 10);

  cli::RunConfig small = cli::parse_run_config(kSmallConfig);
  CHECK(small.generator.base_width == 6);
  CHECK(small.train.epochs == 1);

  CHECK_THROWS_AS(cli::parse_run_config(R"({"schema_version": 1, "trian": {}})"), ConfigError);
  CHECK_THROWS_AS(cli::parse_run_config(R"({"schema_version": 1, "train": {"ablation": {"no_downupp": true}}})"),
                  ConfigError);
  CHECK_THROWS_AS(cli::parse_run_config(R"({"train": {}})"), ConfigError);  // missing schema_version
  CHECK_THROWS_AS(cli::parse_run_config(R"({"schema_version": 1, "data": {"tile_size": 66}})"), ConfigError);
}

TEST_CASE("make-toy-data is deterministic and validates before writing") {
  std::string dir = fresh_dir("mkdata");
  CHECK(run("make-toy-data --out toy --n 4 --size 64 --seed 7", dir) == 0);
  std::string h1 = capture("make-toy-data --out toy_b --n 4 --size 64 --seed 7", dir);
  std::string h2 = capture("make-toy-data --out toy_c --n 4 --size 64 --seed 7", dir);
  auto hash_of = [](const std::string& text) {
    auto pos = text.find("corpus-hash ");
    REQUIRE(pos != std::string::npos);
    return text.substr(pos, 28);
  };
  CHECK(hash_of(h1) == hash_of(h2));

  CHECK(run("make-toy-data --out toy --n 4 --size 64", dir) == 1);          // non-empty without --force
  CHECK(run("make-toy-data --out toy --n 4 --size 64 --force", dir) == 0);  // idempotent rerun
  CHECK(run("make-toy-data --out bad66 --n 2 --size 66", dir) == 1);
  CHECK_FALSE(fs::exists(dir + "/bad66"));

  // --cloud 0 leaves every time-1 mask clear
  CHECK(run("make-toy-data --out clear --n 3 --size 64 --cloud 0 --val-count 0 --test-count 0", dir) == 0);
  std::string manifest_text = slurp(dir + "/clear/manifest.jsonl");
  CHECK(manifest_text.find("\"cloud_t1\":0.0") != std::string::npos);
}

TEST_CASE("train, synthesize, evaluate, report round trip") {
  std::string dir = fresh_dir("pipeline");
  REQUIRE(run("make-toy-data --out toy --n 5 --size 64 --seed 7", dir) == 0);
  std::ofstream(dir + "/cfg.json") << kSmallConfig;

  REQUIRE(run("train --config cfg.json", dir) == 0);
  CHECK(fs::exists(dir + "/runs/exp/config.snapshot"));
  CHECK(fs::exists(dir + "/runs/exp/history.log"));
  CHECK(fs::exists(dir + "/runs/exp/best/checkpoint"));

  // config snapshot parses back into an equal RunConfig
  cli::RunConfig snap = cli::load_run_config(dir + "/runs/exp/config.snapshot");
  CHECK(snap.raw_text == std::string(kSmallConfig));
  CHECK(snap.train.seed == 11);

  REQUIRE(run("synthesize --config cfg.json --checkpoint runs/exp/best/checkpoint --split test --out preds", dir) ==
          0);
  int tile_count = 0;
  for (const auto& e : fs::directory_iterator(dir + "/preds")) {
    if (e.path().extension() == ".bin") ++tile_count;
  }
  CHECK(tile_count == 1);  // the toy split assigns one test tile

  // deterministic re-synthesis, byte-identical outputs
  REQUIRE(run("synthesize --config cfg.json --checkpoint runs/exp/best/checkpoint --split test --out preds2", dir) ==
          0);
  for (const auto& e : fs::directory_iterator(dir + "/preds")) {
    std::string name = e.path().filename().string();
    CHECK(slurp(e.path().string()) == slurp(dir + "/preds2/" + name));
  }

  REQUIRE(run("report --manifest toy/manifest.jsonl --split test --runs preds,preds2 --names a,b --out rep", dir) ==
          0);
  CHECK(fs::exists(dir + "/rep/comparison_table.txt"));
  int panels = 0;
  for (const auto& e : fs::directory_iterator(dir + "/rep/panels")) {
    if (e.path().extension() == ".png") ++panels;
  }
  CHECK(panels == 1);

  // panel arithmetic: 3 test tiles x 2 runs -> 3 panels, 2 prediction columns each
  REQUIRE(run("make-toy-data --out toy3 --n 6 --size 64 --seed 9 --val-count 1 --test-count 3", dir) == 0);
  std::ofstream(dir + "/cfg3.json") << std::string(kSmallConfig).replace(std::string(kSmallConfig).find("toy/"), 4,
                                                                         "toy3/");
  REQUIRE(run("train --config cfg3.json --run-dir runs/exp3", dir) == 0);
  REQUIRE(run("synthesize --config cfg3.json --manifest toy3/manifest.jsonl --checkpoint runs/exp3/best/checkpoint "
              "--split test --out preds3a",
              dir) == 0);
  int synth_count = 0;
  for (const auto& e : fs::directory_iterator(dir + "/preds3a")) {
    if (e.path().extension() == ".bin") ++synth_count;
  }
  CHECK(synth_count == 3);  // matches the manifest split size
  REQUIRE(run("report --manifest toy3/manifest.jsonl --split test --runs preds3a,preds3a --names r1,r2 --out rep3",
              dir) == 0);
  int panel_count = 0;
  for (const auto& e : fs::directory_iterator(dir + "/rep3/panels")) {
    if (e.path().extension() == ".png") ++panel_count;
  }
  CHECK(panel_count == 3);

  // evaluate with predictions equal to references: caps everywhere
  fs::create_directories(dir + "/refs");
  fs::copy_file(dir + "/toy/tiles/toy_4/s2_t2_ref.bin", dir + "/refs/toy_4.bin");
  fs::copy_file(dir + "/toy/tiles/toy_4/s2_t2_ref.json", dir + "/refs/toy_4.json");
  std::string eval_out = capture("evaluate --pred refs --ref refs --out eval_self", dir);
  CHECK(eval_out.find("100.000") != std::string::npos);
  CHECK(eval_out.find("1.000") != std::string::npos);

  // unmatched tile ids are an error listing the offenders
  fs::create_directories(dir + "/refs_other");
  fs::copy_file(dir + "/toy/tiles/toy_0/s2_t2_ref.bin", dir + "/refs_other/unrelated.bin");
  fs::copy_file(dir + "/toy/tiles/toy_0/s2_t2_ref.json", dir + "/refs_other/unrelated.json");
  std::string err = capture("evaluate --pred preds --ref refs_other --out eval_bad", dir);
  CHECK(run("evaluate --pred preds --ref refs_other --out eval_bad", dir) == 1);
  CHECK(err.find("unrelated") != std::string::npos);
}

TEST_CASE("CRSYNTH_RUN_ROOT override applies to relative run dirs") {
  CHECK(cli::resolve_run_dir("/abs/path") == "/abs/path");
  setenv("CRSYNTH_RUN_ROOT", "/tmp/rr", 1);
  CHECK(cli::resolve_run_dir("runs/x") == "/tmp/rr/runs/x");
  unsetenv("CRSYNTH_RUN_ROOT");
  CHECK(cli::resolve_run_dir("runs/x") == "runs/x");
}
