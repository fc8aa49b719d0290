#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rainlab/cli.hpp"
#include "rainlab/image.hpp"

using namespace rainlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("rainlab_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream f(p);
  f << body;
}

int run(std::vector<std::string> args) { return run_command(args); }

}  // namespace

TEST_CASE("help exits cleanly") {
  CHECK(run({"--help"}) == 0);
  CHECK(run({"synth", "--help"}) == 0);
  CHECK(run({"train", "--help"}) == 0);
}

TEST_CASE("bad arguments exit with code two") {
  CHECK(run({}) == 2);
  CHECK(run({"no-such-command"}) == 2);
  CHECK(run({"synth", "--no-such-flag", "1"}) == 2);
  CHECK(run({"synth"}) == 2);  // --out is required
  CHECK(run({"synth", "--out", (fs::temp_directory_path() / "x").string(), "--n", "-3"}) == 2);
}

TEST_CASE("config file values are used and flags win over them") {
  fs::path dir = fresh_dir("config");
  fs::path cfg = dir / "synth.json";
  write_text(cfg, R"({"out": ")" + (dir / "data").string() + R"(", "n": 3, "size": 16})");
  CHECK(run({"synth", "--config", cfg.string()}) == 0);
  CHECK(fs::exists(dir / "data" / "manifest.jsonl"));
  int pairs = 0;
  for (const auto& e : fs::directory_iterator(dir / "data"))
    if (e.path().extension() == ".ppm") ++pairs;
  CHECK(pairs == 6);  // 3 clean + 3 rainy

  // flag overrides the config's n
  fs::path dir2 = dir / "data2";
  write_text(cfg, R"({"out": ")" + dir2.string() + R"(", "n": 3, "size": 16})");
  CHECK(run({"synth", "--config", cfg.string(), "--n", "1"}) == 0);
  int pairs2 = 0;
  for (const auto& e : fs::directory_iterator(dir2))
    if (e.path().extension() == ".ppm") ++pairs2;
  CHECK(pairs2 == 2);
  fs::remove_all(dir);
}

TEST_CASE("unknown config keys and malformed config files exit with code two") {
  fs::path dir = fresh_dir("badcfg");
  fs::path cfg = dir / "bad.json";
  write_text(cfg, R"({"out": "x", "typo_key": 1})");
  CHECK(run({"synth", "--config", cfg.string()}) == 2);
  write_text(cfg, "{ not json");
  CHECK(run({"synth", "--config", cfg.string()}) == 2);
  CHECK(run({"synth", "--config", (dir / "absent.json").string()}) == 2);
  fs::remove_all(dir);
}

TEST_CASE("every run echoes its effective configuration") {
  fs::path dir = fresh_dir("echo");
  CHECK(run({"synth", "--out", (dir / "d").string(), "--n", "2", "--size", "16", "--seed", "9"}) == 0);
  fs::path echo = dir / "d" / "config_echo.synth.json";
  REQUIRE(fs::exists(echo));
  auto j = nlohmann::json::parse(std::ifstream(echo.string()));
  CHECK(j["n"] == 2);
  CHECK(j["size"] == 16);
  CHECK(j["seed"] == 9);

  // feeding the echo back as the config reproduces the dataset exactly
  fs::path redo = dir / "redo";
  auto j2 = j;
  j2["out"] = redo.string();
  write_text(dir / "echo_cfg.json", j2.dump());
  CHECK(run({"synth", "--config", (dir / "echo_cfg.json").string()}) == 0);
  for (const auto& e : fs::directory_iterator(dir / "d")) {
    if (e.path().filename().string().rfind("config_echo", 0) == 0) continue;
    CHECK(read_file(e.path().string()) == read_file((redo / e.path().filename()).string()));
  }
  fs::remove_all(dir);
}

TEST_CASE("missing inputs exit with code three") {
  fs::path dir = fresh_dir("io");
  CHECK(run({"train", "--manifest", (dir / "absent.jsonl").string(),
             "--out", (dir / "run").string()}) == 3);
  CHECK(run({"derain", "--in", (dir / "absent.ppm").string(), "--ckpt", (dir / "absent.bin").string(),
             "--out", (dir / "out.ppm").string()}) == 3);
  fs::remove_all(dir);
}

TEST_CASE("corrupt checkpoints exit with code three") {
  fs::path dir = fresh_dir("ckpt");
  CHECK(run({"synth", "--out", (dir / "d").string(), "--n", "1", "--size", "16"}) == 0);
  write_file((dir / "broken.bin").string(), {1, 2, 3, 4, 5});
  fs::path rainy;
  for (const auto& e : fs::directory_iterator(dir / "d"))
    if (e.path().filename().string().rfind("rainy", 0) == 0) rainy = e.path();
  REQUIRE(!rainy.empty());
  CHECK(run({"derain", "--in", rainy.string(), "--ckpt", (dir / "broken.bin").string(),
             "--out", (dir / "out.ppm").string()}) == 3);
  fs::remove_all(dir);
}

TEST_CASE("training on an all-light dataset exits with code four") {
  fs::path dir = fresh_dir("light");
  // density range pinned below the heavy threshold and single families only
  // is not expressible via flags, so edit the manifest instead: mark all
  // entries light by replaying k=0 records
  CHECK(run({"synth", "--out", (dir / "d").string(), "--n", "4", "--size", "16", "--seed", "3"}) == 0);
  // rewrite manifest with heavy=false on every row
  std::ifstream in((dir / "d" / "manifest.jsonl").string());
  std::string line, out_body;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    j["heavy"] = false;
    out_body += j.dump() + "\n";
  }
  write_text(dir / "d" / "manifest.jsonl", out_body);
  CHECK(run({"train", "--manifest", (dir / "d" / "manifest.jsonl").string(),
             "--out", (dir / "run").string(), "--rounds", "1"}) == 4);
  fs::remove_all(dir);
}

TEST_CASE("gradient check command passes") {
  CHECK(run({"gradcheck"}) == 0);
}

TEST_CASE("full pipeline runs and is byte deterministic") {
  fs::path a = fresh_dir("pipe_a"), b = fresh_dir("pipe_b");
  for (const fs::path& root : {a, b}) {
    CHECK(run({"synth", "--out", (root / "data").string(), "--n", "6", "--size", "16",
               "--seed", "11"}) == 0);
    CHECK(run({"train", "--manifest", (root / "data" / "manifest.jsonl").string(),
               "--out", (root / "run").string(), "--rounds", "1", "--cycles", "2",
               "--batch", "2", "--radius", "2", "--eps", "0.01", "--seed", "11"}) == 0);
    REQUIRE(fs::exists(root / "run" / "checkpoint.bin"));
    REQUIRE(fs::exists(root / "run" / "losses.jsonl"));
    fs::create_directories(root / "derained");
    for (const auto& e : fs::directory_iterator(root / "data")) {
      std::string name = e.path().filename().string();
      if (name.rfind("rainy", 0) != 0) continue;
      CHECK(run({"derain", "--in", e.path().string(),
                 "--ckpt", (root / "run" / "checkpoint.bin").string(),
                 "--out", (root / "derained" / name).string()}) == 0);
    }
    CHECK(run({"eval", "--manifest", (root / "data" / "manifest.jsonl").string(),
               "--derained", (root / "derained").string(),
               "--report", (root / "report.json").string()}) == 0);
  }
  CHECK(read_file((a / "run" / "checkpoint.bin").string()) ==
        read_file((b / "run" / "checkpoint.bin").string()));
  CHECK(read_file((a / "report.json").string()) == read_file((b / "report.json").string()));
  for (const auto& e : fs::directory_iterator(a / "derained")) {
    if (e.path().filename().string().rfind("config_echo", 0) == 0) continue;
    CHECK(read_file(e.path().string()) ==
          read_file((b / "derained" / e.path().filename()).string()));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("enrich consumes an existing clean directory") {
  fs::path dir = fresh_dir("enrich");
  fs::create_directories(dir / "clean");
  for (int i = 0; i < 3; ++i) {
    Image img(16, 16, 3, 0.25 + 0.2 * i);
    save_ppm((dir / "clean" / ("img_" + std::to_string(i) + ".ppm")).string(), img);
  }
  CHECK(run({"enrich", "--in", (dir / "clean").string(), "--out", (dir / "out").string(),
             "--seed", "4"}) == 0);
  REQUIRE(fs::exists(dir / "out" / "manifest.jsonl"));
  int rainy = 0;
  for (const auto& e : fs::directory_iterator(dir / "out"))
    if (e.path().filename().string().rfind("rainy", 0) == 0) ++rainy;
  CHECK(rainy == 3);  // one enrichment per source by default
  fs::remove_all(dir);
}
