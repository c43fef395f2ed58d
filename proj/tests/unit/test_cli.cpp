#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

  fs::path const dir = fs::temp_directory_path() / "semiheal_cli_test";

  int run(std::string const& args) {
    auto const cmd = std::string(SEMIHEAL_CLI_PATH) + " --out-dir " + dir.string() + " "
                     + args + " > " + (dir / "stdout.txt").string() + " 2>&1";
    int const status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(char const* name) {
    return (dir / name).string();
  }

}  // namespace

TEST_CASE("pipeline subcommands write their outputs") {
  fs::remove_all(dir);
  fs::create_directories(dir);

  CHECK(run("--seed 3 gen --n 4 --count 12") == 0);
  CHECK(fs::exists(dir / "tables.jsonl"));
  CHECK(run("--seed 3 corrupt -i " + path("tables.jsonl") + " --p 0.2") == 0);
  CHECK(fs::exists(dir / "dataset.jsonl"));
  CHECK(run("trust -i " + path("dataset.jsonl")) == 0);
  CHECK(fs::exists(dir / "trust.jsonl"));
  CHECK(run("--seed 3 train -d " + path("dataset.jsonl") + " --trees 5") == 0);
  CHECK(fs::exists(dir / "model.json"));
  CHECK(run("heal -d " + path("dataset.jsonl") + " --mode hybrid --model "
            + path("model.json")) == 0);
  CHECK(fs::exists(dir / "heal_reports.jsonl"));
  CHECK(run("heal -d " + path("dataset.jsonl") + " --mode det") == 0);

  CHECK(run("--seed 5 experiment --n-values 3 --tables 4 --mode det") == 0);
  CHECK(fs::exists(dir / "run.json"));
  CHECK(fs::exists(dir / "cache.jsonl"));
  CHECK(run("stats --n 10 --p 0.15") == 0);
  CHECK(run("stats --tables " + path("tables.jsonl")) == 0);
  CHECK(run("stats --cache " + path("cache.jsonl")) == 0);
  CHECK(run("export --cache " + path("cache.jsonl")) == 0);
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "pass_ablation.csv"));

  fs::remove_all(dir);
}

TEST_CASE("invalid input exits with 1") {
  fs::remove_all(dir);
  fs::create_directories(dir);

  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("gen") == 1);
  CHECK(run("gen --n 0") == 1);
  CHECK(run("gen --n 4 --format xml") == 1);
  CHECK(run("corrupt -i " + path("missing.jsonl")) == 1);
  CHECK(run("experiment --p 1.5") == 1);
  CHECK(run("heal -d x --mode nope") == 1);
  CHECK(run("heal -d x --mode hybrid") == 1);
  CHECK(run("--help") == 0);

  {
    std::ofstream(dir / "bad.json") << R"({"n_values":[3],"bogus":1})";
  }
  CHECK(run("--config " + path("bad.json") + " experiment") == 1);

  fs::remove_all(dir);
}
