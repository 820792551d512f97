#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef STN_CLI_PATH
#error "STN_CLI_PATH must be defined by the build"
#endif

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(STN_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "stn_cli_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_small_config(const fs::path& dir) {
    fs::path cfg = dir / "config.json";
    std::ofstream(cfg) << R"({
  "model": {"task": "synthetic_classification", "hidden": [4]},
  "hyperparameters": [
    {"name": "l2", "kind": "exp_positive", "lo": 1e-3, "hi": 1.0,
     "init": 0.01, "init_sigma": 0.5, "binding": "l2", "per_example": false}
  ],
  "trainer": {"max_epochs": 2, "warmup_epochs": 1, "batch_size": 16},
  "search": {"points_per_axis": 2, "n_trials": 2, "budget_epochs": 1},
  "data": {"dim": 3, "n_total": 64, "n_train": 32, "n_valid": 16, "n_test": 16},
  "seed": 7
})";
    return cfg;
}

}  // namespace

TEST_CASE("verify-oracles exits zero", "[cli]") {
    fs::path dir = fresh_dir("verify");
    CHECK(run("verify-oracles", dir / "log.txt") == 0);
    std::string out = slurp(dir / "log.txt");
    CHECK(out.find("pass") != std::string::npos);
    CHECK(out.find("fail") == std::string::npos);
}

TEST_CASE("run-stn produces artifacts and honours --out", "[cli]") {
    fs::path dir = fresh_dir("run_stn");
    fs::path cfg = write_small_config(dir);
    fs::path out = dir / "out";
    CHECK(run("run-stn " + cfg.string() + " --out " + out.string(), dir / "log.txt") == 0);
    CHECK(fs::exists(out / "schedule.csv"));
    CHECK(fs::exists(out / "metrics.jsonl"));
    CHECK(fs::exists(out / "config.json"));
    CHECK(fs::exists(out / "checkpoint.stn"));
    CHECK(slurp(out / "checkpoint.stn").substr(0, 4) == "STN1");
}

TEST_CASE("repeated run-stn with one seed is bitwise identical", "[cli]") {
    fs::path dir = fresh_dir("repro");
    fs::path cfg = write_small_config(dir);
    fs::path o1 = dir / "a", o2 = dir / "b";
    REQUIRE(run("run-stn " + cfg.string() + " --out " + o1.string() + " --seed 5",
                dir / "l1.txt") == 0);
    REQUIRE(run("run-stn " + cfg.string() + " --out " + o2.string() + " --seed 5",
                dir / "l2.txt") == 0);
    CHECK(slurp(o1 / "schedule.csv") == slurp(o2 / "schedule.csv"));

    fs::path o3 = dir / "c";
    REQUIRE(run("run-stn " + cfg.string() + " --out " + o3.string() + " --seed 6",
                dir / "l3.txt") == 0);
    CHECK(slurp(o1 / "schedule.csv") != slurp(o3 / "schedule.csv"));
}

TEST_CASE("grid and random search commands", "[cli]") {
    fs::path dir = fresh_dir("search");
    fs::path cfg = write_small_config(dir);
    fs::path g = dir / "grid", r = dir / "random";
    CHECK(run("run-grid " + cfg.string() + " --out " + g.string() + " --workers 2",
              dir / "lg.txt") == 0);
    CHECK(fs::exists(g / "search.csv"));
    CHECK(run("run-random " + cfg.string() + " --out " + r.string(), dir / "lr.txt") == 0);
    CHECK(fs::exists(r / "search.csv"));
    std::string text = slurp(g / "search.csv");
    CHECK(text.rfind("trial,l2,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + 2 grid points
}

TEST_CASE("replay and export round trip through the CLI", "[cli]") {
    fs::path dir = fresh_dir("replay");
    fs::path cfg = write_small_config(dir);
    fs::path out = dir / "out";
    REQUIRE(run("run-stn " + cfg.string() + " --out " + out.string(), dir / "l1.txt") == 0);
    fs::path rout = dir / "replay_out";
    CHECK(run("replay-schedule " + cfg.string() + " " + (out / "schedule.csv").string() +
                  " --out " + rout.string(),
              dir / "l2.txt") == 0);
    CHECK(fs::exists(rout / "replay_metrics.jsonl"));

    CHECK(run("export " + out.string(), dir / "l3.txt") == 0);
    CHECK(slurp(out / "schedule.csv") == slurp(out / "schedule.export.csv"));
}

TEST_CASE("config errors exit with status 1 and name the key", "[cli]") {
    fs::path dir = fresh_dir("bad_config");
    fs::path cfg = dir / "bad.json";
    std::ofstream(cfg) << R"({"trainer": {"batch_size": "many"}})";
    CHECK(run("run-stn " + cfg.string(), dir / "log.txt") == 1);
    CHECK(slurp(dir / "log.txt").find("trainer.batch_size") != std::string::npos);

    CHECK(run("run-stn " + (dir / "missing.json").string(), dir / "log2.txt") == 1);
}

TEST_CASE("runtime errors exit with status 2", "[cli]") {
    fs::path dir = fresh_dir("runtime_err");
    fs::path cfg = write_small_config(dir);
    CHECK(run("replay-schedule " + cfg.string() + " " + (dir / "no_schedule.csv").string(),
              dir / "log.txt") == 2);
    CHECK(run("export " + (dir / "not_a_run").string(), dir / "log2.txt") == 2);
}

TEST_CASE("usage errors exit nonzero", "[cli]") {
    fs::path dir = fresh_dir("usage");
    CHECK(run("", dir / "l1.txt") != 0);                 // missing subcommand
    CHECK(run("run-stn", dir / "l2.txt") != 0);          // missing config argument
    CHECK(run("frobnicate", dir / "l3.txt") != 0);       // unknown subcommand
    fs::path cfg = write_small_config(dir);
    CHECK(run("run-stn " + cfg.string() + " --bogus", dir / "l4.txt") != 0);
}
