#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "finde/config.hpp"
#include "finde/errors.hpp"

using namespace finde;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("FINDE_CLI_PATH");
  REQUIRE(p != nullptr);
  return p;
}

fs::path fresh_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() /
                       (std::string("finde_cli_") + tag + "_" +
                        std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI in `dir`, returns the exit code; stdout/stderr land in
// stdout.txt / stderr.txt inside dir.
int run_cli_in(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + cli_path() + "' " +
                          args + " > stdout.txt 2> stderr.txt";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

const char* kTinyConfig = R"({
  "system": "mass-spring",
  "model": {"base": "node", "arch": "mlp", "K": 1, "hidden": 16, "layers": 2},
  "finde": "cfinde",
  "integrator": "rk4",
  "train": {"iterations": 20, "batch": 32},
  "eval": {"vpt_threshold": 0.01, "shift_window": 0},
  "paths": {"data": "data", "run": "run", "report": "report"},
  "seed": 5,
  "scale": "desk"
})";

}  // namespace

TEST_CASE("an empty config document yields the documented defaults") {
  const RunConfig cfg = parse_run_config(json::object());
  CHECK(!cfg.has_system);
  CHECK(cfg.finde == TrainMode::Base);
  CHECK(cfg.integrator == StepperKind::Rk4);
  CHECK(cfg.scale == ScalePreset::Desk);
  CHECK(cfg.seed == 0);
  CHECK(cfg.model.base == BaseKind::Node);
  CHECK(cfg.model.k_learned == 0);
  CHECK(cfg.model.hidden == 200);
  CHECK(cfg.train.iterations == 2000);
  CHECK(cfg.train.batch == 200);
  CHECK(cfg.train.lr0 == 1e-3);
  CHECK(cfg.eval.vpt_threshold == 0.01);
  CHECK(cfg.eval.shift_window == 0);
  CHECK(cfg.eval.integrator == StepperKind::Dopri5);
  CHECK(cfg.paths.data == "data");
  CHECK(cfg.sweep.Ks == std::vector<long>{0, 1, 2, 3});
  CHECK(cfg.sweep.trials == 3);
  CHECK(cfg.demo.dt == 0.2);
  CHECK(cfg.demo.steps == 500);
}

TEST_CASE("a full config document round-trips every field") {
  const json j = json::parse(R"({
    "system": "fitzhugh-nagumo",
    "model": {"base": "hnn", "arch": "mlp", "K": 2,
              "analytic_invariants": [], "hidden": 64, "layers": 3},
    "finde": "dfinde",
    "integrator": "euler",
    "train": {"iterations": 123, "batch": 17, "lr0": 0.01, "checkpoint_every": 10},
    "eval": {"vpt_threshold": 0.05, "shift_window": 5, "integrator": "rk4",
             "train_series": 4},
    "paths": {"data": "D", "run": "R", "report": "P"},
    "seed": 99,
    "scale": "paper",
    "sweep": {"K": [1, 3], "trials": 5},
    "demo": {"dt": 0.1, "steps": 7}
  })");
  const RunConfig cfg = parse_run_config(j);
  CHECK(cfg.system == SystemKind::FitzHughNagumo);
  CHECK(cfg.model.base == BaseKind::Hnn);
  CHECK(cfg.model.k_learned == 2);
  CHECK(cfg.model.hidden == 64);
  CHECK(cfg.model.layers == 3);
  CHECK(cfg.finde == TrainMode::Dfinde);
  CHECK(cfg.integrator == StepperKind::Euler);
  CHECK(cfg.train.iterations == 123);
  CHECK(cfg.train.batch == 17);
  CHECK(cfg.train.lr0 == 0.01);
  CHECK(cfg.train.checkpoint_every == 10);
  CHECK(cfg.eval.vpt_threshold == 0.05);
  CHECK(cfg.eval.shift_window == 5);
  CHECK(cfg.eval.integrator == StepperKind::Rk4);
  CHECK(cfg.eval.train_series == 4);
  CHECK(cfg.paths.data == "D");
  CHECK(cfg.seed == 99);
  CHECK(cfg.scale == ScalePreset::Full);
  CHECK(cfg.sweep.Ks == std::vector<long>{1, 3});
  CHECK(cfg.sweep.trials == 5);
  CHECK(cfg.demo.dt == 0.1);
  CHECK(cfg.demo.steps == 7);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"sytem": "kdv"})")),
                       doctest::Contains("sytem"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"model": {"width": 3}})")),
                       doctest::Contains("width"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"train": {"iters": 3}})")),
                       doctest::Contains("iters"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"eval": {"tol": 0.1}})")),
                       doctest::Contains("tol"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"paths": {"logs": "x"}})")),
                       doctest::Contains("logs"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"sweep": {"ks": []}})")),
                       doctest::Contains("ks"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(json::parse(R"({"demo": {"n": 1}})")),
                       doctest::Contains("n"), ConfigError);
}

TEST_CASE("bad config values fail with named keys") {
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"system": "pendulum"})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"model": {"K": -1}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"model": {"base": "gnn"}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"finde": "projected"})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"train": {"iterations": 0}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"train": {"lr0": -0.1}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"eval": {"vpt_threshold": 0}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"eval": {"shift_window": -2}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"scale": "huge"})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"sweep": {"K": []}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"sweep": {"K": [-1]}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"sweep": {"trials": 0}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"demo": {"dt": 0}})")),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_run_config(json::parse(R"({"model": {"base": "hnn", "arch": "conv"}})")),
      ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::parse(R"({"seed": "nine"})")), ConfigError);
}

TEST_CASE("analytic invariant names resolve against the series-free catalog") {
  CHECK(resolve_analytic(SystemKind::MassSpring, {"E"}).size() == 1);
  const auto tb = resolve_analytic(SystemKind::TwoBody, {"p_x", "p_y", "L", "H"});
  REQUIRE(tb.size() == 4);
  CHECK(tb[0].name == "p_x");
  CHECK(tb[3].name == "H");
  CHECK(resolve_analytic(SystemKind::DoublePendulum, {"H"}).size() == 1);
  CHECK(resolve_analytic(SystemKind::Kdv, {"mass", "H"}).size() == 2);
  CHECK(resolve_analytic(SystemKind::FitzHughNagumo, {"I", "E"}).size() == 2);

  // rod-length constraints vary per series and cannot form a shared bank row
  CHECK_THROWS_WITH_AS(resolve_analytic(SystemKind::DoublePendulum, {"c1"}),
                       doctest::Contains("series-independent"), ConfigError);
  CHECK_THROWS_AS(resolve_analytic(SystemKind::MassSpring, {"energy"}), ConfigError);

  // the config document validates names eagerly
  CHECK_THROWS_AS(parse_run_config(json::parse(
                      R"({"system": "mass-spring",
                          "model": {"analytic_invariants": ["H"]}})")),
                  ConfigError);
}

TEST_CASE("derived train and eval configs mirror the document") {
  json j = json::parse(kTinyConfig);
  RunConfig cfg = parse_run_config(j);
  const TrainConfig tc = train_config_for(cfg);
  CHECK(tc.iterations == 20);
  CHECK(tc.batch == 32);
  CHECK(tc.seed == 5);
  CHECK(tc.integrator == StepperKind::Rk4);

  EvalConfig ec = eval_config_for(cfg);
  CHECK(ec.mode == RolloutMode::Ode);
  CHECK(ec.integrator == StepperKind::Dopri5);  // ode rollouts default adaptive

  j["finde"] = "dfinde";
  ec = eval_config_for(parse_run_config(j));
  CHECK(ec.mode == RolloutMode::Dfinde);
  CHECK(ec.integrator == StepperKind::Rk4);  // ψ̂ follows the training stepper
}

TEST_CASE("config loading surfaces file problems as config errors") {
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
  const fs::path dir = fresh_dir("badjson");
  write_file(dir / "c.json", "{not json");
  CHECK_THROWS_AS(load_run_config((dir / "c.json").string()), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("CLI exit codes: usage errors are 2, help is 0") {
  const fs::path dir = fresh_dir("codes");
  CHECK(run_cli_in(dir, "") == 2);
  CHECK(run_cli_in(dir, "--help") == 0);
  CHECK(run_cli_in(dir, "frobnicate") == 2);
  CHECK(run_cli_in(dir, "train --bogus-flag") == 2);
  // missing system section
  write_file(dir / "empty.json", "{}");
  CHECK(run_cli_in(dir, "generate --config empty.json") == 2);
  // unknown key
  write_file(dir / "bad.json", R"({"sytem": "kdv"})");
  CHECK(run_cli_in(dir, "generate --config bad.json") == 2);
  fs::remove_all(dir);
}

TEST_CASE("CLI runtime failures exit with 3") {
  const fs::path dir = fresh_dir("runtime");
  write_file(dir / "c.json", kTinyConfig);
  // no dataset on disk yet
  CHECK(run_cli_in(dir, "train --config c.json") == 3);
  CHECK(run_cli_in(dir, "eval --config c.json") == 3);
  fs::remove_all(dir);
}

TEST_CASE("demo command writes the documented CSV") {
  const fs::path dir = fresh_dir("demo");
  CHECK(run_cli_in(dir, "demo-mass-spring --out demo.csv") == 0);
  std::ifstream csv(dir / "demo.csv");
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,q,v,E,q_exact,v_exact");
  long rows = 0;
  std::string line;
  while (std::getline(csv, line) && !line.empty()) ++rows;
  CHECK(rows == 501);
  CHECK(slurp(dir / "stdout.txt").find("max_energy_error=") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("regeneration with the same seed is byte-identical") {
  const fs::path dir = fresh_dir("regen");
  write_file(dir / "c.json", kTinyConfig);
  REQUIRE(run_cli_in(dir, "generate --config c.json") == 0);
  const std::string first = slurp(dir / "data" / "train" / "data.f64");
  REQUIRE(!first.empty());
  fs::remove_all(dir / "data");
  REQUIRE(run_cli_in(dir, "generate --config c.json") == 0);
  CHECK(slurp(dir / "data" / "train" / "data.f64") == first);
  // a different seed draws different series
  REQUIRE(run_cli_in(dir, "generate --config c.json --seed 77 --out data2") == 0);
  CHECK(slurp(dir / "data2" / "train" / "data.f64") != first);
  // train and test splits differ under the same seed
  CHECK(slurp(dir / "data" / "test" / "data.f64") != first);
  fs::remove_all(dir);
}

TEST_CASE("generate, train, eval, predict chain end to end") {
  const fs::path dir = fresh_dir("chain");
  write_file(dir / "c.json", kTinyConfig);
  REQUIRE(run_cli_in(dir, "generate --config c.json") == 0);
  CHECK(slurp(dir / "stdout.txt").find("audit E:") != std::string::npos);

  REQUIRE(run_cli_in(dir, "train --config c.json") == 0);
  CHECK(fs::exists(dir / "run" / "model.ckpt"));
  CHECK(fs::exists(dir / "run" / "losses.csv"));
  CHECK(slurp(dir / "stdout.txt").find("final_loss=") != std::string::npos);

  REQUIRE(run_cli_in(dir, "eval --config c.json") == 0);
  const json rep = json::parse(std::ifstream(dir / "report" / "report.json"));
  CHECK(rep.at("n_series").get<long>() == 10);
  CHECK(rep.at("system").get<std::string>() == "mass-spring");
  CHECK(rep.at("finde").get<std::string>() == "cfinde");
  CHECK(fs::exists(dir / "report" / "report.csv"));
  CHECK(fs::exists(dir / "report" / "learned_v.csv"));  // K=1 bank exported

  REQUIRE(run_cli_in(dir, "predict --config c.json") == 0);
  long preds = 0;
  for (const auto& e : fs::directory_iterator(dir / "report" / "predictions"))
    if (e.path().extension() == ".csv") ++preds;
  CHECK(preds == 10);
  fs::remove_all(dir);
}

TEST_CASE("dfinde eval reports the worst bank drift over rollouts") {
  const fs::path dir = fresh_dir("dfinde_eval");
  const std::string cfg = R"({
    "system": "mass-spring",
    "model": {"K": 0, "hidden": 16, "analytic_invariants": ["E"]},
    "finde": "dfinde",
    "train": {"iterations": 20, "batch": 32},
    "seed": 5
  })";
  write_file(dir / "c.json", cfg);
  REQUIRE(run_cli_in(dir, "generate --config c.json") == 0);
  REQUIRE(run_cli_in(dir, "train --config c.json") == 0);
  REQUIRE(run_cli_in(dir, "eval --config c.json") == 0);
  const std::string out = slurp(dir / "stdout.txt");
  const auto pos = out.find("max_bank_drift=");
  REQUIRE(pos != std::string::npos);
  const double drift = std::stod(out.substr(pos + 15));
  CHECK(drift <= 1e-8);  // implicit projection transfers E across every step
  CHECK(fs::exists(dir / "report" / "drift_E.csv"));
  fs::remove_all(dir);
}

TEST_CASE("sweep command writes the K table") {
  const fs::path dir = fresh_dir("sweep");
  const std::string cfg = R"({
    "system": "mass-spring",
    "model": {"hidden": 12},
    "finde": "cfinde",
    "train": {"iterations": 10, "batch": 16},
    "eval": {"integrator": "rk4", "train_series": 2},
    "sweep": {"K": [0, 1], "trials": 1},
    "seed": 4
  })";
  write_file(dir / "c.json", cfg);
  REQUIRE(run_cli_in(dir, "generate --config c.json") == 0);
  REQUIRE(run_cli_in(dir, "sweep --config c.json") == 0);
  std::ifstream csv(dir / "report" / "sweep.csv");
  REQUIRE(csv.good());
  std::string line;
  std::getline(csv, line);
  CHECK(line ==
        "K,failures,median_one_step_train,median_vpt_train,median_one_step_test,"
        "median_vpt_test");
  long rows = 0;
  while (std::getline(csv, line) && !line.empty()) ++rows;
  CHECK(rows == 2);
  CHECK(slurp(dir / "stdout.txt").find("best_K_by_test_vpt=") != std::string::npos);
  fs::remove_all(dir);
}
