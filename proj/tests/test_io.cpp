#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynasty/cli.hpp"
#include "dynasty/errors.hpp"
#include "dynasty/io.hpp"
#include "specs.hpp"

using namespace dynasty;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dynasty_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig config_from(const std::string& text) { return parse_config(json::parse(text)); }

const char* kStep = R"({"population": {"n": 4}, "transfer": {"kind": "step", "levels": [[0, 0.01], [0.5, 1]]}})";
const char* kSquare = R"({"population": {"n": 4}, "transfer": {"kind": "power", "k": 2}, "options": {"seed": 7}})";
const char* kLinear = R"({"population": {"n": 4}, "transfer": {"kind": "linear"}})";

int run(const std::string& cmd, const ExperimentConfig& cfg, const fs::path& dir, std::string* stdout_text = nullptr) {
  CliFlags flags;
  flags.out_dir = dir;
  std::ostringstream out, err;
  int code = run_subcommand(cmd, cfg, flags, out, err);
  if (stdout_text) *stdout_text = out.str();
  return code;
}

}  // namespace

TEST_CASE("config parsing") {
  ExperimentConfig c = config_from(kStep);
  CHECK(c.population.n == 4);
  CHECK(c.transfer.kind() == "step");
  CHECK(c.options.eps == 1e-3);
  CHECK(c.options.horizon == 500);
  CHECK(c.options.gap_tol == 0.1);
  GenerationState s = initial_state(c);
  CHECK(s.size() == 4);
  for (double w : s.endowments()) CHECK(w == 1.0);

  ExperimentConfig agents = config_from(
      R"({"population": {"agents": [{"w": 3, "alpha": 0.3}, {"w": 1, "alpha": 0.7}]}, "transfer": {"kind": "linear"}})");
  GenerationState a = initial_state(agents);
  CHECK(a.endowments() == std::vector<double>{1.5, 0.5});
  CHECK(a.alphas() == std::vector<double>{0.3, 0.7});
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(config_from(R"({"population": {"n": 0}, "transfer": {"kind": "linear"}})"), ConfigError);
  CHECK_THROWS_AS(config_from(R"({"population": {"n": 2}})"), ConfigError);
  CHECK_THROWS_AS(config_from(R"({"population": {"n": 2}, "transfer": {"kind": "cubic"}})"), ConfigError);
  CHECK_THROWS_AS(config_from(R"({"population": {"n": 2}, "transfer": {"kind": "power"}})"), ConfigError);
  CHECK_THROWS_AS(config_from(R"({"population": {"n": 2}, "transfer": {"kind": "linear"}, "options": {"gap_tol": 2}})"),
                  ConfigError);
  ExperimentConfig bad_alpha = config_from(
      R"({"population": {"agents": [{"w": 1, "alpha": 1.2}]}, "transfer": {"kind": "linear"}})");
  CHECK_THROWS_AS(initial_state(bad_alpha), ConfigError);
  ExperimentConfig unseeded = config_from(
      R"({"population": {"n": 5, "alpha_distribution": {"kind": "uniform", "lo": 0.2, "hi": 0.8}}, "transfer": {"kind": "linear"}})");
  CHECK_THROWS_AS(initial_state(unseeded), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("seeded generators replay exactly") {
  const char* text =
      R"({"population": {"n": 20, "alpha_distribution": {"kind": "uniform", "lo": 0.2, "hi": 0.8}, "w_init": "random"},
          "transfer": {"kind": "linear"}, "options": {"seed": 99}})";
  GenerationState a = initial_state(config_from(text));
  GenerationState b = initial_state(config_from(text));
  CHECK(a.endowments() == b.endowments());
  CHECK(a.alphas() == b.alphas());
  for (double al : a.alphas()) CHECK((al >= 0.2 && al < 0.8));
  ExperimentConfig other = config_from(text);
  other.options.seed = 100;
  CHECK(initial_state(other).alphas() != a.alphas());
}

TEST_CASE("fixed-format JSON") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(std::nan("")) == "null");
  json j = {{"b", 1.5}, {"a", json::array({1, 2})}, {"c", std::numeric_limits<double>::infinity()}};
  std::string text = dump_json(j);
  CHECK(text.find("\"a\"") < text.find("\"b\""));
  CHECK(text.find("\"b\"") < text.find("\"c\""));
  CHECK(text.find("null") != std::string::npos);
  CHECK(json::parse(text)["b"] == 1.5);
}

TEST_CASE("CSV formats") {
  Trajectory tr = simulate(GenerationState::egalitarian(std::vector<double>(2, 0.5)), Transfer(Linear{1.0}), 1);
  std::string csv = trajectory_csv(tr, Transfer(Linear{1.0}));
  CHECK(csv.rfind("generation,agent_id,alpha,w,x,investment,T,r\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

  EffortCurve c = effort_curve(1.0, Transfer(Linear{1.0}), 0.5, 1.0, 3);
  CHECK(effort_curve_csv(c).rfind("w,x\n", 0) == 0);

  EffortTable t = parse_effort_table_csv("w,g\n0.5,0.5\n1,0.5\n", 1.0);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1].w == 1.0);
  CHECK_THROWS(parse_effort_table_csv("w,x\n0.5,0.5\n", 1.0));

  std::vector<Discontinuity> jumps{{0.5, 0.0, 0.99}};
  auto back = jumps_from_json(json::parse(dump_json(to_json(jumps))));
  REQUIRE(back.size() == 1);
  CHECK(back[0].x_plus == 0.99);
}

TEST_CASE("trap subcommand on the step example") {
  fs::path dir = scratch("trap");
  std::string text;
  CHECK(run("trap", config_from(kStep), dir, &text) == kExitOk);
  json j = json::parse(slurp(dir / "trap.json"))["trap"];
  CHECK(j["trapped"] == true);
  CHECK(j["final_ratio"].get<double>() == doctest::Approx(0.01).epsilon(0.1));
  std::string orbit = slurp(dir / "trap_orbit.csv");
  CHECK(orbit.rfind("generation,w_probe,ratio\n", 0) == 0);
}

TEST_CASE("equilibrium subcommand on the linear transfer") {
  fs::path dir = scratch("equilibrium");
  CHECK(run("equilibrium", config_from(kLinear), dir) == kExitOk);
  json j = json::parse(slurp(dir / "equilibrium.json"))["equilibrium"];
  CHECK(j["converged"] == true);
  CHECK(j["iterations"] == 1);
  CHECK(j["residual"].get<double>() == 0.0);
}

TEST_CASE("verify subcommand and determinism") {
  fs::path a = scratch("verify_a"), b = scratch("verify_b");
  CHECK(run("verify", config_from(kSquare), a) == kExitOk);
  CHECK(run("verify", config_from(kSquare), b) == kExitOk);
  CHECK(slurp(a / "verify.json") == slurp(b / "verify.json"));
  json j = json::parse(slurp(a / "verify.json"));
  CHECK(j["consistent"] == true);
}

TEST_CASE("every subcommand writes its artifacts") {
  ExperimentConfig cfg = config_from(kStep);
  cfg.options.curve_points = 120;
  struct Case {
    const char* cmd;
    std::vector<const char*> files;
  };
  std::vector<Case> cases{{"simulate", {"trajectory.csv"}},
                          {"equilibrium", {"equilibrium.json"}},
                          {"trap", {"trap.json", "trap_orbit.csv"}},
                          {"merit", {"merit.json"}},
                          {"rat-race", {"rat_race.json"}},
                          {"stability", {"stability.json", "jacobian.csv"}},
                          {"effort-curve", {"effort_curve.csv", "effort_curve_jumps.json"}},
                          {"infer-t", {"inferred_T.csv", "inferred_T_diagnostics.json"}},
                          {"verify", {"verify.json"}},
                          {"figure-data", {"fig1_level_sets.csv", "fig2_scatter.csv"}}};
  for (const Case& c : cases) {
    fs::path dir = scratch(std::string("all_") + c.cmd);
    CAPTURE(c.cmd);
    CHECK(run(c.cmd, cfg, dir) == kExitOk);
    for (const char* f : c.files) CHECK(fs::exists(dir / f));
  }
  CHECK(run("no-such-command", cfg, scratch("unknown")) == kExitConfig);
}

TEST_CASE("non-converging equilibrium is a numerical failure") {
  ExperimentConfig cfg = config_from(
      R"({"population": {"agents": [{"w": 1.2, "alpha": 0.5}, {"w": 0.8, "alpha": 0.5}]}, "transfer": {"kind": "power", "k": 2}})");
  fs::path dir = scratch("numerical");
  CHECK(run("trap", cfg, dir) == kExitNumerical);
  CHECK(fs::exists(dir / "trap.json"));
}

TEST_CASE("run_cli flag handling") {
  fs::path dir = scratch("cli");
  fs::path cfg = dir / "c.json";
  write_text(cfg, kStep);
  std::string out = (dir / "out").string();
  std::string cfg_s = cfg.string();
  std::vector<std::string> args{"dynasty", "trap", "--config", cfg_s, "--out", out, "--eps", "0.002", "--horizon", "50"};
  std::vector<char*> argv;
  for (auto& s : args) argv.push_back(s.data());
  CHECK(run_cli(static_cast<int>(argv.size()), argv.data()) == kExitOk);
  json j = json::parse(slurp(dir / "out" / "trap.json"))["trap"];
  CHECK(j["eps"].get<double>() == 0.002);

  std::vector<std::string> bad{"dynasty", "trap", "--config", (dir / "missing.json").string()};
  std::vector<char*> bargv;
  for (auto& s : bad) bargv.push_back(s.data());
  CHECK(run_cli(static_cast<int>(bargv.size()), bargv.data()) == kExitConfig);
}
