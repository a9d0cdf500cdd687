#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dynasty/analysis.hpp"
#include "dynasty/dynamics.hpp"
#include "dynasty/inference.hpp"
#include "dynasty/optimizer.hpp"
#include "dynasty/stability.hpp"
#include "dynasty/transfer.hpp"

namespace dynasty {

using json = nlohmann::json;

// Transfer functions as {"kind": ..., parameters}:
//   {"kind":"linear","scale":1}            {"kind":"power","k":2,"scale":1}
//   {"kind":"step","levels":[[0,0.01],[0.5,1]]}   {"kind":"tanh_growth","a":0.25}
//   {"kind":"piecewise_linear","knots":[[y,T],...]}
//   {"kind":"tabulated","samples":[[y,T],...]}
json transfer_to_json(const Transfer& transfer);
Transfer transfer_from_json(const json& j);

struct ExperimentOptions {
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  std::size_t horizon = 500;
  double eps = 1e-3;
  double gap_tol = 0.1;
  std::size_t grid_points = 4096;
  std::optional<std::uint64_t> seed;
  std::size_t generations = 10;
  double w_min = 0.05;
  double w_max = 3.0;
  std::size_t curve_points = 400;
  std::optional<double> alpha;
  std::vector<double> figure_w{0.5, 1.0, 2.0};
};

struct AgentSpec {
  double w;
  double alpha;
};

struct PopulationSpec {
  // Explicit agents, or a generator when `agents` is empty.
  std::vector<AgentSpec> agents;
  std::size_t n = 0;
  std::string alpha_kind = "constant";  // constant | uniform
  double alpha_value = 0.5;
  double alpha_lo = 0.0;
  double alpha_hi = 1.0;
  std::string w_init = "egalitarian";  // egalitarian | explicit | random
  std::vector<double> w;
};

struct ExperimentConfig {
  PopulationSpec population;
  Transfer transfer = Transfer(Linear{1.0});
  ExperimentOptions options;
};

ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Initial generation; endowments are rescaled to sum to n. Random draws use
// mt19937_64 seeded from options.seed.
GenerationState initial_state(const ExperimentConfig& config);

EquilibriumOptions equilibrium_options(const ExperimentOptions& o);
TrapOptions trap_options(const ExperimentOptions& o);
OptimizerOptions optimizer_options(const ExperimentOptions& o);

// Fixed-format output: keys sorted, 17 significant digits, two-space
// indent, non-finite numbers written as null.
std::string format_double(double v);
std::string dump_json(const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

json to_json(const GenerationState& state);
json to_json(const OptimumCertificate& cert);
json to_json(const EquilibriumReport& report);
json to_json(const TrapReport& report);
json to_json(const MeritReport& report);
json to_json(const std::vector<RatRaceFlag>& flags);
json to_json(const RatRaceTheoremReport& report);
json to_json(const MeritocracyTheoremReport& report);
json to_json(const StabilityReport& report);
json to_json(const std::vector<Discontinuity>& jumps);
json to_json(const std::vector<JumpDiagnostic>& diagnostics);
json to_json(const TableDiagnostics& diagnostics);

std::vector<Discontinuity> jumps_from_json(const json& j);

std::string trajectory_csv(const Trajectory& traj, const Transfer& transfer);
std::string orbit_csv(const TrapReport& report);
std::string jacobian_csv(const Matrix& m);
std::string effort_curve_csv(const EffortCurve& curve);
std::string transfer_samples_csv(const Transfer& tabulated);

EffortTable parse_effort_table_csv(const std::string& text, double A);

}  // namespace dynasty
