#include "dynasty/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dynasty/errors.hpp"

namespace dynasty {

namespace {

namespace fs = std::filesystem;

double resolve_alpha(const ExperimentConfig& cfg, const CliFlags& flags, const GenerationState& state) {
  if (flags.alpha) return *flags.alpha;
  if (cfg.options.alpha) return *cfg.options.alpha;
  return state.agents().front().alpha();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json header(const std::string& command, const ExperimentConfig& cfg) {
  json h{{"command", command}, {"transfer", transfer_to_json(cfg.transfer)}};
  h["seed"] = cfg.options.seed ? json(*cfg.options.seed) : json(nullptr);
  return h;
}

int cmd_simulate(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out) {
  GenerationState state = initial_state(cfg);
  Trajectory traj = simulate(state, cfg.transfer, cfg.options.generations, optimizer_options(cfg.options));
  write_text(flags.out_dir / "trajectory.csv", trajectory_csv(traj, cfg.transfer));
  out << "simulate: " << cfg.options.generations << " generations, " << state.size() << " agents\n";
  return kExitOk;
}

int cmd_equilibrium(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out) {
  EquilibriumReport eq = find_equilibrium(initial_state(cfg), cfg.transfer, equilibrium_options(cfg.options));
  json j = header("equilibrium", cfg);
  j["equilibrium"] = to_json(eq);
  write_text(flags.out_dir / "equilibrium.json", dump_json(j));
  out << "equilibrium: converged=" << (eq.converged ? "true" : "false") << " iterations=" << eq.iterations
      << " residual=" << format_double(eq.residual) << "\n";
  return kExitOk;
}

// Shared precondition for the analyses that need a fixed point.
std::optional<EquilibriumReport> converged_equilibrium(const std::string& command, const ExperimentConfig& cfg,
                                                       const CliFlags& flags, std::ostream& err) {
  EquilibriumReport eq = find_equilibrium(initial_state(cfg), cfg.transfer, equilibrium_options(cfg.options));
  if (eq.converged) return eq;
  json j = header(command, cfg);
  j["equilibrium"] = to_json(eq);
  j["error"] = "equilibrium did not converge";
  write_text(flags.out_dir / (command + ".json"), dump_json(j));
  err << command << ": equilibrium did not converge (iterations=" << eq.iterations
      << ", dominance=" << format_double(eq.dominance) << ")\n";
  return std::nullopt;
}

int cmd_trap(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out, std::ostream& err) {
  auto eq = converged_equilibrium("trap", cfg, flags, err);
  if (!eq) return kExitNumerical;
  double alpha = resolve_alpha(cfg, flags, eq->state);
  TrapOptions opts = trap_options(cfg.options);
  TrapReport rep = flags.finite_n ? detect_wealth_trap_finite(*eq, cfg.transfer, alpha, opts)
                                  : detect_wealth_trap(*eq, cfg.transfer, alpha, opts);
  json j = header("trap", cfg);
  j["trap"] = to_json(rep);
  j["gamma"] = eq->gamma;
  write_text(flags.out_dir / "trap.json", dump_json(j));
  write_text(flags.out_dir / "trap_orbit.csv", orbit_csv(rep));
  out << "trap: trapped=" << (rep.trapped ? "true" : "false") << " final_ratio=" << format_double(rep.final_ratio)
      << "\n";
  return kExitOk;
}

int cmd_merit(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out) {
  EquilibriumReport eq = find_equilibrium(initial_state(cfg), cfg.transfer, equilibrium_options(cfg.options));
  MeritReport rep = check_meritocracy(eq.state);
  json j = header("merit", cfg);
  j["equilibrium_converged"] = eq.converged;
  j["merit"] = to_json(rep);
  write_text(flags.out_dir / "merit.json", dump_json(j));
  out << "merit: is_meritocracy=" << (rep.is_meritocracy ? "true" : "false") << "\n";
  return kExitOk;
}

int cmd_rat_race(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out) {
  EquilibriumReport eq = find_equilibrium(initial_state(cfg), cfg.transfer, equilibrium_options(cfg.options));
  auto flagged = rat_race_flags(eq.state, cfg.transfer, optimizer_options(cfg.options));
  json j = header("rat-race", cfg);
  j["equilibrium_converged"] = eq.converged;
  j["flags"] = to_json(flagged);
  write_text(flags.out_dir / "rat_race.json", dump_json(j));
  out << "rat-race: " << flagged.size() << " flagged agents\n";
  return kExitOk;
}

int cmd_stability(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out, std::ostream& err) {
  auto eq = converged_equilibrium("stability", cfg, flags, err);
  if (!eq) return kExitNumerical;
  StabilityOptions opts;
  opts.optimizer = optimizer_options(cfg.options);
  StabilityReport rep = linear_stability(*eq, cfg.transfer, opts);
  json j = header("stability", cfg);
  j["stability"] = to_json(rep);
  write_text(flags.out_dir / "stability.json", dump_json(j));
  write_text(flags.out_dir / "jacobian.csv", jacobian_csv(rep.jacobian));
  out << "stability: stable=" << (rep.stable ? "true" : "false")
      << " neutral_error=" << format_double(rep.neutral_eigenvalue_error) << "\n";
  return kExitOk;
}

EffortCurve config_curve(const ExperimentConfig& cfg, double A) {
  CurveOptions opts;
  opts.optimizer = optimizer_options(cfg.options);
  return effort_curve(A, cfg.transfer, cfg.options.w_min, cfg.options.w_max, cfg.options.curve_points, opts);
}

int cmd_effort_curve(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out) {
  double alpha = resolve_alpha(cfg, flags, initial_state(cfg));
  EffortCurve curve = config_curve(cfg, alpha_to_A(alpha));
  write_text(flags.out_dir / "effort_curve.csv", effort_curve_csv(curve));
  json j = to_json(curve.discontinuities);
  j["alpha"] = alpha;
  write_text(flags.out_dir / "effort_curve_jumps.json", dump_json(j));
  out << "effort-curve: " << curve.w_grid.size() << " points, " << curve.discontinuities.size()
      << " discontinuities\n";
  return kExitOk;
}

int cmd_infer(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out) {
  double alpha = resolve_alpha(cfg, flags, initial_state(cfg));
  double A = alpha_to_A(alpha);
  EffortTable table;
  if (flags.table) {
    table = parse_effort_table_csv(read_file(*flags.table), A);
    if (flags.jumps) table.declared_jumps = jumps_from_json(json::parse(read_file(*flags.jumps)));
  } else {
    table = table_from_curve(config_curve(cfg, A), A);
  }
  TableDiagnostics diag = validate_effort_table(table);
  json dj = to_json(diag);
  write_text(flags.out_dir / "inferred_T_diagnostics.json", dump_json(dj));
  if (!diag.valid) throw ConfigError("effort table violates non-decreasing investment or range constraints");

  Knot anchor{0.0, flags.anchor_t.value_or(1.0)};
  if (flags.anchor_y) {
    anchor.y = *flags.anchor_y;
  } else {
    const EffortRow& mid = table.rows[table.rows.size() / 2];
    anchor.y = mid.w * mid.g;
  }
  InferredTransfer inferred = infer_transfer(table, anchor);
  write_text(flags.out_dir / "inferred_T.csv", transfer_samples_csv(inferred.transfer));
  out << "infer-t: " << std::get<Tabulated>(inferred.transfer.form()).samples.size() << " samples\n";
  return kExitOk;
}

int cmd_verify(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out, std::ostream& err) {
  auto eq = converged_equilibrium("verify", cfg, flags, err);
  if (!eq) return kExitNumerical;
  TrapOptions opts = trap_options(cfg.options);
  RatRaceTheoremReport rat = verify_rat_race_theorem(*eq, cfg.transfer, opts);
  MeritocracyTheoremReport merit = verify_meritocracy_theorem(*eq, cfg.transfer, opts);
  json j = header("verify", cfg);
  j["equilibrium"] = to_json(*eq);
  j["rat_race_theorem"] = to_json(rat);
  j["meritocracy_theorem"] = to_json(merit);
  j["consistent"] = rat.consistent && merit.consistent;
  write_text(flags.out_dir / "verify.json", dump_json(j));
  out << "verify: rat_race_consistent=" << (rat.consistent ? "true" : "false")
      << " meritocracy_consistent=" << (merit.consistent ? "true" : "false") << "\n";
  return rat.consistent && merit.consistent ? kExitOk : kExitCounterexample;
}

int cmd_figure_data(const ExperimentConfig& cfg, const CliFlags& flags, std::ostream& out) {
  GenerationState state = initial_state(cfg);
  double alpha = resolve_alpha(cfg, flags, state);
  double A = alpha_to_A(alpha);
  OptimizerOptions opt = optimizer_options(cfg.options);

  // Level-set picture: T^A(x w) against C2 / (w (1 - x)) at the optimal C2.
  std::string fig1 = "w,x,TA,level_curve,x_star\n";
  for (double w : cfg.options.figure_w) {
    if (!(w > 0.0)) throw ConfigError("figure_w entries must be > 0");
    OptimumCertificate cert = optimal_effort(w, A, cfg.transfer, opt);
    constexpr int samples = 400;
    for (int i = 0; i < samples; ++i) {
      double x = (1.0 - 1e-3) * i / (samples - 1);
      double ta = std::pow(cfg.transfer(x * w), A);
      double level = cert.c2 / (w * (1.0 - x));
      fig1 += format_double(w) + "," + format_double(x) + "," + format_double(ta) + "," + format_double(level) + "," +
              format_double(cert.x_star) + "\n";
    }
  }
  write_text(flags.out_dir / "fig1_level_sets.csv", fig1);

  EquilibriumReport eq = find_equilibrium(state, cfg.transfer, equilibrium_options(cfg.options));
  std::string fig2 = "agent_id,alpha,w,x\n";
  for (std::size_t i = 0; i < eq.state.size(); ++i) {
    const Agent& a = eq.state.agents()[i];
    fig2 += std::to_string(i) + "," + format_double(a.alpha()) + "," + format_double(a.w()) + "," +
            format_double(eq.efforts[i]) + "\n";
  }
  write_text(flags.out_dir / "fig2_scatter.csv", fig2);
  out << "figure-data: equilibrium converged=" << (eq.converged ? "true" : "false") << "\n";
  return kExitOk;
}

}  // namespace

int run_subcommand(const std::string& name, const ExperimentConfig& config, const CliFlags& flags,
                   std::ostream& out, std::ostream& err) {
  try {
    if (name == "simulate") return cmd_simulate(config, flags, out);
    if (name == "equilibrium") return cmd_equilibrium(config, flags, out);
    if (name == "trap") return cmd_trap(config, flags, out, err);
    if (name == "merit") return cmd_merit(config, flags, out);
    if (name == "rat-race") return cmd_rat_race(config, flags, out);
    if (name == "stability") return cmd_stability(config, flags, out, err);
    if (name == "effort-curve") return cmd_effort_curve(config, flags, out);
    if (name == "infer-t") return cmd_infer(config, flags, out);
    if (name == "verify") return cmd_verify(config, flags, out, err);
    if (name == "figure-data") return cmd_figure_data(config, flags, out);
    err << "unknown subcommand '" << name << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << name << ": numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Intergenerational wealth dynamics toolkit"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  CliFlags flags;
  std::string out_dir = ".";
  std::optional<std::size_t> generations, horizon;
  std::optional<double> eps;
  std::optional<std::uint64_t> seed;
  std::string table, jumps;

  app.add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--generations", generations, "Generations to simulate");
  app.add_option("--alpha", flags.alpha, "Preference alpha for single-agent analyses");
  app.add_option("--eps", eps, "Initial probe endowment");
  app.add_option("--horizon", horizon, "Probe horizon in generations");
  app.add_option("--seed", seed, "Seed for random population generators");

  const char* names[] = {"simulate", "equilibrium", "trap",    "merit",  "rat-race",
                         "stability", "effort-curve", "infer-t", "verify", "figure-data"};
  for (const char* n : names) app.add_subcommand(n);
  app.get_subcommand("trap")->add_flag("--finite", flags.finite_n, "Insert agent n+1 instead of a mean-field probe");
  CLI::App* infer = app.get_subcommand("infer-t");
  infer->add_option("--table", table, "Effort table CSV with header w,g");
  infer->add_option("--jumps", jumps, "Discontinuity sidecar JSON");
  infer->add_option("--anchor-y", flags.anchor_y, "Investment at which T is pinned");
  infer->add_option("--anchor-t", flags.anchor_t, "Value of T at the anchor (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (generations) cfg.options.generations = *generations;
  if (horizon) cfg.options.horizon = *horizon;
  if (eps) cfg.options.eps = *eps;
  if (seed) cfg.options.seed = *seed;
  flags.out_dir = out_dir;
  if (!table.empty()) flags.table = table;
  if (!jumps.empty()) flags.jumps = jumps;

  const std::string name = app.get_subcommands().front()->get_name();
  return run_subcommand(name, cfg, flags, std::cout, std::cerr);
}

}  // namespace dynasty
