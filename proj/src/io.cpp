#include "dynasty/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "dynasty/errors.hpp"

namespace dynasty {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json knots_to_json(const std::vector<Knot>& knots) {
  json arr = json::array();
  for (const Knot& k : knots) arr.push_back(json::array({k.y, k.t}));
  return arr;
}

std::vector<Knot> knots_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw ConfigError(std::string("transfer field '") + field + "' must be an array of [y, T]");
  std::vector<Knot> out;
  for (const json& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ConfigError(std::string("transfer field '") + field + "' entries must be [y, T] pairs");
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::size_t count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

void emit(std::string& out, const json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(depth + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case json::value_t::array:
      if (j.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += inner;
        emit(out, j[i], depth + 1);
        out += i + 1 < j.size() ? ",\n" : "\n";
      }
      out += pad + "]";
      break;
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out += inner + json(it.key()).dump() + ": ";
        emit(out, it.value(), depth + 1);
        out += i + 1 < j.size() ? ",\n" : "\n";
      }
      out += pad + "}";
      break;
    }
    default:
      out += j.dump();
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Uniform draw in [0, 1) from the top 53 bits; identical on every platform.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

json transfer_to_json(const Transfer& transfer) {
  return std::visit(overloaded{
                        [](const Linear& f) { return json{{"kind", "linear"}, {"scale", f.scale}}; },
                        [](const Power& f) { return json{{"kind", "power"}, {"k", f.k}, {"scale", f.scale}}; },
                        [](const Step& f) { return json{{"kind", "step"}, {"levels", knots_to_json(f.levels)}}; },
                        [](const TanhGrowth& f) { return json{{"kind", "tanh_growth"}, {"a", f.a}}; },
                        [](const PiecewiseLinear& f) {
                          return json{{"kind", "piecewise_linear"}, {"knots", knots_to_json(f.knots)}};
                        },
                        [](const Tabulated& f) {
                          return json{{"kind", "tabulated"}, {"samples", knots_to_json(f.samples)}};
                        },
                    },
                    transfer.form());
}

Transfer transfer_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("transfer must be an object with a string 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  try {
    if (kind == "linear") return Transfer(Linear{number(j, "scale", 1.0)});
    if (kind == "power") {
      if (!j.contains("k")) throw ConfigError("power transfer needs 'k'");
      return Transfer(Power{number(j, "k", 1.0), number(j, "scale", 1.0)});
    }
    if (kind == "step") return Transfer(Step{knots_from_json(j.value("levels", json()), "levels")});
    if (kind == "tanh_growth") return Transfer(TanhGrowth{number(j, "a", 0.0)});
    if (kind == "piecewise_linear")
      return Transfer(PiecewiseLinear{knots_from_json(j.value("knots", json()), "knots")});
    if (kind == "tabulated") return Transfer(Tabulated{knots_from_json(j.value("samples", json()), "samples")});
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid transfer: ") + e.what());
  }
  throw ConfigError("unknown transfer kind '" + kind + "'");
}

ExperimentConfig parse_config(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig cfg;
    if (!j.contains("transfer")) throw ConfigError("config needs a 'transfer' object");
    cfg.transfer = transfer_from_json(j.at("transfer"));

    if (!j.contains("population")) throw ConfigError("config needs a 'population' object");
    const json& p = j.at("population");
    PopulationSpec& pop = cfg.population;
    if (p.contains("agents")) {
      for (const json& a : p.at("agents")) {
        if (!a.contains("w") || !a.contains("alpha")) throw ConfigError("each agent needs 'w' and 'alpha'");
        pop.agents.push_back({number(a, "w", 0.0), number(a, "alpha", 0.0)});
      }
      if (pop.agents.empty()) throw ConfigError("population.agents is empty");
    } else {
      pop.n = count(p, "n", 0);
      if (pop.n < 1) throw ConfigError("population.n must be >= 1");
      if (p.contains("alpha_distribution")) {
        const json& d = p.at("alpha_distribution");
        pop.alpha_kind = d.value("kind", std::string("constant"));
        if (pop.alpha_kind == "constant") {
          pop.alpha_value = number(d, "value", 0.5);
        } else if (pop.alpha_kind == "uniform") {
          pop.alpha_lo = number(d, "lo", 0.0);
          pop.alpha_hi = number(d, "hi", 1.0);
          if (!(pop.alpha_lo < pop.alpha_hi)) throw ConfigError("uniform alpha needs lo < hi");
        } else {
          throw ConfigError("alpha_distribution.kind must be 'constant' or 'uniform'");
        }
      }
      pop.w_init = p.value("w_init", std::string("egalitarian"));
      if (pop.w_init == "explicit") {
        for (const json& v : p.at("w")) pop.w.push_back(v.get<double>());
        if (pop.w.size() != pop.n) throw ConfigError("population.w must have n entries");
      } else if (pop.w_init != "egalitarian" && pop.w_init != "random") {
        throw ConfigError("w_init must be 'egalitarian', 'explicit' or 'random'");
      }
    }

    ExperimentOptions& o = cfg.options;
    if (j.contains("options")) {
      const json& op = j.at("options");
      o.tol = number(op, "tol", o.tol);
      o.max_iter = count(op, "max_iter", o.max_iter);
      o.horizon = count(op, "horizon", o.horizon);
      o.eps = number(op, "eps", o.eps);
      o.gap_tol = number(op, "gap_tol", o.gap_tol);
      o.grid_points = count(op, "grid_points", o.grid_points);
      if (op.contains("seed")) o.seed = static_cast<std::uint64_t>(count(op, "seed", 0));
      o.generations = count(op, "generations", o.generations);
      o.w_min = number(op, "w_min", o.w_min);
      o.w_max = number(op, "w_max", o.w_max);
      o.curve_points = count(op, "curve_points", o.curve_points);
      if (op.contains("alpha")) o.alpha = number(op, "alpha", 0.5);
      if (op.contains("figure_w")) {
        o.figure_w.clear();
        for (const json& v : op.at("figure_w")) o.figure_w.push_back(v.get<double>());
      }
    }
    if (!(o.tol > 0.0) || !(o.eps > 0.0) || !(o.gap_tol > 0.0 && o.gap_tol < 1.0))
      throw ConfigError("options: tol and eps must be > 0 and gap_tol in (0, 1)");
    if (o.grid_points < 2) throw ConfigError("options.grid_points must be >= 2");
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

GenerationState initial_state(const ExperimentConfig& config) {
  const PopulationSpec& pop = config.population;
  std::vector<double> w, alpha;
  if (!pop.agents.empty()) {
    for (const AgentSpec& a : pop.agents) {
      w.push_back(a.w);
      alpha.push_back(a.alpha);
    }
  } else {
    bool random = pop.alpha_kind == "uniform" || pop.w_init == "random";
    if (random && !config.options.seed) throw ConfigError("a seed is required for random population generators");
    std::mt19937_64 rng(config.options.seed.value_or(0));
    for (std::size_t i = 0; i < pop.n; ++i) {
      alpha.push_back(pop.alpha_kind == "uniform" ? pop.alpha_lo + (pop.alpha_hi - pop.alpha_lo) * unit_draw(rng)
                                                  : pop.alpha_value);
    }
    for (std::size_t i = 0; i < pop.n; ++i) {
      if (pop.w_init == "explicit") {
        w.push_back(pop.w[i]);
      } else if (pop.w_init == "random") {
        w.push_back(0.05 + 1.95 * unit_draw(rng));
      } else {
        w.push_back(1.0);
      }
    }
  }
  for (double v : w)
    if (!(v > 0.0)) throw ConfigError("initial endowments must be > 0");
  try {
    return GenerationState::normalized(w, alpha);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid population: ") + e.what());
  }
}

OptimizerOptions optimizer_options(const ExperimentOptions& o) {
  OptimizerOptions opt;
  opt.grid_points = o.grid_points;
  return opt;
}

EquilibriumOptions equilibrium_options(const ExperimentOptions& o) {
  EquilibriumOptions eo;
  eo.tol = o.tol;
  eo.max_iter = o.max_iter;
  eo.optimizer = optimizer_options(o);
  return eo;
}

TrapOptions trap_options(const ExperimentOptions& o) {
  TrapOptions to;
  to.eps = o.eps;
  to.horizon = o.horizon;
  to.gap_tol = o.gap_tol;
  to.optimizer = optimizer_options(o);
  return to;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump_json(const json& j) {
  std::string out;
  emit(out, j, 0);
  out += "\n";
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json to_json(const GenerationState& state) {
  json agents = json::array();
  for (const Agent& a : state.agents()) agents.push_back({{"w", a.w()}, {"alpha", a.alpha()}, {"A", a.A()}});
  return {{"generation", state.generation()}, {"W", state.W()}, {"agents", agents}};
}

json to_json(const OptimumCertificate& c) {
  return {{"x_star", c.x_star},       {"utility", c.utility},           {"c2", c.c2},
          {"argmax_set", c.argmax_set}, {"foc_residual", optional_number(c.foc_residual)},
          {"degenerate", c.degenerate}};
}

json to_json(const EquilibriumReport& r) {
  return {{"converged", r.converged},
          {"state", to_json(r.state)},
          {"efforts", r.efforts},
          {"gamma", r.gamma},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"cycle_period", r.cycle_period ? json(*r.cycle_period) : json(nullptr)},
          {"collapsed", r.collapsed},
          {"dominance", r.dominance}};
}

json to_json(const TrapReport& r) {
  return {{"trapped", r.trapped},
          {"alpha0", r.alpha0},
          {"eps", r.eps},
          {"incumbent_level", r.incumbent_level},
          {"incumbent_synthesized", r.incumbent_synthesized},
          {"final_ratio", r.final_ratio},
          {"orbit_converged", r.orbit_converged},
          {"monotone_decay", r.monotone_decay},
          {"orbit_length", r.probe_orbit.size()},
          {"final_w", r.probe_orbit.empty() ? 0.0 : r.probe_orbit.back()},
          {"mode", r.mode == ProbeMode::MeanField ? "mean-field" : "finite-n"}};
}

json to_json(const MeritReport& r) {
  json pairs = json::array();
  for (auto [i, k] : r.violations) pairs.push_back(json::array({i, k}));
  return {{"is_meritocracy", r.is_meritocracy}, {"violations", pairs}};
}

json to_json(const std::vector<RatRaceFlag>& flags) {
  json arr = json::array();
  for (const RatRaceFlag& f : flags) arr.push_back({{"agent", f.agent}, {"x", f.x}, {"alpha", f.alpha}});
  return arr;
}

json to_json(const RatRaceTheoremReport& r) {
  json traps = json::array();
  for (const TrapReport& t : r.traps) traps.push_back(to_json(t));
  return {{"consistent", r.consistent},
          {"flagged_alphas", r.flagged_alphas},
          {"traps", traps},
          {"counterexamples", r.counterexamples}};
}

json to_json(const MeritocracyTheoremReport& r) {
  return {{"consistent", r.consistent},
          {"applies", r.applies},
          {"alphas", r.alphas},
          {"trapped_alphas", r.trapped_alphas},
          {"merit", to_json(r.merit)}};
}

json to_json(const StabilityReport& r) {
  json eig = json::array();
  for (const auto& l : r.eigenvalues) eig.push_back({{"re", l.real()}, {"im", l.imag()}});
  return {{"eigenvalues", eig},
          {"neutral_eigenvalue_error", r.neutral_eigenvalue_error},
          {"stable", r.stable},
          {"finite_difference", r.finite_difference},
          {"gershgorin_bound", optional_number(r.gershgorin_bound)},
          {"gershgorin_stable", r.gershgorin_stable ? json(*r.gershgorin_stable) : json(nullptr)},
          {"max_column_sum", r.max_column_sum},
          {"n", r.jacobian.size()}};
}

json to_json(const std::vector<Discontinuity>& jumps) {
  json arr = json::array();
  for (const Discontinuity& d : jumps) arr.push_back({{"w0", d.w0}, {"x_minus", d.x_minus}, {"x_plus", d.x_plus}});
  return {{"discontinuities", arr}};
}

json to_json(const std::vector<JumpDiagnostic>& diagnostics) {
  json arr = json::array();
  for (const JumpDiagnostic& d : diagnostics) {
    arr.push_back({{"w0", d.jump.w0},
                   {"x_minus", d.jump.x_minus},
                   {"x_plus", d.jump.x_plus},
                   {"balance_residual", d.balance_residual},
                   {"bound_applicable", d.bound_applicable},
                   {"bound_holds", d.bound_holds},
                   {"r_minus", optional_number(d.r_minus)},
                   {"r_plus", optional_number(d.r_plus)},
                   {"ratio_identity_residual", optional_number(d.ratio_identity_residual)}});
  }
  return arr;
}

json to_json(const TableDiagnostics& d) {
  return {{"valid", d.valid},
          {"decreasing_investment", d.decreasing_investment},
          {"out_of_range", d.out_of_range},
          {"unordered", d.unordered},
          {"steep", d.steep},
          {"lipschitz_estimate", d.lipschitz_estimate}};
}

std::vector<Discontinuity> jumps_from_json(const json& j) {
  std::vector<Discontinuity> out;
  try {
    const json& arr = j.is_array() ? j : j.at("discontinuities");
    for (const json& d : arr)
      out.push_back({d.at("w0").get<double>(), d.at("x_minus").get<double>(), d.at("x_plus").get<double>()});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed jumps file: ") + e.what());
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj, const Transfer& transfer) {
  std::string out = "generation,agent_id,alpha,w,x,investment,T,r\n";
  for (std::size_t j = 0; j < traj.states.size(); ++j) {
    const GenerationState& s = traj.states[j];
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Agent& a = s.agents()[i];
      double x = traj.efforts[j][i];
      double y = x * a.w();
      out += std::to_string(s.generation()) + "," + std::to_string(i) + "," + format_double(a.alpha()) + "," +
             format_double(a.w()) + "," + format_double(x) + "," + format_double(y) + "," +
             format_double(transfer(y)) + ",";
      if (j < traj.returns.size() && traj.returns[j][i]) out += format_double(*traj.returns[j][i]);
      out += "\n";
    }
  }
  return out;
}

std::string orbit_csv(const TrapReport& report) {
  std::string out = "generation,w_probe,ratio\n";
  auto r = report.ratios();
  for (std::size_t t = 0; t < report.probe_orbit.size(); ++t)
    out += std::to_string(t) + "," + format_double(report.probe_orbit[t]) + "," + format_double(r[t]) + "\n";
  return out;
}

std::string jacobian_csv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.size(); ++r) {
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (c) out += ",";
      out += format_double(m(r, c));
    }
    out += "\n";
  }
  return out;
}

std::string effort_curve_csv(const EffortCurve& curve) {
  std::string out = "w,x\n";
  for (std::size_t i = 0; i < curve.w_grid.size(); ++i)
    out += format_double(curve.w_grid[i]) + "," + format_double(curve.x_values[i]) + "\n";
  return out;
}

std::string transfer_samples_csv(const Transfer& tabulated) {
  const auto* tab = std::get_if<Tabulated>(&tabulated.form());
  if (!tab) throw std::invalid_argument("transfer_samples_csv expects a tabulated transfer");
  std::string out = "y,T\n";
  for (const Knot& k : tab->samples) out += format_double(k.y) + "," + format_double(k.t) + "\n";
  return out;
}

EffortTable parse_effort_table_csv(const std::string& text, double A) {
  EffortTable table;
  table.A = A;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "w,g") throw ConfigError("effort table header must be 'w,g'");
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("effort table line " + std::to_string(lineno) + ": expected w,g");
    try {
      table.rows.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw ConfigError("effort table line " + std::to_string(lineno) + ": not a number");
    }
  }
  if (table.rows.empty()) throw ConfigError("effort table has no rows");
  return table;
}

}  // namespace dynasty
