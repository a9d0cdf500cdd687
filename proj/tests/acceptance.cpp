// Acceptance battery: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dynasty/analysis.hpp"
#include "dynasty/cli.hpp"
#include "dynasty/inference.hpp"
#include "dynasty/io.hpp"
#include "dynasty/parallel.hpp"
#include "dynasty/stability.hpp"
#include "specs.hpp"

using namespace dynasty;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct NamedSpec {
  std::string name;
  Transfer transfer;
};

// Rat-race battery: every spec here is run at A = 1.
std::vector<NamedSpec> rat_race_battery() {
  return {{"power k=1.5", Transfer(Power{1.5, 1.0})},
          {"power k=2", Transfer(Power{2.0, 1.0})},
          {"power k=3", Transfer(Power{3.0, 1.0})},
          {"tanh a=0.25", Transfer(TanhGrowth{0.25})},
          {"tanh a=0.5", Transfer(TanhGrowth{0.5})},
          {"step mixture 1", Transfer(Step{{{0.0, 0.01}, {0.4, 0.5}, {0.65, 1.0}}})},
          {"step mixture 2", Transfer(Step{{{0.0, 0.01}, {0.5, 1.0}, {1.5, 3.0}}})},
          {"cliff", dynasty::testing::cliff()}};
}

// Concave or linear specs without traps for any preference.
std::vector<NamedSpec> meritocracy_battery() {
  return {{"power k=0.25", Transfer(Power{0.25, 1.0})},
          {"power k=0.5", Transfer(Power{0.5, 1.0})},
          {"power k=0.75", Transfer(Power{0.75, 2.0})},
          {"concave piecewise", Transfer(PiecewiseLinear{{{0.0, 0.2}, {0.5, 1.0}, {1.0, 1.4}, {3.0, 2.2}, {10.0, 4.0}}})}};
}

EquilibriumReport equilibrium_from(const std::vector<double>& w, const std::vector<double>& alpha, const Transfer& t) {
  return find_equilibrium(GenerationState::normalized(w, alpha), t);
}

// Populations for the preference battery: fixed triples and seeded draws.
std::vector<std::pair<std::vector<double>, std::vector<double>>> preference_populations() {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
  out.push_back({{1.3, 0.9, 0.8}, {0.3, 0.5, 0.7}});
  out.push_back({{0.6, 1.0, 1.4}, {0.7, 0.5, 0.3}});
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> au(0.1, 0.9), wu(0.2, 2.0);
  for (int p = 0; p < 3; ++p) {
    std::vector<double> w(12), a(12);
    for (int i = 0; i < 12; ++i) {
      w[i] = wu(rng);
      a[i] = au(rng);
    }
    out.push_back({w, a});
  }
  return out;
}

double grid_oracle(double w, double A, const Transfer& t, std::size_t n) {
  double best = kNegInf;
  double cap = 1.0 - 1e-12;
  for (std::size_t i = 0; i < n; ++i) best = std::max(best, log_utility(w, cap * static_cast<double>(i) / (n - 1), A, t));
  return best;
}

double ratio(const GenerationState& s) { return s.endowments()[0] / s.endowments()[1]; }

Outcome criterion1() {
  Outcome o;
  double worst = 0.0;
  for (double k : {0.5, 1.0, 2.0, 3.0}) {
    double x = optimal_effort(1.0, 1.0, Transfer(Power{k, 1.0})).x_star;
    worst = std::max(worst, std::abs(x - k / (k + 1.0)));
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  std::vector<double> w(25), alpha(25, 0.5);
  for (double& v : w) v = u(rng);
  GenerationState s = GenerationState::normalized(w, alpha);
  Trajectory tr = simulate(s, Transfer(Linear{1.0}), 10);
  double drift = 0.0;
  for (const auto& st : tr.states)
    for (std::size_t i = 0; i < w.size(); ++i) drift = std::max(drift, std::abs(st.endowments()[i] - s.endowments()[i]));
  o.pass = worst <= 1e-8 && drift <= 1e-9;
  o.detail = "max |x - kA/(kA+1)| = " + fmt("%.3g", worst) + ", linear drift over 10 generations = " + fmt("%.3g", drift);
  return o;
}

Outcome criterion2() {
  Outcome o;
  GenerationState s({Agent(1.2, 0.5), Agent(0.8, 0.5)});
  double worst_sq = 0.0, worst_root = 0.0;
  Trajectory sq = simulate(s, Transfer(Power{2.0, 1.0}), 3);
  for (std::size_t j = 0; j + 1 < sq.states.size(); ++j)
    worst_sq = std::max(worst_sq, std::abs(ratio(sq.states[j + 1]) - std::pow(ratio(sq.states[j]), 2.0)));
  Trajectory root = simulate(s, Transfer(Power{0.5, 1.0}), 3);
  for (std::size_t j = 0; j + 1 < root.states.size(); ++j)
    worst_root = std::max(worst_root, std::abs(ratio(root.states[j + 1]) - std::sqrt(ratio(root.states[j]))));
  double last = ratio(sq.states.back());
  o.pass = worst_sq <= 1e-6 && worst_root <= 1e-6 && std::abs(last - 25.62890625) <= 1e-6;
  o.detail = "squared-ratio error " + fmt("%.3g", worst_sq) + ", root-ratio error " + fmt("%.3g", worst_root) +
             ", ratio after 3 generations " + fmt("%.10g", last);
  return o;
}

Outcome criterion3() {
  Outcome o;
  Transfer step = dynasty::testing::two_level_step();
  EquilibriumReport eq = find_equilibrium(GenerationState::egalitarian(std::vector<double>(4, 0.5)), step);
  GenerationState next = step_generation(eq.state, step);
  double fixed_err = 0.0, x_err = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    fixed_err = std::max(fixed_err, std::abs(next.endowments()[i] - 1.0));
    x_err = std::max(x_err, std::abs(eq.efforts[i] - 0.5));
  }
  TrapReport trap = detect_wealth_trap(eq, step, 0.5);
  Transfer root(Power{0.5, 1.0});
  EquilibriumReport req = find_equilibrium(GenerationState::egalitarian(std::vector<double>(4, 0.5)), root);
  TrapReport rtrap = detect_wealth_trap(req, root, 0.5);
  o.pass = eq.converged && fixed_err <= 1e-12 && x_err <= 1e-9 && trap.trapped &&
           std::abs(trap.final_ratio - 0.01) <= 0.1 * 0.01 && req.converged && !rtrap.trapped;
  o.detail = "fixed-point error " + fmt("%.3g", fixed_err) + ", |x - 0.5| " + fmt("%.3g", x_err) + ", step trapped=" +
             (trap.trapped ? "true" : "false") + " final_ratio=" + fmt("%.6g", trap.final_ratio) + ", sqrt trapped=" +
             (rtrap.trapped ? "true" : "false");
  return o;
}

Outcome criterion4() {
  Outcome o;
  std::size_t equilibria = 0, flagged = 0, counterexamples = 0;
  std::string names;
  for (const NamedSpec& s : rat_race_battery()) {
    std::vector<EquilibriumReport> eqs;
    eqs.push_back(find_equilibrium(GenerationState::egalitarian(std::vector<double>(4, 0.5)), s.transfer));
    // A seeded heterogeneous population where it settles.
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> au(0.2, 0.8), wu(0.3, 1.7);
    std::vector<double> w(16), a(16);
    for (int i = 0; i < 16; ++i) {
      w[i] = wu(rng);
      a[i] = au(rng);
    }
    eqs.push_back(equilibrium_from(w, a, s.transfer));
    for (const EquilibriumReport& eq : eqs) {
      if (!eq.converged) continue;
      ++equilibria;
      RatRaceTheoremReport r = verify_rat_race_theorem(eq, s.transfer);
      if (!r.flagged_alphas.empty()) ++flagged;
      counterexamples += r.counterexamples.size();
      if (!r.consistent) names += " " + s.name;
    }
  }
  o.pass = counterexamples == 0 && flagged > 0;
  o.detail = std::to_string(equilibria) + " equilibria, " + std::to_string(flagged) + " with rat-race flags, " +
             std::to_string(counterexamples) + " counterexamples" + names;
  return o;
}

Outcome criterion5() {
  Outcome o;
  std::size_t applied = 0, counterexamples = 0, skipped = 0;
  for (const NamedSpec& s : meritocracy_battery()) {
    for (const auto& [w, a] : preference_populations()) {
      EquilibriumReport eq = equilibrium_from(w, a, s.transfer);
      if (!eq.converged) {
        ++skipped;
        continue;
      }
      MeritocracyTheoremReport r = verify_meritocracy_theorem(eq, s.transfer);
      if (r.applies) ++applied;
      if (!r.consistent) ++counterexamples;
    }
  }
  o.pass = counterexamples == 0 && applied > 0;
  o.detail = std::to_string(applied) + " trap-free equilibria checked, " + std::to_string(counterexamples) +
             " counterexamples, " + std::to_string(skipped) + " non-converged skipped";
  return o;
}

Outcome criterion6() {
  Outcome o;
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> wu(0.05, 3.0), au(0.25, 4.0);
  struct Case {
    Transfer t;
    double w, A;
  };
  std::vector<Case> cases;
  for (int i = 0; i < 100; ++i) {
    Transfer t = dynasty::testing::random_piecewise(rng, 3.0);
    double w = wu(rng), A = au(rng);
    cases.push_back({t, w, A});
  }
  std::vector<double> gap(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    OptimumCertificate c = optimal_effort(cases[i].w, cases[i].A, cases[i].t);
    gap[i] = grid_oracle(cases[i].w, cases[i].A, cases[i].t, 1000000) - c.utility;
    if (std::isnan(gap[i])) gap[i] = 0.0;  // both -inf
  });
  double worst_gap = *std::max_element(gap.begin(), gap.end());

  // First-order condition at every differentiable interior optimum.
  std::vector<Case> smooth;
  for (const Case& c : cases) smooth.push_back(c);
  for (double w : {0.3, 1.0, 2.5})
    for (double A : {0.5, 1.0, 3.0}) {
      smooth.push_back({Transfer(TanhGrowth{0.25}), w, A});
      smooth.push_back({Transfer(TanhGrowth{0.5}), w, A});
      smooth.push_back({Transfer(Power{0.5, 1.0}), w, A});
      smooth.push_back({Transfer(Power{3.0, 1.0}), w, A});
    }
  double worst_foc = 0.0;
  std::size_t checked = 0;
  for (const Case& c : smooth) {
    OptimumCertificate cert = optimal_effort(c.w, c.A, c.t);
    if (cert.x_star <= 0.0 || !cert.foc_residual) continue;
    double y = c.w * cert.x_star;
    double scale = 1.0 / (c.A * (c.w - y));
    worst_foc = std::max(worst_foc, std::abs(*cert.foc_residual) / scale);
    ++checked;
  }
  o.pass = worst_gap <= 1e-8 && worst_foc <= 1e-6 && checked > 0;
  o.detail = "max oracle excess " + fmt("%.3g", worst_gap) + " over 100 specs, max relative FOC residual " +
             fmt("%.3g", worst_foc) + " at " + std::to_string(checked) + " optima";
  return o;
}

std::vector<NamedSpec> curve_battery() {
  std::vector<NamedSpec> all = rat_race_battery();
  for (NamedSpec& s : meritocracy_battery()) all.push_back(s);
  all.push_back({"linear", Transfer(Linear{1.0})});
  all.push_back({"step", dynasty::testing::two_level_step()});
  std::mt19937_64 rng(707);
  for (int i = 0; i < 20; ++i) all.push_back({"random piecewise", dynasty::testing::random_piecewise(rng, 3.0)});
  return all;
}

Outcome criterion7() {
  Outcome o;
  double worst = 0.0;
  std::size_t curves = 0;
  for (const NamedSpec& s : curve_battery()) {
    for (double A : {0.5, 1.0, 2.0}) {
      EffortCurve c = effort_curve(A, s.transfer, 0.05, 3.0, 400);
      ++curves;
      for (std::size_t i = 1; i < c.w_grid.size(); ++i)
        worst = std::max(worst, c.w_grid[i - 1] * c.x_values[i - 1] - c.w_grid[i] * c.x_values[i]);
    }
  }
  o.pass = worst <= 1e-9;
  o.detail = std::to_string(curves) + " curves, max investment decrease " + fmt("%.3g", std::max(worst, 0.0));
  return o;
}

Outcome criterion8() {
  Outcome o;
  std::vector<std::pair<Transfer, bool>> specs;  // transfer, smooth
  for (const NamedSpec& s : rat_race_battery()) specs.push_back({s.transfer, s.transfer.kind() == "power" || s.transfer.kind() == "tanh_growth"});
  for (const NamedSpec& s : meritocracy_battery()) specs.push_back({s.transfer, s.transfer.kind() == "power"});
  specs.push_back({Transfer(Linear{1.0}), true});
  specs.push_back({dynasty::testing::two_level_step(), false});

  double worst_col = 0.0, worst_fd = 0.0, worst_neutral = 0.0;
  std::size_t n_eq = 0, n_smooth = 0;
  for (const auto& [t, smooth] : specs) {
    std::vector<EquilibriumReport> eqs;
    eqs.push_back(find_equilibrium(GenerationState::egalitarian(std::vector<double>(5, 0.5)), t));
    for (const auto& [w, a] : preference_populations()) eqs.push_back(equilibrium_from(w, a, t));
    for (const EquilibriumReport& eq : eqs) {
      if (!eq.converged) continue;
      ++n_eq;
      StabilityReport r = linear_stability(eq, t);
      worst_col = std::max(worst_col, r.max_column_sum);
      worst_neutral = std::max(worst_neutral, r.neutral_eigenvalue_error);
      if (smooth && !r.finite_difference) {
        ++n_smooth;
        Matrix fd = finite_difference_jacobian(eq.state, t);
        double scale = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < fd.data().size(); ++i) {
          scale = std::max(scale, std::abs(r.jacobian.data()[i]));
          diff = std::max(diff, std::abs(r.jacobian.data()[i] - fd.data()[i]));
        }
        worst_fd = std::max(worst_fd, diff / scale);
      }
    }
  }
  o.pass = worst_col <= 1e-8 && worst_fd <= 1e-4 && worst_neutral <= 1e-8 && n_smooth > 0;
  o.detail = std::to_string(n_eq) + " equilibria: max column sum " + fmt("%.3g", worst_col) + ", max |lambda_0| " +
             fmt("%.3g", worst_neutral) + "; analytic vs finite differences " + fmt("%.3g", worst_fd) + " on " +
             std::to_string(n_smooth) + " smooth equilibria";
  return o;
}

Outcome criterion9() {
  Outcome o;
  double e_lin = round_trip_error(Transfer(Linear{1.0}), 1.0, 0.2, 3.0, 2000);
  double e_root = round_trip_error(Transfer(Power{0.5, 1.0}), 1.0, 0.2, 3.0, 2000);
  double e_sq = round_trip_error(Transfer(Power{2.0, 1.0}), 1.0, 0.2, 3.0, 2000);

  Transfer step = dynasty::testing::two_level_step();
  EffortTable table = table_from_curve(effort_curve(1.0, step, 0.2, 2.0, 2000), 1.0);
  InferredTransfer inf = infer_transfer(table, {0.5, 1.0});
  double level_ratio = inf.transfer(0.5) / inf.transfer(0.0);
  double e_step = std::abs(level_ratio / 100.0 - 1.0);

  // Scale covariance: exact for power-of-two factors, rounding-level otherwise.
  EffortTable cliff = table_from_curve(effort_curve(1.0, dynasty::testing::cliff(), 0.3, 2.5, 2000), 1.0);
  InferredTransfer base = infer_transfer(cliff, {0.25, 1.0});
  bool exact = true;
  double worst_rel = 0.0;
  for (double c : {8.0, 0.25, 3.0, 0.7}) {
    InferredTransfer scaled = infer_transfer(cliff, {0.25, c});
    for (std::size_t i = 0; i < base.pinned.size(); ++i) {
      double expect = c * base.pinned[i].t;
      if (c == 8.0 || c == 0.25) exact = exact && scaled.pinned[i].t == expect;
      worst_rel = std::max(worst_rel, std::abs(scaled.pinned[i].t - expect) / expect);
    }
  }
  o.pass = e_lin <= 1e-3 && e_root <= 1e-3 && e_sq <= 1e-3 && e_step <= 5e-3 && exact && worst_rel <= 4e-16;
  o.detail = "round trip linear " + fmt("%.3g", e_lin) + ", sqrt " + fmt("%.3g", e_root) + ", square " +
             fmt("%.3g", e_sq) + "; step level ratio " + fmt("%.8g", level_ratio) + "; scale covariance " +
             (exact ? "exact" : "inexact") + " (max rel " + fmt("%.3g", worst_rel) + ")";
  return o;
}

Outcome criterion10() {
  Outcome o;
  std::size_t jumps = 0, ratio_checked = 0, ratio_undefined = 0;
  double worst_balance = 0.0, worst_ratio = 0.0;
  for (const NamedSpec& s : curve_battery()) {
    for (double A : {0.5, 1.0, 2.0}) {
      EffortCurve c = effort_curve(A, s.transfer, 0.05, 3.0, 400);
      for (const JumpDiagnostic& d : jump_identities(c, A, s.transfer, 1.0)) {
        ++jumps;
        worst_balance = std::max(worst_balance, d.balance_residual);
        if (d.ratio_identity_residual) {
          ++ratio_checked;
          worst_ratio = std::max(worst_ratio, *d.ratio_identity_residual);
        } else {
          ++ratio_undefined;  // x- = 0: both sides are infinite
        }
      }
    }
  }
  o.pass = jumps > 0 && ratio_checked > 0 && worst_balance <= 1e-5 && worst_ratio <= 1e-5;
  o.detail = std::to_string(jumps) + " jumps: max balance residual " + fmt("%.3g", worst_balance) +
             ", max ratio-identity residual " + fmt("%.3g", worst_ratio) + " on " + std::to_string(ratio_checked) +
             " (" + std::to_string(ratio_undefined) + " with zero left effort)";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion11() {
  Outcome o;
  const char* text =
      R"({"population": {"n": 40, "alpha_distribution": {"kind": "uniform", "lo": 0.05, "hi": 0.95}, "w_init": "random"},
          "transfer": {"kind": "step", "levels": [[0, 0.01], [0.5, 1.0]]}, "options": {"seed": 2024}})";
  ExperimentConfig cfg = parse_config(json::parse(text));
  ExperimentConfig sq = parse_config(json::parse(
      R"({"population": {"n": 4}, "transfer": {"kind": "power", "k": 2}, "options": {"seed": 7}})"));
  std::vector<std::string> outputs;
  int codes = 0;
  const char* threads[] = {"1", "3", "1"};
  for (const char* th : threads) {
    setenv("DYNASTY_THREADS", th, 1);
    std::string joined;
    for (const ExperimentConfig* c : {&cfg, &sq}) {
      fs::path dir = fs::temp_directory_path() / ("dynasty_acceptance_verify_" + std::string(th));
      fs::remove_all(dir);
      CliFlags flags;
      flags.out_dir = dir;
      std::ostringstream out, err;
      codes |= run_subcommand("verify", *c, flags, out, err) == kExitNumerical ? 1 : 0;
      joined += slurp(dir / "verify.json");
    }
    outputs.push_back(joined);
  }
  unsetenv("DYNASTY_THREADS");
  bool same = !outputs[0].empty() && outputs[0] == outputs[1] && outputs[1] == outputs[2];
  o.pass = same && codes == 0;
  o.detail = std::string(same ? "byte-identical" : "different") + " verify reports across 3 runs (" +
             std::to_string(outputs[0].size()) + " bytes)";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria{{"closed-form efforts and linear reproduction", criterion1},
                                  {"ratio dynamics", criterion2},
                                  {"step-function wealth trap", criterion3},
                                  {"rat race implies a wealth trap", criterion4},
                                  {"trap-free equilibria are meritocracies", criterion5},
                                  {"optimizer against a brute-force oracle", criterion6},
                                  {"investment is non-decreasing in endowment", criterion7},
                                  {"Jacobian structure and neutral eigenvalue", criterion8},
                                  {"transfer inference round trip", criterion9},
                                  {"jump identities", criterion10},
                                  {"deterministic verify reports", criterion11}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
