#include "dynasty/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "dynasty/errors.hpp"

namespace dynasty {

std::vector<double> TrapReport::ratios() const {
  std::vector<double> out;
  out.reserve(probe_orbit.size());
  for (double w : probe_orbit) out.push_back(incumbent_level > 0.0 ? w / incumbent_level : 0.0);
  return out;
}

namespace {

void require_converged(const EquilibriumReport& eq) {
  if (!eq.converged) throw PreconditionError("analysis needs a converged equilibrium");
}

// Orbit of a frozen-gamma agent. Stops on convergence or on collapse to zero.
struct Orbit {
  std::vector<double> w;
  bool converged = false;
};

Orbit follow_map(double w0, double gamma, double A, const Transfer& transfer, std::size_t horizon,
                 double tol, const OptimizerOptions& opt) {
  Orbit orbit;
  orbit.w.push_back(w0);
  double w = w0;
  for (std::size_t t = 0; t < horizon; ++t) {
    double next = mean_field_map(w, gamma, A, transfer, opt);
    if (!(next > 0.0) || !std::isfinite(next)) {
      orbit.w.push_back(0.0);
      orbit.converged = true;
      return orbit;
    }
    orbit.w.push_back(next);
    if (std::abs(next - w) <= tol * w) {
      orbit.converged = true;
      return orbit;
    }
    w = next;
  }
  return orbit;
}

void classify(TrapReport& rep, const TrapOptions& options, bool converged, std::size_t steps_taken) {
  rep.orbit_converged = converged;
  auto r = rep.ratios();
  rep.final_ratio = r.empty() ? 0.0 : r.back();
  bool monotone = !converged && steps_taken >= options.horizon && r.size() >= 2;
  for (std::size_t i = 1; monotone && i < r.size(); ++i) monotone = r[i] < r[i - 1];
  rep.monotone_decay = monotone;
  if (!(rep.incumbent_level > 0.0)) {
    rep.trapped = false;
    return;
  }
  rep.trapped = (converged && rep.final_ratio < 1.0 - options.gap_tol) || monotone;
}

}  // namespace

TrapReport detect_wealth_trap(const EquilibriumReport& eq, const Transfer& transfer, double alpha0,
                              const TrapOptions& options) {
  require_converged(eq);
  const double A0 = alpha_to_A(alpha0);
  TrapReport rep;
  rep.alpha0 = alpha0;
  rep.eps = options.eps;
  rep.mode = ProbeMode::MeanField;

  bool found = false;
  for (const Agent& a : eq.state.agents()) {
    if (std::abs(a.alpha() - alpha0) <= options.alpha_match_tol) {
      rep.incumbent_level = found ? std::max(rep.incumbent_level, a.w()) : a.w();
      found = true;
    }
  }
  if (!found) {
    // Matched incumbent at the mean-field fixed point reached from the mean endowment.
    Orbit fixed = follow_map(1.0, eq.gamma, A0, transfer, std::max<std::size_t>(options.horizon, 10000),
                             options.convergence_tol, options.optimizer);
    rep.incumbent_level = fixed.w.back();
    rep.incumbent_synthesized = true;
  }

  Orbit orbit = follow_map(options.eps, eq.gamma, A0, transfer, options.horizon, options.convergence_tol,
                           options.optimizer);
  rep.probe_orbit = std::move(orbit.w);
  classify(rep, options, orbit.converged, rep.probe_orbit.size() - 1);
  return rep;
}

TrapReport detect_wealth_trap_finite(const EquilibriumReport& eq, const Transfer& transfer, double alpha0,
                                     const TrapOptions& options) {
  require_converged(eq);
  TrapReport rep;
  rep.alpha0 = alpha0;
  rep.eps = options.eps;
  rep.mode = ProbeMode::FiniteN;

  std::vector<double> w = eq.state.endowments();
  std::vector<double> alpha = eq.state.alphas();
  std::size_t incumbent = w.size();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (std::abs(alpha[i] - alpha0) <= options.alpha_match_tol && (incumbent == w.size() || w[i] > w[incumbent]))
      incumbent = i;
  }
  if (incumbent == w.size()) {
    // No matched agent: add one at the mean endowment alongside the probe.
    w.push_back(1.0);
    alpha.push_back(alpha0);
    incumbent = w.size() - 1;
  }
  w.push_back(options.eps);
  alpha.push_back(alpha0);
  const std::size_t probe = w.size() - 1;

  GenerationState state = GenerationState::normalized(w, alpha);
  std::vector<double> incumbents{state.agents()[incumbent].w()};
  rep.probe_orbit.push_back(state.agents()[probe].w());
  bool converged = false;
  std::size_t steps = 0;
  for (; steps < options.horizon; ++steps) {
    std::optional<GenerationState> next;
    try {
      next = step_generation(state, transfer, options.optimizer);
    } catch (const EndowmentCollapse&) {
      // Winner-take-all drift pushed someone (in practice the probe) to zero.
      rep.probe_orbit.push_back(0.0);
      incumbents.push_back(state.agents()[incumbent].w());
      converged = true;
      ++steps;
      break;
    }
    double before = state.agents()[probe].w();
    double after = next->agents()[probe].w();
    rep.probe_orbit.push_back(after);
    incumbents.push_back(next->agents()[incumbent].w());
    state = std::move(*next);
    if (std::abs(after - before) <= options.convergence_tol * before) {
      converged = true;
      ++steps;
      break;
    }
  }
  // Ratios are taken against the incumbent at the same generation.
  rep.incumbent_level = incumbents.back();
  std::vector<double> r(rep.probe_orbit.size());
  for (std::size_t t = 0; t < r.size(); ++t) r[t] = rep.probe_orbit[t] / incumbents[t];
  rep.orbit_converged = converged;
  rep.final_ratio = r.back();
  bool monotone = !converged && steps >= options.horizon && r.size() >= 2;
  for (std::size_t t = 1; monotone && t < r.size(); ++t) monotone = r[t] < r[t - 1];
  rep.monotone_decay = monotone;
  rep.trapped = (converged && rep.final_ratio < 1.0 - options.gap_tol) || monotone;
  return rep;
}

MeritReport check_meritocracy(const GenerationState& state, double slack) {
  MeritReport rep;
  const auto& agents = state.agents();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t k = 0; k < agents.size(); ++k) {
      if (i == k) continue;
      if (agents[i].alpha() <= agents[k].alpha() && agents[i].w() > agents[k].w() + slack)
        rep.violations.emplace_back(i, k);
    }
  }
  rep.is_meritocracy = rep.violations.empty();
  return rep;
}

std::vector<RatRaceFlag> rat_race_flags(const GenerationState& state, const Transfer& transfer,
                                        const OptimizerOptions& options) {
  std::vector<RatRaceFlag> flags;
  const auto& agents = state.agents();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    double x = optimal_effort(agents[i].w(), agents[i].A(), transfer, options).x_star;
    if (x > agents[i].alpha() + 1e-9) flags.push_back({i, x, agents[i].alpha()});
  }
  return flags;
}

std::vector<double> distinct_alphas(const GenerationState& state, double tol) {
  std::vector<double> a = state.alphas();
  std::sort(a.begin(), a.end());
  std::vector<double> out;
  for (double v : a)
    if (out.empty() || v - out.back() > tol) out.push_back(v);
  return out;
}

RatRaceTheoremReport verify_rat_race_theorem(const EquilibriumReport& eq, const Transfer& transfer,
                                             const TrapOptions& options) {
  require_converged(eq);
  RatRaceTheoremReport rep;
  for (const RatRaceFlag& f : rat_race_flags(eq.state, transfer, options.optimizer)) {
    bool seen = std::any_of(rep.flagged_alphas.begin(), rep.flagged_alphas.end(),
                            [&](double a) { return std::abs(a - f.alpha) <= options.alpha_match_tol; });
    if (!seen) rep.flagged_alphas.push_back(f.alpha);
  }
  std::sort(rep.flagged_alphas.begin(), rep.flagged_alphas.end());
  for (double a : rep.flagged_alphas) {
    TrapReport trap = detect_wealth_trap(eq, transfer, a, options);
    if (!trap.trapped) rep.counterexamples.push_back(a);
    rep.traps.push_back(std::move(trap));
  }
  rep.consistent = rep.counterexamples.empty();
  return rep;
}

MeritocracyTheoremReport verify_meritocracy_theorem(const EquilibriumReport& eq, const Transfer& transfer,
                                                    const TrapOptions& options) {
  require_converged(eq);
  MeritocracyTheoremReport rep;
  rep.alphas = distinct_alphas(eq.state, options.alpha_match_tol);
  for (double a : rep.alphas)
    if (detect_wealth_trap(eq, transfer, a, options).trapped) rep.trapped_alphas.push_back(a);
  rep.merit = check_meritocracy(eq.state);
  rep.applies = rep.trapped_alphas.empty();
  rep.consistent = !rep.applies || rep.merit.is_meritocracy;
  return rep;
}

}  // namespace dynasty
