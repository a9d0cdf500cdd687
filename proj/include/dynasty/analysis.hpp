#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dynasty/dynamics.hpp"

namespace dynasty {

enum class ProbeMode { MeanField, FiniteN };

struct TrapOptions {
  double eps = 1e-3;
  std::size_t horizon = 500;
  double gap_tol = 0.1;
  double convergence_tol = 1e-10;  // relative change that ends the orbit
  double alpha_match_tol = 1e-9;
  OptimizerOptions optimizer{};
};

struct TrapReport {
  bool trapped = false;
  double alpha0 = 0.0;
  double eps = 0.0;
  std::vector<double> probe_orbit;  // w of the probe, starting at eps
  double incumbent_level = 0.0;
  bool incumbent_synthesized = false;
  double final_ratio = 0.0;
  bool orbit_converged = false;
  bool monotone_decay = false;
  ProbeMode mode = ProbeMode::MeanField;

  std::vector<double> ratios() const;
};

// Adds a measure-zero agent with preference alpha0 and endowment eps to a
// converged equilibrium and follows it under the frozen-gamma map.
TrapReport detect_wealth_trap(const EquilibriumReport& eq, const Transfer& transfer, double alpha0,
                              const TrapOptions& options = {});

// Same question answered by inserting agent n+1 into the finite population.
TrapReport detect_wealth_trap_finite(const EquilibriumReport& eq, const Transfer& transfer, double alpha0,
                                     const TrapOptions& options = {});

struct MeritReport {
  bool is_meritocracy = true;
  std::vector<std::pair<std::size_t, std::size_t>> violations;  // (i, k): alpha_i <= alpha_k, w_i > w_k
};

MeritReport check_meritocracy(const GenerationState& state, double slack = 1e-9);

struct RatRaceFlag {
  std::size_t agent;
  double x;
  double alpha;
};

std::vector<RatRaceFlag> rat_race_flags(const GenerationState& state, const Transfer& transfer,
                                        const OptimizerOptions& options = {});

struct RatRaceTheoremReport {
  bool consistent = true;
  std::vector<double> flagged_alphas;
  std::vector<TrapReport> traps;  // one per flagged alpha
  std::vector<double> counterexamples;
};

RatRaceTheoremReport verify_rat_race_theorem(const EquilibriumReport& eq, const Transfer& transfer,
                                             const TrapOptions& options = {});

struct MeritocracyTheoremReport {
  bool consistent = true;
  bool applies = false;  // no represented alpha has a trap
  std::vector<double> alphas;
  std::vector<double> trapped_alphas;
  MeritReport merit;
};

MeritocracyTheoremReport verify_meritocracy_theorem(const EquilibriumReport& eq, const Transfer& transfer,
                                                    const TrapOptions& options = {});

// Distinct alphas of a population (within tol), ascending.
std::vector<double> distinct_alphas(const GenerationState& state, double tol = 1e-9);

}  // namespace dynasty
