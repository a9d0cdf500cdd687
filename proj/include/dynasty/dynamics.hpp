#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dynasty/model.hpp"
#include "dynasty/optimizer.hpp"
#include "dynasty/transfer.hpp"

namespace dynasty {

// Raw normalization map on plain vectors: each agent picks its mean-field
// effort, then w'_i = W T(x_i w_i) / sum_k T(x_k w_k). The input does not
// need to sum to W, which is what the finite-difference Jacobian needs.
struct StepResult {
  std::vector<double> efforts;
  std::vector<double> competitiveness;  // T(x_i w_i)
  std::vector<double> next_w;
  double total_competitiveness = 0.0;
};

StepResult step_map(std::span<const double> w, std::span<const double> A, const Transfer& transfer, double W,
                    const OptimizerOptions& options = {});

GenerationState step_generation(const GenerationState& state, const Transfer& transfer,
                                const OptimizerOptions& options = {});

struct Trajectory {
  std::vector<GenerationState> states;
  std::vector<std::vector<double>> efforts;  // one row per state
  // returns[j][i] = w_{i,j+1} / (x_{i,j} w_{i,j}); one row per step.
  std::vector<std::vector<std::optional<double>>> returns;
};

Trajectory simulate(const GenerationState& initial, const Transfer& transfer, std::size_t generations,
                    const OptimizerOptions& options = {});

struct EquilibriumOptions {
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  std::size_t cycle_window = 8;
  OptimizerOptions optimizer{};
};

struct EquilibriumReport {
  bool converged = false;
  GenerationState state;
  std::vector<double> efforts;
  double gamma = 0.0;  // W / sum_k T(w_k x_k)
  std::size_t iterations = 0;
  double residual = 0.0;  // max_i |w_{i,j+1} - w_{i,j}| / W on the last step
  std::optional<std::size_t> cycle_period;
  bool collapsed = false;  // an endowment underflowed to zero
  double dominance = 0.0;  // max_i w_i / W
};

EquilibriumReport find_equilibrium(const GenerationState& initial, const Transfer& transfer,
                                   const EquilibriumOptions& options = {});

// gamma T(w g_A(w)): the next endowment of a measure-zero agent against a
// frozen background.
double mean_field_map(double w, double gamma, double A, const Transfer& transfer,
                      const OptimizerOptions& options = {});

}  // namespace dynasty
