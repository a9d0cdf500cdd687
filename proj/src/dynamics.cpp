#include "dynasty/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "dynasty/errors.hpp"
#include "dynasty/parallel.hpp"

namespace dynasty {

StepResult step_map(std::span<const double> w, std::span<const double> A, const Transfer& transfer, double W,
                    const OptimizerOptions& options) {
  if (w.size() != A.size()) throw std::invalid_argument("step_map: endowment and preference sizes differ");
  const std::size_t n = w.size();
  StepResult out;
  out.efforts.resize(n);
  out.competitiveness.resize(n);
  out.next_w.resize(n);
  parallel_for(n, [&](std::size_t i) {
    out.efforts[i] = optimal_effort(w[i], A[i], transfer, options).x_star;
    out.competitiveness[i] = transfer(out.efforts[i] * w[i]);
  });
  double total = 0.0;
  for (double t : out.competitiveness) total += t;
  out.total_competitiveness = total;
  if (!(total > 0.0)) throw DegeneratePopulation("total competitiveness is zero; endowments cannot be normalized");
  for (std::size_t i = 0; i < n; ++i) out.next_w[i] = W * out.competitiveness[i] / total;
  return out;
}

GenerationState step_generation(const GenerationState& state, const Transfer& transfer,
                                const OptimizerOptions& options) {
  auto w = state.endowments();
  auto A = state.preferences();
  StepResult r = step_map(w, A, transfer, state.W(), options);
  std::vector<Agent> next;
  next.reserve(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!(r.next_w[i] > 0.0))
      throw EndowmentCollapse("endowment of agent " + std::to_string(i) + " collapsed to zero");
    next.emplace_back(r.next_w[i], state.agents()[i].alpha());
  }
  return GenerationState(std::move(next), state.generation() + 1);
}

Trajectory simulate(const GenerationState& initial, const Transfer& transfer, std::size_t generations,
                    const OptimizerOptions& options) {
  Trajectory traj;
  traj.states.push_back(initial);
  for (std::size_t g = 0; g < generations; ++g) traj.states.push_back(step_generation(traj.states.back(), transfer, options));

  for (const GenerationState& s : traj.states) {
    std::vector<double> x(s.size());
    parallel_for(s.size(), [&](std::size_t i) {
      x[i] = optimal_effort(s.agents()[i].w(), s.agents()[i].A(), transfer, options).x_star;
    });
    traj.efforts.push_back(std::move(x));
  }
  for (std::size_t j = 0; j + 1 < traj.states.size(); ++j) {
    std::vector<std::optional<double>> r(traj.states[j].size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      double invested = traj.efforts[j][i] * traj.states[j].agents()[i].w();
      if (invested > 0.0) r[i] = traj.states[j + 1].agents()[i].w() / invested;
    }
    traj.returns.push_back(std::move(r));
  }
  return traj;
}

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

EquilibriumReport find_equilibrium(const GenerationState& initial, const Transfer& transfer,
                                   const EquilibriumOptions& options) {
  EquilibriumReport report{false, initial, {}, 0.0, 0, 0.0, std::nullopt, false, 0.0};
  const double W = initial.W();
  const auto alphas = initial.alphas();
  const auto A = initial.preferences();
  std::vector<double> w = initial.endowments();
  std::deque<std::vector<double>> history{w};

  auto finish = [&](const std::vector<double>& final_w, std::size_t generation) {
    std::vector<Agent> agents;
    agents.reserve(final_w.size());
    for (std::size_t i = 0; i < final_w.size(); ++i) agents.emplace_back(final_w[i], alphas[i]);
    report.state = GenerationState(std::move(agents), generation);
    StepResult last = step_map(final_w, A, transfer, W, options.optimizer);
    report.efforts = last.efforts;
    report.gamma = W / last.total_competitiveness;
    report.dominance = *std::max_element(final_w.begin(), final_w.end()) / W;
  };

  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    StepResult r = step_map(w, A, transfer, W, options.optimizer);
    bool collapsed = std::any_of(r.next_w.begin(), r.next_w.end(), [&](double v) { return !(v >= std::numeric_limits<double>::min() * W); });
    if (collapsed) {
      report.collapsed = true;
      report.iterations = it - 1;
      finish(w, initial.generation() + it - 1);
      return report;
    }
    double abs_change = max_abs_diff(r.next_w, w);
    double rel_change = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) rel_change = std::max(rel_change, std::abs(r.next_w[i] - w[i]) / w[i]);
    report.residual = abs_change / W;
    report.iterations = it;
    w = std::move(r.next_w);

    if (report.residual <= options.tol && rel_change <= options.tol) {
      report.converged = true;
      finish(w, initial.generation() + it);
      return report;
    }
    // history.back() is the previous state; period p compares with p steps back.
    for (std::size_t p = 2; p <= options.cycle_window && p <= history.size(); ++p) {
      const auto& past = history[history.size() - p];
      double rel = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) rel = std::max(rel, std::abs(w[i] - past[i]) / past[i]);
      if (max_abs_diff(w, past) / W <= options.tol && rel <= options.tol) {
        report.cycle_period = p;
        finish(w, initial.generation() + it);
        return report;
      }
    }
    history.push_back(w);
    if (history.size() > options.cycle_window) history.pop_front();
  }
  finish(w, initial.generation() + report.iterations);
  return report;
}

double mean_field_map(double w, double gamma, double A, const Transfer& transfer, const OptimizerOptions& options) {
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be > 0");
  double x = optimal_effort(w, A, transfer, options).x_star;
  return gamma * transfer(w * x);
}

}  // namespace dynasty
