#include "dynasty/stability.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "dynasty/errors.hpp"

namespace dynasty {

std::optional<Sensitivity> effort_sensitivity(double w, double A, const Transfer& transfer,
                                              const OptimizerOptions& options) {
  double g = optimal_effort(w, A, transfer, options).x_star;
  if (!(g > 0.0)) return std::nullopt;
  double y = w * g;
  Derivatives d = transfer.derivatives(y);
  if (!d.differentiable) return std::nullopt;
  double t = transfer(y);
  if (!(t > 0.0)) return std::nullopt;
  double gap = w - y;
  double denom = 1.0 + 1.0 / A - A * gap * gap * d.second / t;
  if (denom == 0.0) return std::nullopt;
  double d_wg = 1.0 / denom;
  return Sensitivity{-g / w + d_wg / w, d_wg};
}

std::optional<Matrix> analytic_jacobian(const GenerationState& state, const Transfer& transfer,
                                        const OptimizerOptions& options) {
  const std::size_t n = state.size();
  std::vector<double> slope(n), t(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Agent& a = state.agents()[i];
    auto sens = effort_sensitivity(a.w(), a.A(), transfer, options);
    if (!sens) return std::nullopt;
    double x = optimal_effort(a.w(), a.A(), transfer, options).x_star;
    double y = a.w() * x;
    t[i] = transfer(y);
    slope[i] = transfer.derivatives(y).first * sens->d_wg_dw;
    total += t[i];
  }
  if (!(total > 0.0)) throw DegeneratePopulation("total competitiveness is zero");
  const double gamma = state.W() / total;
  Matrix J(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) J(k, i) = gamma * slope[i] * ((k == i ? 1.0 : 0.0) - t[k] / total);
  return J;
}

Matrix finite_difference_jacobian(const GenerationState& state, const Transfer& transfer, double step,
                                  const OptimizerOptions& options) {
  const std::size_t n = state.size();
  const auto w = state.endowments();
  const auto A = state.preferences();
  Matrix J(n);
  for (std::size_t i = 0; i < n; ++i) {
    double h = step * std::max(1.0, w[i]);
    auto up = w;
    auto down = w;
    up[i] += h;
    down[i] -= h;
    auto fu = step_map(up, A, transfer, state.W(), options).next_w;
    auto fd = step_map(down, A, transfer, state.W(), options).next_w;
    for (std::size_t k = 0; k < n; ++k) J(k, i) = (fu[k] - fd[k]) / (2.0 * h);
  }
  return J;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) M(r, c) = m(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(M, false);
  std::vector<std::complex<double>> out(solver.eigenvalues().begin(), solver.eigenvalues().end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

StabilityReport linear_stability(const EquilibriumReport& eq, const Transfer& transfer,
                                 const StabilityOptions& options) {
  if (!eq.converged) throw PreconditionError("linear_stability needs a converged equilibrium");
  StabilityReport rep;
  if (auto J = analytic_jacobian(eq.state, transfer, options.optimizer)) {
    rep.jacobian = std::move(*J);
  } else {
    rep.jacobian = finite_difference_jacobian(eq.state, transfer, options.fd_step, options.optimizer);
    rep.finite_difference = true;
  }
  const std::size_t n = rep.jacobian.size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += rep.jacobian(k, i);
    rep.max_column_sum = std::max(rep.max_column_sum, std::abs(sum));
  }

  rep.eigenvalues = eigenvalues(rep.jacobian);
  // Sorted by modulus, so the neutral eigenvalue is the first one.
  rep.neutral_eigenvalue_error = std::abs(rep.eigenvalues.front());
  rep.stable = std::all_of(rep.eigenvalues.begin() + 1, rep.eigenvalues.end(),
                           [](const auto& l) { return std::abs(l) <= 1.0 + 1e-8; });

  const auto& agents = eq.state.agents();
  bool egalitarian = std::all_of(agents.begin(), agents.end(), [&](const Agent& a) {
    return std::abs(a.w() - agents.front().w()) <= 1e-12 && a.A() == agents.front().A();
  });
  if (egalitarian) {
    const Agent& a = agents.front();
    if (auto sens = effort_sensitivity(a.w(), a.A(), transfer, options.optimizer)) {
      double x = optimal_effort(a.w(), a.A(), transfer, options.optimizer).x_star;
      double bound = eq.gamma * transfer.derivatives(a.w() * x).first * sens->d_wg_dw;
      rep.gershgorin_bound = bound;
      rep.gershgorin_stable = bound < 1.0;
    }
  }
  return rep;
}

std::optional<CurvatureBound> second_derivative_bound(double w, double A, const Transfer& transfer,
                                                      const OptimizerOptions& options) {
  double g = optimal_effort(w, A, transfer, options).x_star;
  if (!(g > 0.0)) return std::nullopt;
  double y = w * g;
  Derivatives d = transfer.derivatives(y);
  if (!d.differentiable) return std::nullopt;
  double t = transfer(y);
  if (!(t > 0.0)) return std::nullopt;
  double gap2 = (w - y) * (w - y);
  CurvatureBound b{};
  b.lhs = d.second / t;
  b.rhs_stated = (A - 1.0) / (A * A * gap2);
  b.holds_stated = b.lhs < b.rhs_stated;
  b.marginal = std::abs(b.lhs - b.rhs_stated) <= 1e-9;
  b.rhs_implied = (A + 1.0) / (A * A * gap2);
  b.holds_implied = b.lhs < b.rhs_implied;
  return b;
}

std::vector<JumpDiagnostic> jump_identities(const EffortCurve& curve, double A, const Transfer& transfer,
                                            double gamma) {
  std::vector<JumpDiagnostic> out;
  const double threshold = A / (A + 1.0);
  for (const Discontinuity& jump : curve.discontinuities) {
    JumpDiagnostic d{};
    d.jump = jump;
    double ym = jump.w0 * jump.x_minus;
    double yp = jump.w0 * jump.x_plus;
    double tm = transfer(ym);
    double tp = transfer(yp);
    d.balance_lhs = (1.0 - jump.x_minus) * std::pow(tm, A);
    d.balance_rhs = (1.0 - jump.x_plus) * std::pow(tp, A);
    double scale = std::max(std::abs(d.balance_lhs), std::abs(d.balance_rhs));
    d.balance_residual = scale > 0.0 ? std::abs(d.balance_lhs - d.balance_rhs) / scale : 0.0;
    if (ym > 0.0) d.r_minus = gamma * tm / ym;
    if (yp > 0.0) d.r_plus = gamma * tp / yp;
    d.bound_applicable = d.r_minus && *d.r_minus > 1.0 && *d.r_minus < (A + 1.0) / A && jump.x_plus > threshold;
    d.bound_holds = jump.x_minus > threshold;
    if (d.r_minus && d.r_plus) {
      double measured = *d.r_minus / *d.r_plus;
      double predicted = jump.x_plus * std::pow(1.0 - jump.x_plus, 1.0 / A) /
                         (jump.x_minus * std::pow(1.0 - jump.x_minus, 1.0 / A));
      d.ratio_identity_residual = std::abs(measured - predicted) / std::abs(predicted);
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace dynasty
