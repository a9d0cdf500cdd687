#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "dynasty/dynamics.hpp"
#include "dynasty/optimizer.hpp"

namespace dynasty {

// Dense row-major square matrix; jacobian(k, i) = d w'_k / d w_i.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct Sensitivity {
  double dg_dw;
  double d_wg_dw;
};

// Implicit-function derivatives of the optimal effort at an interior,
// differentiable optimum; absent otherwise.
std::optional<Sensitivity> effort_sensitivity(double w, double A, const Transfer& transfer,
                                              const OptimizerOptions& options = {});

struct StabilityOptions {
  double fd_step = 1e-6;
  OptimizerOptions optimizer{};
};

struct StabilityReport {
  Matrix jacobian;
  std::vector<std::complex<double>> eigenvalues;
  double neutral_eigenvalue_error = 0.0;  // |eigenvalue closest to 0|
  bool stable = false;                      // all other |lambda| <= 1 + 1e-8
  bool finite_difference = false;           // analytic form unavailable
  std::optional<double> gershgorin_bound;   // egalitarian states only
  std::optional<bool> gershgorin_stable;    // bound < 1
  double max_column_sum = 0.0;
};

StabilityReport linear_stability(const EquilibriumReport& eq, const Transfer& transfer,
                                 const StabilityOptions& options = {});

// Analytic Jacobian of the normalization map at an arbitrary state; absent
// when some agent's optimum is at a boundary or non-differentiable point.
std::optional<Matrix> analytic_jacobian(const GenerationState& state, const Transfer& transfer,
                                        const OptimizerOptions& options = {});

// Central differences of step_map, one column per perturbed endowment.
Matrix finite_difference_jacobian(const GenerationState& state, const Transfer& transfer, double step = 1e-6,
                                  const OptimizerOptions& options = {});

std::vector<std::complex<double>> eigenvalues(const Matrix& m);

struct CurvatureBound {
  double lhs;          // T''/T at the optimal investment
  double rhs_stated;   // (A - 1) / (A^2 (w - wg)^2)
  bool holds_stated;   // lhs < rhs_stated
  bool marginal;       // |lhs - rhs_stated| <= 1e-9
  double rhs_implied;  // (A + 1) / (A^2 (w - wg)^2), from d(wg)/dw > 0
  bool holds_implied;
};

std::optional<CurvatureBound> second_derivative_bound(double w, double A, const Transfer& transfer,
                                                      const OptimizerOptions& options = {});

struct JumpDiagnostic {
  Discontinuity jump;
  double balance_lhs;       // (1 - x-) T^A(w0 x-)
  double balance_rhs;       // (1 - x+) T^A(w0 x+)
  double balance_residual;  // relative
  bool bound_applicable;    // 1 < r- < (A+1)/A and x+ > A/(A+1)
  bool bound_holds;         // x- > A/(A+1)
  std::optional<double> r_minus;
  std::optional<double> r_plus;
  std::optional<double> ratio_identity_residual;  // relative; absent if x- == 0
};

std::vector<JumpDiagnostic> jump_identities(const EffortCurve& curve, double A, const Transfer& transfer,
                                            double gamma);

}  // namespace dynasty
