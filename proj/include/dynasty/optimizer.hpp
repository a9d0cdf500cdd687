#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dynasty/transfer.hpp"

namespace dynasty {

struct OptimizerOptions {
  std::size_t grid_points = 4096;
  double x_cap = 1.0 - 1e-12;
  double x_tol = 1e-12;
  double tie_tol = 1e-9;
};

// A local maximum of the log utility over the candidate set, after refinement.
struct Peak {
  double x;
  double utility;
};

struct OptimumCertificate {
  double x_star = 0.0;
  double utility = 0.0;  // may be -inf when degenerate
  double c2 = 0.0;       // w (1 - x*) T(x* w)^A
  std::vector<double> argmax_set;
  std::optional<double> foc_residual;
  bool degenerate = false;
};

// Maximizer of f on [lo, hi] by golden-section search; returns the best
// point evaluated.
Peak golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol,
                        int max_iter = 300);

// All refined local maxima of x -> log_utility(w, x, A, T) on [0, x_cap],
// in ascending x. Empty when the utility is -inf everywhere.
std::vector<Peak> utility_peaks(double w, double A, const Transfer& transfer,
                                const OptimizerOptions& options = {});

OptimumCertificate optimal_effort(double w, double A, const Transfer& transfer,
                                  const OptimizerOptions& options = {});

// T'(wx)/T(wx) - 1/(A (w - wx)); absent where T is not differentiable at wx.
std::optional<double> verify_foc(double w, double x, double A, const Transfer& transfer);

struct Discontinuity {
  double w0;
  double x_minus;
  double x_plus;
};

struct CurveOptions {
  double jump_factor = 10.0;  // times the median |dx| between grid points
  double jump_floor = 1e-3;
  int bisection_iterations = 20;
  OptimizerOptions optimizer{};
};

struct EffortCurve {
  std::vector<double> w_grid;
  std::vector<double> x_values;
  std::vector<Discontinuity> discontinuities;
};

// g_A(w) on a uniform grid of `points` endowments in [w_min, w_max], with
// jumps located by bisection and then polished so both branches tie.
EffortCurve effort_curve(double A, const Transfer& transfer, double w_min, double w_max, std::size_t points,
                         const CurveOptions& options = {});

}  // namespace dynasty
