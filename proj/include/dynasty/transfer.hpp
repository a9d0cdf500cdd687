#pragma once

#include <string>
#include <variant>
#include <vector>

namespace dynasty {

// A point (y, T(y)) of a piecewise description of the competitiveness function.
struct Knot {
  double y;
  double t;
};

struct Linear {
  double scale = 1.0;
};

struct Power {
  double k = 1.0;
  double scale = 1.0;
};

// Right-continuous staircase: T(y) = value of the last level whose
// threshold is <= y, and 0 below the first threshold.
struct Step {
  std::vector<Knot> levels;
};

// T(y) = y (1 + a tanh y)
struct TanhGrowth {
  double a = 0.0;
};

// Linear interpolation between knots, held constant outside them.
struct PiecewiseLinear {
  std::vector<Knot> knots;
};

// Same evaluation rule as PiecewiseLinear; used for sampled/inferred curves.
struct Tabulated {
  std::vector<Knot> samples;
};

struct Derivatives {
  double first = 0.0;
  double second = 0.0;
  bool differentiable = false;
};

// The competitiveness function T. Immutable once constructed; construction
// rejects parameters that would make T negative or decreasing.
class Transfer {
 public:
  using Form = std::variant<Linear, Power, Step, TanhGrowth, PiecewiseLinear, Tabulated>;

  Transfer(Form form);  // NOLINT(google-explicit-constructor)

  const Form& form() const { return form_; }
  std::string kind() const;

  // T(y) for y >= 0; throws std::domain_error on negative y.
  double operator()(double y) const;
  double eval(double y) const { return (*this)(y); }

  // T'(y) and T''(y). Closed form for the analytic kinds. Piecewise kinds
  // use a central difference for T' (step max(1e-6, 1e-6 y)) and report
  // differentiable=false within one step of a knot.
  Derivatives derivatives(double y) const;

  // Abscissas where T has a knot or a jump, ascending.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  bool piecewise() const;

 private:
  Form form_;
  std::vector<double> breakpoints_;
};

}  // namespace dynasty
