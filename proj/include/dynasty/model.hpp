#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dynasty/transfer.hpp"

namespace dynasty {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Odds form of the Cobb-Douglas weight: A = alpha / (1 - alpha).
double alpha_to_A(double alpha);

// ln(1 - x) + A ln T(x w), the mean-field log utility of investing the
// fraction x of endowment w. Returns kNegInf when T(x w) == 0.
double log_utility(double w, double x, double A, const Transfer& transfer);

class Agent {
 public:
  Agent(double w, double alpha);

  double w() const { return w_; }
  double alpha() const { return alpha_; }
  double A() const { return A_; }

 private:
  double w_;
  double alpha_;
  double A_;
};

// One generation of a fixed-size population. The total endowment W always
// equals the head count n.
class GenerationState {
 public:
  static constexpr double kConservationTol = 1e-9;

  explicit GenerationState(std::vector<Agent> agents, std::size_t generation = 0);

  // Rescales w so that it sums to n before building the state.
  static GenerationState normalized(std::span<const double> w, std::span<const double> alpha,
                                    std::size_t generation = 0);
  static GenerationState egalitarian(std::span<const double> alpha);

  const std::vector<Agent>& agents() const { return agents_; }
  std::size_t size() const { return agents_.size(); }
  std::size_t generation() const { return generation_; }
  double W() const { return static_cast<double>(agents_.size()); }

  std::vector<double> endowments() const;
  std::vector<double> alphas() const;
  std::vector<double> preferences() const;  // A_i

 private:
  std::vector<Agent> agents_;
  std::size_t generation_;
};

}  // namespace dynasty
