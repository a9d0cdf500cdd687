#include "dynasty/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dynasty {

double alpha_to_A(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
  return alpha / (1.0 - alpha);
}

double log_utility(double w, double x, double A, const Transfer& transfer) {
  if (!(w > 0.0)) throw std::domain_error("endowment must be > 0");
  if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("effort must lie in [0, 1)");
  if (!(A > 0.0)) throw std::domain_error("preference A must be > 0");
  double t = transfer(x * w);
  if (!(t > 0.0)) return kNegInf;
  return std::log1p(-x) + A * std::log(t);
}

Agent::Agent(double w, double alpha) : w_(w), alpha_(alpha), A_(0.0) {
  if (!(w > 0.0) || !std::isfinite(w)) throw std::domain_error("agent endowment must be finite and > 0");
  A_ = alpha_to_A(alpha);
}

GenerationState::GenerationState(std::vector<Agent> agents, std::size_t generation)
    : agents_(std::move(agents)), generation_(generation) {
  if (agents_.empty()) throw std::invalid_argument("population must have at least one agent");
  double total = 0.0;
  for (const Agent& a : agents_) total += a.w();
  if (std::abs(total - W()) > kConservationTol * W())
    throw std::invalid_argument("endowments sum to " + std::to_string(total) + ", expected " +
                                std::to_string(agents_.size()));
}

GenerationState GenerationState::normalized(std::span<const double> w, std::span<const double> alpha,
                                            std::size_t generation) {
  if (w.size() != alpha.size()) throw std::invalid_argument("endowment and alpha lists differ in length");
  if (w.empty()) throw std::invalid_argument("population must have at least one agent");
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw std::domain_error("endowments must be positive");
  double n = static_cast<double>(w.size());
  std::vector<Agent> agents;
  agents.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) agents.emplace_back(w[i] * n / total, alpha[i]);
  return GenerationState(std::move(agents), generation);
}

GenerationState GenerationState::egalitarian(std::span<const double> alpha) {
  std::vector<Agent> agents;
  agents.reserve(alpha.size());
  for (double a : alpha) agents.emplace_back(1.0, a);
  return GenerationState(std::move(agents));
}

std::vector<double> GenerationState::endowments() const {
  std::vector<double> out;
  out.reserve(agents_.size());
  for (const Agent& a : agents_) out.push_back(a.w());
  return out;
}

std::vector<double> GenerationState::alphas() const {
  std::vector<double> out;
  out.reserve(agents_.size());
  for (const Agent& a : agents_) out.push_back(a.alpha());
  return out;
}

std::vector<double> GenerationState::preferences() const {
  std::vector<double> out;
  out.reserve(agents_.size());
  for (const Agent& a : agents_) out.push_back(a.A());
  return out;
}

}  // namespace dynasty
