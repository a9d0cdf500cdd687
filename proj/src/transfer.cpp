#include "dynasty/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynasty {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_knots(const std::vector<Knot>& knots, const char* what, bool require_monotone_values) {
  if (knots.empty()) throw std::invalid_argument(std::string(what) + ": needs at least one point");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const Knot& k = knots[i];
    if (!std::isfinite(k.y) || !std::isfinite(k.t))
      throw std::invalid_argument(std::string(what) + ": non-finite point");
    if (k.y < 0.0) throw std::invalid_argument(std::string(what) + ": abscissas must be >= 0");
    if (k.t < 0.0) throw std::invalid_argument(std::string(what) + ": values must be >= 0");
    if (i > 0) {
      if (!(k.y > knots[i - 1].y))
        throw std::invalid_argument(std::string(what) + ": abscissas must be strictly increasing");
      if (require_monotone_values && k.t < knots[i - 1].t)
        throw std::invalid_argument(std::string(what) + ": values must be non-decreasing");
    }
  }
}

double interpolate(const std::vector<Knot>& knots, double y) {
  if (y <= knots.front().y) return knots.front().t;
  if (y >= knots.back().y) return knots.back().t;
  auto hi = std::upper_bound(knots.begin(), knots.end(), y,
                             [](double v, const Knot& k) { return v < k.y; });
  auto lo = hi - 1;
  double s = (y - lo->y) / (hi->y - lo->y);
  return lo->t + s * (hi->t - lo->t);
}

}  // namespace

Transfer::Transfer(Form form) : form_(std::move(form)) {
  std::visit(overloaded{
                 [](const Linear& f) {
                   if (!(f.scale > 0.0) || !std::isfinite(f.scale))
                     throw std::invalid_argument("linear: scale must be > 0");
                 },
                 [](const Power& f) {
                   if (!(f.k > 0.0) || !std::isfinite(f.k)) throw std::invalid_argument("power: k must be > 0");
                   if (!(f.scale > 0.0) || !std::isfinite(f.scale))
                     throw std::invalid_argument("power: scale must be > 0");
                 },
                 [this](const Step& f) {
                   check_knots(f.levels, "step", true);
                   for (const Knot& k : f.levels) breakpoints_.push_back(k.y);
                 },
                 [](const TanhGrowth& f) {
                   if (!(f.a >= 0.0) || !std::isfinite(f.a)) throw std::invalid_argument("tanh_growth: a must be >= 0");
                 },
                 [this](const PiecewiseLinear& f) {
                   check_knots(f.knots, "piecewise_linear", true);
                   for (const Knot& k : f.knots) breakpoints_.push_back(k.y);
                 },
                 [this](const Tabulated& f) {
                   check_knots(f.samples, "tabulated", true);
                   for (const Knot& k : f.samples) breakpoints_.push_back(k.y);
                 },
             },
             form_);

  // Sampled monotonicity check over the region where the shape lives.
  double reach = 4.0;
  if (!breakpoints_.empty()) reach = std::max(reach, 2.0 * breakpoints_.back() + 1.0);
  double prev = eval(0.0);
  constexpr int samples = 512;
  for (int i = 1; i <= samples; ++i) {
    double v = eval(reach * i / samples);
    if (!(v >= 0.0)) throw std::invalid_argument(kind() + ": evaluates negative");
    if (v < prev * (1.0 - 1e-14)) throw std::invalid_argument(kind() + ": not non-decreasing");
    prev = v;
  }
}

std::string Transfer::kind() const {
  return std::visit(overloaded{
                        [](const Linear&) { return std::string("linear"); },
                        [](const Power&) { return std::string("power"); },
                        [](const Step&) { return std::string("step"); },
                        [](const TanhGrowth&) { return std::string("tanh_growth"); },
                        [](const PiecewiseLinear&) { return std::string("piecewise_linear"); },
                        [](const Tabulated&) { return std::string("tabulated"); },
                    },
                    form_);
}

bool Transfer::piecewise() const {
  return std::holds_alternative<Step>(form_) || std::holds_alternative<PiecewiseLinear>(form_) ||
         std::holds_alternative<Tabulated>(form_);
}

double Transfer::operator()(double y) const {
  if (!(y >= 0.0)) throw std::domain_error("transfer evaluated at negative investment");
  return std::visit(overloaded{
                        [y](const Linear& f) { return f.scale * y; },
                        [y](const Power& f) { return f.scale * std::pow(y, f.k); },
                        [y](const Step& f) {
                          auto it = std::upper_bound(f.levels.begin(), f.levels.end(), y,
                                                     [](double v, const Knot& k) { return v < k.y; });
                          if (it == f.levels.begin()) return 0.0;
                          return (it - 1)->t;
                        },
                        [y](const TanhGrowth& f) { return y * (1.0 + f.a * std::tanh(y)); },
                        [y](const PiecewiseLinear& f) { return interpolate(f.knots, y); },
                        [y](const Tabulated& f) { return interpolate(f.samples, y); },
                    },
                    form_);
}

Derivatives Transfer::derivatives(double y) const {
  if (!(y >= 0.0)) throw std::domain_error("transfer derivative at negative investment");
  if (const auto* f = std::get_if<Linear>(&form_)) return {f->scale, 0.0, true};
  if (const auto* f = std::get_if<Power>(&form_)) {
    if (y == 0.0) {
      // y^k is smooth at the origin only for k == 1 or k >= 2.
      if (f->k == 1.0) return {f->scale, 0.0, true};
      if (f->k == 2.0) return {0.0, 2.0 * f->scale, true};
      if (f->k > 2.0) return {0.0, 0.0, true};
      return {0.0, 0.0, false};
    }
    double d1 = f->scale * f->k * std::pow(y, f->k - 1.0);
    double d2 = f->scale * f->k * (f->k - 1.0) * std::pow(y, f->k - 2.0);
    return {d1, d2, true};
  }
  if (const auto* f = std::get_if<TanhGrowth>(&form_)) {
    double th = std::tanh(y);
    double sech2 = 1.0 - th * th;
    double d1 = 1.0 + f->a * th + f->a * y * sech2;
    double d2 = 2.0 * f->a * sech2 - 2.0 * f->a * y * sech2 * th;
    return {d1, d2, true};
  }

  const double h = std::max(1e-6, 1e-6 * y);
  if (y < h) return {0.0, 0.0, false};
  auto near = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), y - h);
  if (near != breakpoints_.end() && *near <= y + h) return {0.0, 0.0, false};

  double d1 = (eval(y + h) - eval(y - h)) / (2.0 * h);
  // Pieces are affine between knots, so the curvature is exactly zero there.
  return {d1, 0.0, true};
}

}  // namespace dynasty
