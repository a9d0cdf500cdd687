#include "dynasty/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dynasty/model.hpp"
#include "dynasty/parallel.hpp"

namespace dynasty {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// d/dx of the log utility; absent when T is not differentiable at x w.
std::optional<double> utility_slope(double w, double x, double A, const Transfer& transfer) {
  double y = x * w;
  Derivatives d = transfer.derivatives(y);
  if (!d.differentiable) return std::nullopt;
  double t = transfer(y);
  if (!(t > 0.0)) return std::nullopt;
  return -1.0 / (1.0 - x) + A * w * d.first / t;
}

// Bisection on the sign of the utility slope. Resolves a smooth maximum to
// near machine precision, where comparing utilities cannot.
std::optional<double> polish_stationary(double w, double A, const Transfer& transfer, double lo, double hi) {
  auto slo = utility_slope(w, lo, A, transfer);
  auto shi = utility_slope(w, hi, A, transfer);
  if (!slo || !shi || !(*slo > 0.0) || !(*shi < 0.0)) return std::nullopt;
  for (int it = 0; it < 200; ++it) {
    double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    auto s = utility_slope(w, mid, A, transfer);
    if (!s) return std::nullopt;
    if (*s > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo + 0.5 * (hi - lo);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) {
    double lower = *std::max_element(v.begin(), mid);
    m = 0.5 * (m + lower);
  }
  return m;
}

// The peak at w whose investment is closest to y_ref.
std::optional<Peak> branch_peak(double w, double A, const Transfer& transfer, double y_ref,
                                const OptimizerOptions& options) {
  auto peaks = utility_peaks(w, A, transfer, options);
  if (peaks.empty()) return std::nullopt;
  const Peak* best = &peaks.front();
  for (const Peak& p : peaks)
    if (std::abs(p.x * w - y_ref) < std::abs(best->x * w - y_ref)) best = &p;
  return *best;
}

}  // namespace

Peak golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iter) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  Peak best{lo, f(lo)};
  auto consider = [&best](double x, double v) {
    if (v > best.utility) best = {x, v};
  };
  consider(hi, f(hi));
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  consider(c, fc);
  consider(d, fd);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      consider(d, fd);
    }
  }
  return best;
}

std::vector<Peak> utility_peaks(double w, double A, const Transfer& transfer, const OptimizerOptions& options) {
  if (!(w > 0.0)) throw std::domain_error("endowment must be > 0");
  if (!(A > 0.0)) throw std::domain_error("preference A must be > 0");
  if (options.grid_points < 2) throw std::invalid_argument("optimizer grid needs at least 2 points");
  const double xmax = options.x_cap;
  const std::size_t n_grid = options.grid_points;

  std::vector<double> xs;
  xs.reserve(n_grid + transfer.breakpoints().size());
  for (std::size_t i = 0; i < n_grid; ++i) xs.push_back(xmax * static_cast<double>(i) / static_cast<double>(n_grid - 1));
  // Efforts that land exactly on a knot or jump threshold. Nudge up so the
  // product x w is not rounded below the threshold.
  for (double b : transfer.breakpoints()) {
    if (!(b > 0.0)) continue;
    double x = b / w;
    if (x > xmax) continue;
    while (x * w < b && x < xmax) x = std::nextafter(x, 1.0);
    if (x <= xmax) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  auto f = [&](double x) { return log_utility(w, x, A, transfer); };
  std::vector<double> us(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) us[i] = f(xs[i]);

  std::vector<Peak> peaks;
  const std::size_t n = xs.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (us[i] == kNegInf) continue;
    double left = i > 0 ? us[i - 1] : kNegInf;
    double right = i + 1 < n ? us[i + 1] : kNegInf;
    if (!(us[i] >= left && us[i] >= right)) continue;

    double lo = i > 0 ? xs[i - 1] : xs[i];
    double hi = i + 1 < n ? xs[i + 1] : xs[i];
    Peak best{xs[i], us[i]};
    if (hi > lo) {
      Peak g = golden_section_max(f, lo, hi, options.x_tol);
      if (g.utility > best.utility) best = g;
      if (auto p = polish_stationary(w, A, transfer, lo, hi)) {
        double up = f(*p);
        if (up >= best.utility - 8.0 * kEps * std::max(1.0, std::abs(best.utility))) best = {*p, up};
      }
    }
    peaks.push_back(best);
  }

  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.x < b.x; });
  std::vector<Peak> merged;
  for (const Peak& p : peaks) {
    if (!merged.empty() && std::abs(p.x - merged.back().x) <= 1e-9) {
      if (p.utility > merged.back().utility) merged.back() = p;
      continue;
    }
    merged.push_back(p);
  }
  return merged;
}

OptimumCertificate optimal_effort(double w, double A, const Transfer& transfer, const OptimizerOptions& options) {
  auto peaks = utility_peaks(w, A, transfer, options);
  OptimumCertificate cert;
  if (peaks.empty()) {
    cert.degenerate = true;
    cert.x_star = 0.0;
    cert.utility = log_utility(w, 0.0, A, transfer);
    cert.argmax_set = {0.0};
    cert.c2 = 0.0;
    return cert;
  }
  double best = kNegInf;
  for (const Peak& p : peaks) best = std::max(best, p.utility);
  for (const Peak& p : peaks)
    if (p.utility >= best - options.tie_tol) cert.argmax_set.push_back(p.x);
  cert.x_star = cert.argmax_set.front();
  cert.utility = log_utility(w, cert.x_star, A, transfer);
  cert.c2 = w * (1.0 - cert.x_star) * std::pow(transfer(cert.x_star * w), A);
  if (cert.x_star > 0.0) cert.foc_residual = verify_foc(w, cert.x_star, A, transfer);
  return cert;
}

std::optional<double> verify_foc(double w, double x, double A, const Transfer& transfer) {
  if (!(w > 0.0) || !(x >= 0.0 && x < 1.0) || !(A > 0.0)) throw std::domain_error("verify_foc: invalid arguments");
  double y = w * x;
  Derivatives d = transfer.derivatives(y);
  if (!d.differentiable) return std::nullopt;
  double t = transfer(y);
  if (!(t > 0.0)) return std::nullopt;
  return d.first / t - 1.0 / (A * (w - y));
}

EffortCurve effort_curve(double A, const Transfer& transfer, double w_min, double w_max, std::size_t points,
                         const CurveOptions& options) {
  if (!(w_min > 0.0 && w_min < w_max)) throw std::domain_error("effort_curve needs 0 < w_min < w_max");
  if (points < 2) throw std::invalid_argument("effort_curve needs at least 2 points");
  if (!(A > 0.0)) throw std::domain_error("preference A must be > 0");

  EffortCurve curve;
  curve.w_grid.resize(points);
  curve.x_values.resize(points);
  for (std::size_t i = 0; i < points; ++i)
    curve.w_grid[i] = w_min + (w_max - w_min) * static_cast<double>(i) / static_cast<double>(points - 1);
  curve.w_grid.back() = w_max;
  const auto& opt = options.optimizer;
  parallel_for(points, [&](std::size_t i) {
    curve.x_values[i] = optimal_effort(curve.w_grid[i], A, transfer, opt).x_star;
  });

  std::vector<double> dx(points - 1);
  for (std::size_t i = 0; i + 1 < points; ++i) dx[i] = std::abs(curve.x_values[i + 1] - curve.x_values[i]);
  const double threshold = options.jump_factor * median(dx) + options.jump_floor;

  for (std::size_t i = 0; i + 1 < points; ++i) {
    if (!(dx[i] > threshold)) continue;
    double wl = curve.w_grid[i], wr = curve.w_grid[i + 1];
    double yl = wl * curve.x_values[i], yr = wr * curve.x_values[i + 1];
    const double initial_gap = std::abs(yr - yl);
    for (int it = 0; it < options.bisection_iterations; ++it) {
      double wm = 0.5 * (wl + wr);
      double ym = wm * optimal_effort(wm, A, transfer, opt).x_star;
      if (std::abs(ym - yl) <= std::abs(ym - yr)) {
        wl = wm;
        yl = ym;
      } else {
        wr = wm;
        yr = ym;
      }
    }
    // Continuous investment closes the gap under bisection; a jump keeps it.
    if (!(std::abs(yr - yl) > std::max(0.1 * initial_gap, 1e-9))) continue;

    // Polish w0 to where the two branches give equal utility.
    auto delta = [&](double w) -> std::optional<std::pair<Peak, Peak>> {
      auto pl = branch_peak(w, A, transfer, yl, opt);
      auto pr = branch_peak(w, A, transfer, yr, opt);
      if (!pl || !pr || std::abs(pl->x - pr->x) <= 1e-9) return std::nullopt;
      return std::make_pair(*pl, *pr);
    };
    double w0 = 0.5 * (wl + wr);
    std::optional<std::pair<Peak, Peak>> at_w0;
    auto bl = delta(wl);
    auto br = delta(wr);
    if (bl && br) {
      double fl = bl->second.utility - bl->first.utility;
      double fr = br->second.utility - br->first.utility;
      if (fl <= 0.0 && fr >= 0.0) {
        double a = wl, b = wr;
        int side = 0;
        for (int it = 0; it < 60; ++it) {
          double wm = (fr - fl) > 0.0 ? a - fl * (b - a) / (fr - fl) : 0.5 * (a + b);
          if (!(wm > a && wm < b)) wm = 0.5 * (a + b);
          auto bm = delta(wm);
          if (!bm) break;
          double fm = bm->second.utility - bm->first.utility;
          w0 = wm;
          at_w0 = bm;
          if (fm == 0.0 || (b - a) <= 4.0 * kEps * b) break;
          if (fm < 0.0) {
            a = wm;
            fl = fm;
            if (side == -1) fr *= 0.5;
            side = -1;
          } else {
            b = wm;
            fr = fm;
            if (side == 1) fl *= 0.5;
            side = 1;
          }
          if (std::abs(fm) <= 4.0 * kEps * std::max(1.0, std::abs(bm->first.utility))) break;
        }
      }
    }
    if (!at_w0) at_w0 = delta(w0);
    Discontinuity jump{w0, 0.0, 0.0};
    if (at_w0) {
      jump.x_minus = at_w0->first.x;
      jump.x_plus = at_w0->second.x;
    } else {
      jump.x_minus = optimal_effort(wl, A, transfer, opt).x_star;
      jump.x_plus = optimal_effort(wr, A, transfer, opt).x_star;
    }
    if (std::abs(jump.x_plus - jump.x_minus) > 1e-9) curve.discontinuities.push_back(jump);
  }
  return curve;
}

}  // namespace dynasty
