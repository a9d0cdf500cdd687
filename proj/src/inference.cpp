#include "dynasty/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dynasty {

namespace {

struct Segment {
  std::size_t begin;
  std::size_t end;  // exclusive
};

std::vector<Discontinuity> sorted_jumps(const EffortTable& table) {
  auto jumps = table.declared_jumps;
  std::sort(jumps.begin(), jumps.end(), [](const auto& a, const auto& b) { return a.w0 < b.w0; });
  return jumps;
}

// Rows with w < w0 belong to the segment left of a jump at w0.
std::vector<Segment> split_segments(const EffortTable& table, const std::vector<Discontinuity>& jumps) {
  std::vector<Segment> segs;
  std::size_t begin = 0;
  for (const Discontinuity& j : jumps) {
    std::size_t end = begin;
    while (end < table.rows.size() && table.rows[end].w < j.w0) ++end;
    segs.push_back({begin, end});
    begin = end;
  }
  segs.push_back({begin, table.rows.size()});
  return segs;
}

// dg/dw on one segment: three-point centered stencil inside, three-point
// one-sided stencils at the ends (two-point when the segment is short).
std::vector<double> segment_slopes(const EffortTable& table, Segment s) {
  const auto& r = table.rows;
  const std::size_t m = s.end - s.begin;
  std::vector<double> d(m, 0.0);
  if (m < 2) return d;
  if (m == 2) {
    double v = (r[s.begin + 1].g - r[s.begin].g) / (r[s.begin + 1].w - r[s.begin].w);
    d[0] = d[1] = v;
    return d;
  }
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const auto& a = r[s.begin + k - 1];
    const auto& b = r[s.begin + k];
    const auto& c = r[s.begin + k + 1];
    double h1 = b.w - a.w, h2 = c.w - b.w;
    d[k] = -h2 / (h1 * (h1 + h2)) * a.g + (h2 - h1) / (h1 * h2) * b.g + h1 / (h2 * (h1 + h2)) * c.g;
  }
  {
    const auto& a = r[s.begin];
    const auto& b = r[s.begin + 1];
    const auto& c = r[s.begin + 2];
    double h1 = b.w - a.w, h2 = c.w - b.w;
    d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * a.g + (h1 + h2) / (h1 * h2) * b.g - h1 / (h2 * (h1 + h2)) * c.g;
  }
  {
    const auto& a = r[s.end - 3];
    const auto& b = r[s.end - 2];
    const auto& c = r[s.end - 1];
    double h1 = b.w - a.w, h2 = c.w - b.w;
    d[m - 1] = h2 / (h1 * (h1 + h2)) * a.g - (h1 + h2) / (h1 * h2) * b.g + (2.0 * h2 + h1) / (h2 * (h1 + h2)) * c.g;
  }
  return d;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

// d/dw ln T(w g(w)); clipped at zero since investment cannot fall.
double log_slope(double w, double g, double dg, double A) {
  return std::max(0.0, g + w * dg) / (A * w * (1.0 - g));
}

double interpolate(const std::vector<Knot>& knots, double y) {
  if (y <= knots.front().y) return knots.front().t;
  if (y >= knots.back().y) return knots.back().t;
  auto hi = std::upper_bound(knots.begin(), knots.end(), y, [](double v, const Knot& k) { return v < k.y; });
  auto lo = hi - 1;
  return lo->t + (y - lo->y) / (hi->y - lo->y) * (hi->t - lo->t);
}

}  // namespace

EffortTable table_from_curve(const EffortCurve& curve, double A) {
  EffortTable table;
  table.A = A;
  for (std::size_t i = 0; i < curve.w_grid.size(); ++i) table.rows.push_back({curve.w_grid[i], curve.x_values[i]});
  table.declared_jumps = curve.discontinuities;
  return table;
}

TableDiagnostics validate_effort_table(const EffortTable& table, double slack) {
  TableDiagnostics diag;
  const auto& rows = table.rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].g >= 0.0 && rows[i].g < 1.0) || !(rows[i].w > 0.0)) diag.out_of_range.push_back(i);
    if (i + 1 < rows.size()) {
      if (!(rows[i + 1].w > rows[i].w)) diag.unordered.push_back(i);
      double y0 = rows[i].w * rows[i].g;
      double y1 = rows[i + 1].w * rows[i + 1].g;
      if (y1 < y0 - slack * std::max(1.0, std::abs(y0))) diag.decreasing_investment.push_back(i);
    }
  }
  for (const Discontinuity& j : table.declared_jumps) {
    bool bad = !(j.x_minus >= 0.0 && j.x_minus < 1.0 && j.x_plus >= 0.0 && j.x_plus < 1.0) ||
               j.x_plus < j.x_minus - slack || !(j.w0 > 0.0);
    if (bad) diag.out_of_range.push_back(rows.size());
  }

  if (diag.unordered.empty() && !rows.empty()) {
    auto jumps = sorted_jumps(table);
    for (Segment s : split_segments(table, jumps)) {
      std::vector<double> dg;
      for (std::size_t i = s.begin; i + 1 < s.end; ++i) dg.push_back(std::abs(rows[i + 1].g - rows[i].g));
      double thr = 10.0 * median(dg) + 1e-3;
      for (std::size_t k = 0; k < dg.size(); ++k)
        if (dg[k] > thr) diag.steep.push_back(s.begin + k);
      for (std::size_t i = s.begin + 1; i + 1 < s.end; ++i) {
        double left = (rows[i].g - rows[i - 1].g) / (rows[i].w - rows[i - 1].w);
        double right = (rows[i + 1].g - rows[i].g) / (rows[i + 1].w - rows[i].w);
        double span = 0.5 * (rows[i + 1].w - rows[i - 1].w);
        diag.lipschitz_estimate = std::max(diag.lipschitz_estimate, std::abs(right - left) / span);
      }
    }
  }
  diag.valid = diag.decreasing_investment.empty() && diag.out_of_range.empty() && diag.unordered.empty();
  return diag;
}

InferredTransfer infer_transfer(const EffortTable& table, Knot anchor) {
  if (table.rows.empty()) throw std::invalid_argument("effort table is empty");
  if (!(table.A > 0.0)) throw std::domain_error("preference A must be > 0");
  TableDiagnostics diag = validate_effort_table(table);
  if (!diag.valid) {
    if (!diag.decreasing_investment.empty())
      throw std::invalid_argument("effort table rejected: investment w g decreases after row " +
                                  std::to_string(diag.decreasing_investment.front()));
    throw std::invalid_argument("effort table rejected: rows out of range or not ascending");
  }
  if (!(anchor.t > 0.0)) throw std::domain_error("anchor value must be > 0");

  const double A = table.A;
  const auto& rows = table.rows;
  auto jumps = sorted_jumps(table);
  auto segs = split_segments(table, jumps);
  for (Segment s : segs)
    if (s.begin == s.end) throw std::invalid_argument("declared jump is not bracketed by table rows");

  struct Sample {
    double y;
    double log_t;
    bool pinned;
  };
  std::vector<Sample> samples;
  double log_t = 0.0;
  for (std::size_t si = 0; si < segs.size(); ++si) {
    const Segment s = segs[si];
    auto dg = segment_slopes(table, s);
    for (std::size_t k = 0; k < s.end - s.begin; ++k) {
      const EffortRow& row = rows[s.begin + k];
      double f = log_slope(row.w, row.g, dg[k], A);
      if (k > 0) {
        const EffortRow& prev = rows[s.begin + k - 1];
        log_t += 0.5 * (row.w - prev.w) * (log_slope(prev.w, prev.g, dg[k - 1], A) + f);
      } else if (si > 0) {
        const Discontinuity& j = jumps[si - 1];
        log_t += 0.5 * (row.w - j.w0) * (log_slope(j.w0, j.x_plus, dg[0], A) + f);
      }
      samples.push_back({row.w * row.g, log_t, true});
    }
    if (si + 1 == segs.size()) break;

    // Carry the left branch up to w0, then jump with
    // (1 - x-) T^A(w0 x-) = (1 - x+) T^A(w0 x+).
    const Discontinuity& j = jumps[si];
    const EffortRow& last = rows[s.end - 1];
    std::size_t m = s.end - s.begin;
    log_t += 0.5 * (j.w0 - last.w) *
             (log_slope(last.w, last.g, dg[m - 1], A) + log_slope(j.w0, j.x_minus, dg[m - 1], A));
    double y_minus = j.w0 * j.x_minus;
    double y_plus = j.w0 * j.x_plus;
    samples.push_back({y_minus, log_t, true});
    double log_minus = log_t;
    log_t += std::log((1.0 - j.x_minus) / (1.0 - j.x_plus)) / A;
    // Hold the left value across the gap; the steep ramp into y+ never
    // offers more utility than the realized choices.
    double delta = 1e-9 * std::max(1.0, y_plus);
    if (y_plus - delta > y_minus) samples.push_back({y_plus - delta, log_minus, false});
    samples.push_back({y_plus, log_t, true});
  }

  std::vector<Sample> merged;
  for (const Sample& s : samples) {
    if (!merged.empty() && s.y <= merged.back().y + 1e-12 * std::max(1.0, std::abs(s.y))) continue;
    Sample v = s;
    if (!merged.empty()) v.log_t = std::max(v.log_t, merged.back().log_t);
    merged.push_back(v);
  }

  std::vector<Knot> raw;
  raw.reserve(merged.size());
  for (const Sample& s : merged) raw.push_back({s.y, std::exp(s.log_t)});
  if (anchor.y < raw.front().y || anchor.y > raw.back().y)
    throw std::domain_error("anchor abscissa lies outside the covered investment range");
  const double scale = anchor.t / interpolate(raw, anchor.y);

  std::vector<Knot> knots;
  std::vector<Knot> pinned;
  knots.reserve(raw.size());
  std::vector<bool> is_pinned;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    knots.push_back({raw[i].y, raw[i].t * scale});
    is_pinned.push_back(merged[i].pinned);
  }
  // Pass through the anchor exactly; neighbours move by at most rounding.
  auto at = std::lower_bound(knots.begin(), knots.end(), anchor.y, [](const Knot& k, double y) { return k.y < y; });
  std::size_t ai = static_cast<std::size_t>(at - knots.begin());
  if (at != knots.end() && at->y == anchor.y) {
    at->t = anchor.t;
  } else {
    knots.insert(at, anchor);
    is_pinned.insert(is_pinned.begin() + static_cast<std::ptrdiff_t>(ai), false);
  }
  for (std::size_t i = ai; i-- > 0;) knots[i].t = std::min(knots[i].t, knots[i + 1].t);
  for (std::size_t i = ai + 1; i < knots.size(); ++i) knots[i].t = std::max(knots[i].t, knots[i - 1].t);
  for (std::size_t i = 0; i < knots.size(); ++i)
    if (is_pinned[i]) pinned.push_back(knots[i]);
  return InferredTransfer{Transfer(Tabulated{std::move(knots)}), anchor, std::move(pinned)};
}

double round_trip_error(const Transfer& transfer, double A, double w_min, double w_max, std::size_t points,
                        const CurveOptions& options) {
  EffortCurve curve = effort_curve(A, transfer, w_min, w_max, points, options);
  EffortTable table = table_from_curve(curve, A);
  Knot anchor{0.0, 0.0};
  for (std::size_t off = 0; off < table.rows.size(); ++off) {
    const EffortRow& r = table.rows[(table.rows.size() / 2 + off) % table.rows.size()];
    double y = r.w * r.g;
    if (transfer(y) > 0.0) {
      anchor = {y, transfer(y)};
      break;
    }
  }
  if (!(anchor.t > 0.0)) throw std::domain_error("transfer vanishes on every covered investment");
  InferredTransfer inferred = infer_transfer(table, anchor);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const Knot& k : inferred.pinned) {
    double truth = transfer(k.y);
    if (!(truth > 0.0)) continue;
    double ratio = k.t / truth;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  if (!(hi > 0.0)) throw std::domain_error("no comparable samples");
  return (hi - lo) / (hi + lo);
}

}  // namespace dynasty
