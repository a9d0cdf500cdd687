#pragma once

#include <vector>

#include "dynasty/optimizer.hpp"
#include "dynasty/transfer.hpp"

namespace dynasty {

struct EffortRow {
  double w;
  double g;
};

struct EffortTable {
  std::vector<EffortRow> rows;  // ascending in w
  double A = 1.0;
  std::vector<Discontinuity> declared_jumps;
};

EffortTable table_from_curve(const EffortCurve& curve, double A);

struct TableDiagnostics {
  bool valid = true;
  std::vector<std::size_t> decreasing_investment;  // row i with w_{i+1} g_{i+1} < w_i g_i
  std::vector<std::size_t> out_of_range;            // g outside [0, 1)
  std::vector<std::size_t> unordered;               // w not strictly ascending
  std::vector<std::size_t> steep;                   // large undeclared jumps in g
  double lipschitz_estimate = 0.0;                  // max |dg'/dw| from second differences
};

TableDiagnostics validate_effort_table(const EffortTable& table, double slack = 1e-9);

struct InferredTransfer {
  Transfer transfer;
  Knot anchor;
  std::vector<Knot> pinned;  // samples fixed by the data (excludes jump fills)
};

// Integrates d/dw ln T(w g) = (g + w g') / (A (w - w g)) over each smooth
// segment and crosses declared jumps with the equal-utility condition.
InferredTransfer infer_transfer(const EffortTable& table, Knot anchor);

// Max relative deviation between `transfer` and its reconstruction from its
// own effort curve, after the best common rescaling.
double round_trip_error(const Transfer& transfer, double A, double w_min, double w_max, std::size_t points,
                        const CurveOptions& options = {});

}  // namespace dynasty
