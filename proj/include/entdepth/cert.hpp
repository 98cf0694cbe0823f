#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entdepth/criteria.hpp"

namespace entdepth {

struct DataPoint {
  double s_norm = 0.0;
  double v_norm = 0.0;
  std::optional<double> sigma_v;
  std::string label;
};

struct DepthVerdict {
  int certified_depth = 1;  // 1 = no entanglement certified
  // curve(s) - (v + k sigma) at the deepest violated curve, or at the
  // shallowest curve when nothing is violated (then <= 0).
  double margin = 0.0;
  bool conservative = false;  // sigma inflation was applied
};

double interpolate(const CriterionCurve& curve, double s);

// Lower bound on a convex curve known only at its samples: between two
// samples the curve cannot dip below the extensions of the neighbouring
// chords. Never above interpolate(); certification tests against this.
double lower_envelope(const CriterionCurve& curve, double s);

// Throws unless the curves share one eta fingerprint (ConsistencyError) and
// have strictly increasing depths starting at 1 (InvalidInput).
void check_curve_family(std::span<const CriterionCurve> curves);

// A point violates a curve only when strictly below its lower envelope;
// certified depth is the deepest violated curve's depth plus one.
DepthVerdict certify(const DataPoint& point, std::span<const CriterionCurve> curves,
                     double k_sigma = 1.0);

// Rows "s_norm,v_norm[,sigma_v][,label]"; an optional header row is skipped.
std::vector<DataPoint> data_points_from_csv(std::string_view text);

std::string verdicts_csv(std::span<const DataPoint> points, std::span<const DepthVerdict> verdicts);

}  // namespace entdepth
