#include "entdepth/curve.hpp"

#include <algorithm>
#include <cmath>

#include "entdepth/csv.hpp"
#include "entdepth/error.hpp"

namespace entdepth {

double interpolate_linear(std::span<const CurvePoint> points, double s) {
  if (points.empty()) throw InvalidInput("interpolate: empty curve");
  if (!(s >= points.front().s && s <= points.back().s)) {
    throw InvalidInput("interpolate: s = " + csv::format17(s) + " outside curve range");
  }
  auto upper = std::upper_bound(points.begin(), points.end(), s,
                                [](double value, const CurvePoint& p) { return value < p.s; });
  if (upper == points.end()) return points.back().v;
  auto lower = std::prev(upper);
  if (lower->s == s) return lower->v;
  const double t = (s - lower->s) / (upper->s - lower->s);
  return lower->v + t * (upper->v - lower->v);
}

std::vector<CurvePoint> make_monotone(std::vector<CurvePoint> points) {
  std::stable_sort(points.begin(), points.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.s < b.s; });
  std::vector<CurvePoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (!out.empty() && out.back().s == p.s) {
      out.back().v = std::min(out.back().v, p.v);
      continue;
    }
    out.push_back(p);
  }
  for (std::size_t i = 1; i < out.size(); ++i) out[i].v = std::max(out[i].v, out[i - 1].v);
  return out;
}

double max_convexity_violation(std::span<const CurvePoint> points) {
  double worst = -INFINITY;
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const auto& a = points[i - 1];
    const auto& b = points[i];
    const auto& c = points[i + 1];
    if (c.s <= a.s) continue;
    const double chord = a.v + (b.s - a.s) / (c.s - a.s) * (c.v - a.v);
    worst = std::max(worst, b.v - chord);
  }
  return worst;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw InvalidInput("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> grid(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo * std::exp(step * static_cast<double>(i));
  grid.back() = hi;
  return grid;
}

}  // namespace entdepth
