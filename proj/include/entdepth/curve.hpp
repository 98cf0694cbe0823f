#pragma once

#include <span>
#include <vector>

namespace entdepth {

// One (normalized mean spin, normalized variance) sample.
struct CurvePoint {
  double s = 0.0;
  double v = 0.0;
};

// Piecewise-linear interpolation through points sorted by s. Points sharing an
// s value are resolved by taking the lowest v. Throws InvalidInput when s is
// outside the covered range.
double interpolate_linear(std::span<const CurvePoint> points, double s);

// Sorts by s, drops exact-duplicate abscissae (keeping the lower v) and
// enforces v to be non-decreasing.
std::vector<CurvePoint> make_monotone(std::vector<CurvePoint> points);

// Largest amount by which an interior point rises above the chord between
// its neighbours; <= 0 for a convex polyline.
double max_convexity_violation(std::span<const CurvePoint> points);

// n values log-spaced from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace entdepth
