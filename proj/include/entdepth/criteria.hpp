#pragma once

#include <span>
#include <string>
#include <vector>

#include "entdepth/bounds.hpp"
#include "entdepth/curve.hpp"
#include "entdepth/etamodel.hpp"

namespace entdepth {

// Entanglement-depth criterion boundary for one eta distribution. Points run
// from (0, 0) to (1, 1) in CSS-normalized coordinates; a measured state below
// the curve has at least depth + 1 mutually entangled particles.
struct CriterionCurve {
  int depth = 1;
  BoundKind bound_kind = BoundKind::separable;
  std::vector<CurvePoint> points;
  std::string eta_fingerprint;
  std::string mu_grid_description;

  double operator()(double s) const { return interpolate_linear(points, s); }
};

struct XiResult {
  double xi2 = 0.0;
  double sum_eta_sq = 0.0;             // (sum eta)^2
  double sum_eta2 = 0.0;               // sum eta^2
  double sum_eta2_jz2 = 0.0;           // sum eta^2 <j_z>^2
  double sum_eta_jz_sq = 0.0;          // (sum eta <j_z>)^2
};

// Squeezing parameter for asymmetric coupling evaluated on a product state
// with the given single-particle mean spins.
XiResult xi2_asym(std::span<const double> etas, std::span<const double> mean_jz);

// argmin over s in [0, 1] of bound(s) - kappa * s.
double inner_opt_s(const BlockBound& bound, double kappa);

// Lagrange-sweep point for one multiplier: each node minimizes its block
// contribution independently with kappa = 2 mu / eta.
CurvePoint curve_point(const EtaNodes& nodes, const BlockBound& bound, double mu);

// Per-particle Gamma = (dS_x)^2/N - mu <S_z>/N at the bound's optimum.
double curve_gamma(const EtaNodes& nodes, const BlockBound& bound, double mu);

// 400-point log grid over [1e-4, 1e3] * max eta.
std::vector<double> default_curve_mu_grid(const EtaNodes& nodes, std::size_t points = 400);

// Throws ConsistencyError if the assembled curve is not convex within 1e-9.
CriterionCurve criterion_curve(const EtaNodes& nodes, const BlockBound& bound,
                               std::span<const double> mu_grid, int threads = 1);

CriterionCurve criterion_curve(const EtaNodes& nodes, const BlockBound& bound);

struct CylinderAsymptotics {
  double slope_ratio = 0.0;   // asymmetric / symmetric separable slope as s -> 1
  double noise_ratio = 0.0;   // symmetric / asymmetric separable noise near s -> 0
  CurvePoint bottom_point;
};

CylinderAsymptotics cylinder_asymptotics(double nu, std::size_t nodes = 512);

// Per-particle raw coordinates (<S_z>/N, (dS_x)^2/N) of a normalized curve.
std::vector<CurvePoint> to_raw(const CriterionCurve& curve, const EtaNodes& nodes);

std::string to_csv(const CriterionCurve& curve, bool raw = false, const EtaNodes* nodes = nullptr);
CriterionCurve curve_from_csv(std::string_view text);

}  // namespace entdepth
