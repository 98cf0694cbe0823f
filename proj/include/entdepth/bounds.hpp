#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "entdepth/curve.hpp"
#include "entdepth/error.hpp"
#include "entdepth/spincore.hpp"

namespace entdepth {

// Normalized variance lower bounds v_n(s) for one block of n particles with
// equal couplings. s = <S_z>/<S_z>_CSS, v = (dS_x)^2/(dS_x)^2_CSS, both in [0, 1].

template <typename Scalar>
Scalar v_separable(Scalar s) {
  return s * s;
}

// Tight bound for entangled pairs.
template <typename Scalar>
Scalar v_pair(Scalar s) {
  using std::sqrt;
  return Scalar(1) - sqrt(Scalar(1) - s * s);
}

// Closed-form n-particle bound; valid for every n >= 2 but not tight.
template <typename Scalar>
Scalar v_analytic(int n, Scalar s) {
  using std::sqrt;
  const Scalar s2 = s * s;
  const Scalar b = Scalar(1) + Scalar(n) / Scalar(2) * (Scalar(1) - s2);
  // b - sqrt(b^2 - s^2) rewritten to avoid cancellation for small s.
  return s2 / (b + sqrt(b * b - s2));
}

template <typename Scalar>
Scalar v_analytic_slope(int n, Scalar s) {
  using std::sqrt;
  const Scalar b = Scalar(1) + Scalar(n) / Scalar(2) * (Scalar(1) - s * s);
  const Scalar db = -Scalar(n) * s;
  return db - (b * db - s) / sqrt(b * b - s * s);
}

enum class BoundKind { separable, pair, analytic, numerical_even };

std::string to_string(BoundKind kind);
BoundKind bound_kind_from_string(const std::string& name);

// Default mu' grid for the even-n tight bound.
std::vector<double> default_bound_mu_grid();

class BlockBound {
 public:
  static BlockBound separable();
  static BlockBound pair();
  static BlockBound analytic(int n);
  // Tight bound for even n from ground states of J_x^2 - mu' J_z in the
  // J = n/2 sector. The table keeps one row per grid point for export;
  // evaluation and minimization solve the ground-state problem directly.
  static BlockBound numerical_even(int n, std::span<const double> mu_grid);

  // Depth hypothesis n -> bound: 1 separable, 2 pair, even n >= 4 numerical
  // (or analytic on request), odd n >= 3 analytic.
  static BlockBound for_depth(int n, bool prefer_numerical = true);

  BoundKind kind() const { return kind_; }
  int block_size() const { return n_; }
  std::span<const CurvePoint> table() const { return table_; }

  double operator()(double s) const;

  // argmin over s of v(s) - kappa s, with v at that point.
  CurvePoint minimize(double kappa) const;

  // dv/ds on the open interval (0, 1); for tables, the slope of the segment
  // containing s.
  double slope(double s) const;

 private:
  BlockBound(BoundKind kind, int n) : kind_(kind), n_(n) {}
  BoundKind kind_;
  int n_;
  std::vector<CurvePoint> table_;
  std::shared_ptr<const DickeOps<double>> dicke_;

  double numerical_value(double s) const;
};

// (s, v) of the J_x^2 - mu' J_z ground state, plus its energy and residual.
struct DickeGroundPoint {
  double s = 0.0;
  double v = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  double mean_jx2 = 0.0;
  double mean_jz = 0.0;
};

DickeGroundPoint dicke_ground_point(int n, double mu_prime);

std::string to_csv(const BlockBound& bound);

}  // namespace entdepth
