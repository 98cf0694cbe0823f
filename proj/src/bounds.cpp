#include "entdepth/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "entdepth/csv.hpp"
#include "entdepth/eigensolve.hpp"
#include "entdepth/spincore.hpp"

namespace entdepth {

namespace {

constexpr double kDomainSlack = 1e-12;

double clamp_unit(double s, const char* where) {
  if (!(s >= -kDomainSlack && s <= 1.0 + kDomainSlack)) {
    throw InvalidInput(std::string(where) + ": s must lie in [0, 1], got " + csv::format17(s));
  }
  return std::clamp(s, 0.0, 1.0);
}

DickeGroundPoint ground_point(const DickeOps<double>& ops, double mu_prime) {
  const Eigen::Index dim = ops.dim();
  Eigenpair<double> best;
  Eigen::Index best_sector = -1;
  // J_x^2 - mu' J_z only couples m to m +- 2, so each parity sector is
  // tridiagonal. Taking the ground state from a single sector pins <J_x> = 0.
  for (Eigen::Index sector = 0; sector < 2 && sector < dim; ++sector) {
    const Eigen::Index size = (dim - sector + 1) / 2;
    Eigen::VectorXd diag(size);
    Eigen::VectorXd sub(std::max<Eigen::Index>(size - 1, 0));
    for (Eigen::Index i = 0; i < size; ++i) {
      const Eigen::Index k = sector + 2 * i;
      diag(i) = ops.jx2(k, k) - mu_prime * ops.jz_diag(k);
      if (i + 1 < size) sub(i) = ops.jx2(k, k + 2);
    }
    auto pair = smallest_eigenpair_tridiagonal<double>(diag, sub);
    if (best_sector < 0 || pair.value < best.value) {
      best = std::move(pair);
      best_sector = sector;
    }
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index i = 0; i < best.vector.size(); ++i) x(best_sector + 2 * i) = best.vector(i);

  DickeGroundPoint point;
  point.energy = best.value;
  point.residual = best.residual;
  point.mean_jz = x.dot(ops.jz_diag.cwiseProduct(x));
  point.mean_jx2 = x.dot(ops.jx2 * x);
  const double half_n = 0.5 * ops.n;
  point.s = point.mean_jz / half_n;
  point.v = point.mean_jx2 / (0.5 * half_n);
  return point;
}

}  // namespace

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::separable: return "separable";
    case BoundKind::pair: return "pair";
    case BoundKind::analytic: return "analytic";
    case BoundKind::numerical_even: return "numerical_even";
  }
  return "unknown";
}

BoundKind bound_kind_from_string(const std::string& name) {
  if (name == "separable") return BoundKind::separable;
  if (name == "pair") return BoundKind::pair;
  if (name == "analytic") return BoundKind::analytic;
  if (name == "numerical_even" || name == "numerical") return BoundKind::numerical_even;
  throw InvalidInput("unknown bound kind '" + name + "'");
}

std::vector<double> default_bound_mu_grid() { return log_grid(1e-3, 1e3, 400); }

DickeGroundPoint dicke_ground_point(int n, double mu_prime) {
  return ground_point(dicke_ops<double>(n), mu_prime);
}

BlockBound BlockBound::separable() { return BlockBound(BoundKind::separable, 1); }

BlockBound BlockBound::pair() { return BlockBound(BoundKind::pair, 2); }

BlockBound BlockBound::analytic(int n) {
  if (n < 2) throw InvalidInput("analytic bound needs n >= 2");
  return BlockBound(BoundKind::analytic, n);
}

BlockBound BlockBound::numerical_even(int n, std::span<const double> mu_grid) {
  if (n % 2 != 0) throw InvalidInput("numerical bound is only available for even n");
  if (mu_grid.size() < 2) throw InvalidInput("numerical bound: mu' grid needs >= 2 points");
  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    if (!(mu_grid[i] > 0.0) || (i > 0 && !(mu_grid[i] > mu_grid[i - 1]))) {
      throw InvalidInput("numerical bound: mu' grid must be positive and strictly increasing");
    }
  }
  if (mu_grid.front() > 1e-3 * (1 + 1e-12) || mu_grid.back() < 1e3 * (1 - 1e-12)) {
    throw InvalidInput("numerical bound: mu' grid must cover [1e-3, 1e3]");
  }

  auto ops = std::make_shared<const DickeOps<double>>(dicke_ops<double>(n));
  std::vector<CurvePoint> table;
  table.reserve(mu_grid.size() + 2);
  table.push_back({0.0, 0.0});
  for (double mu : mu_grid) {
    const auto point = ground_point(*ops, mu);
    table.push_back({std::clamp(point.s, 0.0, 1.0), std::clamp(point.v, 0.0, 1.0)});
  }
  table.push_back({1.0, 1.0});

  BlockBound bound(BoundKind::numerical_even, n);
  bound.table_ = make_monotone(std::move(table));
  bound.dicke_ = std::move(ops);
  return bound;
}

BlockBound BlockBound::for_depth(int n, bool prefer_numerical) {
  if (n < 1) throw InvalidInput("depth must be >= 1");
  if (n == 1) return separable();
  if (n == 2) return pair();
  if (n % 2 == 0 && prefer_numerical) return numerical_even(n, default_bound_mu_grid());
  return analytic(n);
}

double BlockBound::operator()(double s) const {
  s = clamp_unit(s, "BlockBound");
  switch (kind_) {
    case BoundKind::separable: return v_separable(s);
    case BoundKind::pair: return v_pair(s);
    case BoundKind::analytic: return v_analytic(n_, s);
    case BoundKind::numerical_even: return numerical_value(s);
  }
  return 0.0;
}

double BlockBound::numerical_value(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  // s grows monotonically with mu' along the ground-state family; bisect in
  // log mu' for the member with the requested s.
  double lo = -60.0;
  double hi = 60.0;
  CurvePoint below{0.0, 0.0};
  CurvePoint above{1.0, 1.0};
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const auto p = ground_point(*dicke_, std::exp(mid));
    if (p.s == s) return std::clamp(p.v, 0.0, 1.0);
    if (p.s < s) {
      lo = mid;
      below = {p.s, p.v};
    } else {
      hi = mid;
      above = {p.s, p.v};
    }
  }
  // A jump in s along the family is bridged by its chord, i.e. by mixing
  // the two ground states.
  const double t = (s - below.s) / (above.s - below.s);
  return std::clamp(below.v + t * (above.v - below.v), 0.0, 1.0);
}

CurvePoint BlockBound::minimize(double kappa) const {
  if (!(kappa >= 0.0)) throw InvalidInput("BlockBound::minimize: kappa must be non-negative");
  if (kappa == 0.0) return {0.0, 0.0};

  if (kind_ == BoundKind::numerical_even) {
    // v - kappa s = (4/n)(<J_x^2> - (kappa/2) <J_z>) on the Dicke family.
    const auto p = ground_point(*dicke_, 0.5 * kappa);
    return {std::clamp(p.s, 0.0, 1.0), std::clamp(p.v, 0.0, 1.0)};
  }

  if (slope(1.0) <= kappa) return {1.0, 1.0};
  // Comparing objective values stalls near sqrt(eps) in s, so bisect on the
  // slope instead.
  double lo = 0.0;
  double hi = 1.0;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (slope(mid) < kappa) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double s = 0.5 * (lo + hi);
  return {s, (*this)(s)};
}

double BlockBound::slope(double s) const {
  s = clamp_unit(s, "BlockBound");
  switch (kind_) {
    case BoundKind::separable: return 2.0 * s;
    case BoundKind::pair: return s / std::sqrt(1.0 - s * s);
    case BoundKind::analytic: return v_analytic_slope(n_, s);
    case BoundKind::numerical_even: {
      auto it = std::upper_bound(table_.begin(), table_.end(), s,
                                 [](double x, const CurvePoint& p) { return x < p.s; });
      if (it == table_.end()) --it;
      if (it == table_.begin()) ++it;
      const auto& a = *(it - 1);
      return (it->v - a.v) / (it->s - a.s);
    }
  }
  return 0.0;
}

std::string to_csv(const BlockBound& bound) {
  std::string out = "# bound=" + to_string(bound.kind()) + "\n# n=" +
                    std::to_string(bound.block_size()) + "\ns,v\n";
  auto emit = [&out](double s, double v) {
    out += csv::format17(s);
    out += ',';
    out += csv::format17(v);
    out += '\n';
  };
  if (bound.kind() == BoundKind::numerical_even) {
    for (const auto& p : bound.table()) emit(p.s, p.v);
  } else {
    for (int i = 0; i <= 200; ++i) {
      const double s = i / 200.0;
      emit(s, bound(s));
    }
  }
  return out;
}

}  // namespace entdepth
