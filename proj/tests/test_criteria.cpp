#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "entdepth/criteria.hpp"
#include "entdepth/spincore.hpp"
#include "oracles.hpp"

using namespace entdepth;

namespace {

std::vector<double> interior_grid(double lo, double hi, int points) {
  std::vector<double> s(points);
  for (int i = 0; i < points; ++i) s[i] = lo + (hi - lo) * i / (points - 1);
  return s;
}

void split(const EtaNodes& nodes, std::vector<double>& etas, std::vector<double>& weights) {
  for (const auto& node : nodes.nodes()) {
    etas.push_back(node.eta);
    weights.push_back(node.weight);
  }
}

}  // namespace

TEST(Xi2, CssBaseline) {
  const std::vector<double> etas(5, 1.0), jz(5, 0.5);
  EXPECT_NEAR(xi2_asym(etas, jz).xi2, 1.0, 1e-15);
}

TEST(Xi2, SmallCouplingCounterexample) {
  const std::vector<double> etas{1, 1e-3, 1e-3}, jz{5e-4, 0.5, 0.5};
  const auto r = xi2_asym(etas, jz);
  EXPECT_NEAR(r.xi2, 0.334667, 1e-6);
  EXPECT_NEAR(r.xi2, (r.sum_eta_sq / r.sum_eta2) * (r.sum_eta2_jz2 / r.sum_eta_jz_sq), 1e-12);
  EXPECT_GE(r.xi2, 1.0 / 3);
}

TEST(Xi2, ApproachesOneOverN) {
  const double eps = 1e-6;
  std::vector<double> etas(100, eps), jz(100, 0.5);
  etas[0] = 1;
  jz[0] = eps / 2;
  const double xi2 = xi2_asym(etas, jz).xi2;
  EXPECT_GE(xi2, 0.01);
  EXPECT_LE(xi2, 0.01 + 1e-5);
}

TEST(Xi2, NeverBelowOneOverN) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(1e-4, 1.0);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + trial % 40;
    std::vector<double> etas(n), jz(n);
    for (int i = 0; i < n; ++i) {
      etas[i] = unit(rng);
      jz[i] = std::cos(angle(rng)) / 2;
    }
    try {
      const auto r = xi2_asym(etas, jz);
      EXPECT_GE(r.xi2, (1.0 / n) * (1 - 1e-12));
      EXPECT_NEAR(r.xi2, (r.sum_eta_sq / r.sum_eta2) * (r.sum_eta2_jz2 / r.sum_eta_jz_sq),
                  1e-12 * r.xi2);
    } catch (const InvalidInput&) {
    }
  }
}

TEST(Xi2, MatchesStateRoute) {
  // Product state -> expectations -> xi2 agrees with the algebraic inputs.
  const std::vector<double> etas{1.0, 0.6, 0.2};
  const std::vector<double> thetas{0.4, 1.2, 0.1};
  std::vector<double> jz;
  for (double t : thetas) jz.push_back(std::cos(t) / 2);
  const auto ops = build_ops(3, etas);
  const auto m = expectations(product_state(thetas), ops);
  double sum_eta = 0, sum_eta2 = 0;
  for (double e : etas) {
    sum_eta += e;
    sum_eta2 += e * e;
  }
  const double from_state = (m.var_sx / (sum_eta2 / 4)) / std::pow(m.mean_sz / (sum_eta / 2), 2);
  EXPECT_NEAR(xi2_asym(etas, jz).xi2, from_state, 1e-12);
}

TEST(Xi2, Errors) {
  EXPECT_THROW(xi2_asym(std::vector<double>{1, 1}, std::vector<double>{0.5}), InvalidInput);
  EXPECT_THROW(xi2_asym(std::vector<double>{1, 1}, std::vector<double>{0.5, -0.5}), InvalidInput);
  EXPECT_THROW(xi2_asym(std::vector<double>{1.5}, std::vector<double>{0.5}), InvalidInput);
  EXPECT_THROW(xi2_asym(std::vector<double>{1}, std::vector<double>{0.7}), InvalidInput);
}

TEST(InnerOpt, Examples) {
  EXPECT_NEAR(inner_opt_s(BlockBound::separable(), 0.6), 0.3, 1e-9);
  EXPECT_NEAR(inner_opt_s(BlockBound::pair(), 1.0), 1 / std::sqrt(2.0), 1e-9);
  EXPECT_EQ(inner_opt_s(BlockBound::pair(), 0.0), 0.0);
  EXPECT_EQ(inner_opt_s(BlockBound::separable(), 0.0), 0.0);
  EXPECT_EQ(inner_opt_s(BlockBound::separable(), 5.0), 1.0);
  EXPECT_THROW(inner_opt_s(BlockBound::separable(), -1.0), InvalidInput);
}

TEST(InnerOpt, PairClosedForm) {
  for (double kappa : {0.01, 0.2, 1.0, 3.0, 40.0}) {
    EXPECT_NEAR(inner_opt_s(BlockBound::pair(), kappa), kappa / std::sqrt(1 + kappa * kappa), 1e-9);
  }
}

TEST(CurvePointTest, Examples) {
  const auto single = nodes_from_list(std::vector<double>{1.0});
  const auto two = EtaNodes::from_weighted({{1.0, 0.5}, {0.5, 0.5}});
  const auto p = curve_point(two, BlockBound::separable(), 0.75);
  EXPECT_NEAR(p.s, 0.625 / 0.75, 1e-9);
  EXPECT_NEAR(p.v, 0.65, 1e-9);
  const auto q = curve_point(single, BlockBound::pair(), 0.5);
  EXPECT_NEAR(q.s, 1 / std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(q.v, 1 - 1 / std::sqrt(2.0), 1e-9);
}

TEST(CurvePointTest, MatchesClosedFormSweeps) {
  const auto nodes = cylinder_nodes({0.4}, 64);
  std::vector<double> etas, weights;
  split(nodes, etas, weights);
  for (double mu : log_grid(1e-4, 10, 37)) {
    const auto sep = curve_point(nodes, BlockBound::separable(), mu);
    const auto [s1, v1] = oracle::separable_point(etas, weights, mu);
    EXPECT_NEAR(sep.s, s1, 1e-9);
    EXPECT_NEAR(sep.v, v1, 1e-9);
    const auto pr = curve_point(nodes, BlockBound::pair(), mu);
    const auto [s2, v2] = oracle::pair_point(etas, weights, mu);
    EXPECT_NEAR(pr.s, s2, 1e-9);
    EXPECT_NEAR(pr.v, v2, 1e-9);
  }
}

TEST(CurvePointTest, GammaIsTheLagrangeValue) {
  const auto nodes = cylinder_nodes({0.5}, 32);
  for (double mu : {0.01, 0.1, 0.5}) {
    const auto p = curve_point(nodes, BlockBound::pair(), mu);
    const double raw_var = p.v * nodes.moment(2) / 4;
    const double raw_sz = p.s * nodes.moment(1) / 2;
    EXPECT_NEAR(curve_gamma(nodes, BlockBound::pair(), mu), raw_var - mu * raw_sz, 1e-12);
  }
}

TEST(CriterionCurveTest, SymmetricRecovery) {
  const auto nodes = nodes_from_list(std::vector<double>{1.0});
  const auto curve = criterion_curve(nodes, BlockBound::separable());
  EXPECT_EQ(curve.depth, 1);
  double worst = 0;
  for (const auto& p : curve.points) worst = std::max(worst, std::abs(p.v - p.s * p.s));
  EXPECT_LT(worst, 1e-12);
}

TEST(CriterionCurveTest, EqualNodesReproduceBound) {
  for (double eta : {1.0, 0.4}) {
    const auto nodes = nodes_from_list(std::vector<double>(7, eta));
    for (int n : {1, 2, 3, 4, 8}) {
      const auto bound = BlockBound::for_depth(n);
      const auto curve = criterion_curve(nodes, bound);
      for (const auto& p : curve.points) EXPECT_NEAR(p.v, bound(p.s), 1e-10) << n;
    }
  }
}

TEST(CriterionCurveTest, Invariants) {
  const auto nodes = cylinder_nodes({0.3}, 256);
  for (int n : {1, 2, 3, 4, 6}) {
    const auto curve = criterion_curve(nodes, BlockBound::for_depth(n));
    ASSERT_GE(curve.points.size(), 3u);
    EXPECT_EQ(curve.points.front().s, 0.0);
    EXPECT_EQ(curve.points.front().v, 0.0);
    EXPECT_EQ(curve.points.back().s, 1.0);
    EXPECT_EQ(curve.points.back().v, 1.0);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      EXPECT_GE(curve.points[i].s, curve.points[i - 1].s);
      EXPECT_GE(curve.points[i].v, curve.points[i - 1].v);
    }
    for (const auto& p : curve.points) EXPECT_LE(p.v, p.s + 1e-12);
    EXPECT_LE(max_convexity_violation(curve.points), 1e-9);
    EXPECT_EQ(curve.eta_fingerprint, nodes.fingerprint());
  }
}

TEST(CriterionCurveTest, SweepMonotoneInMu) {
  const auto nodes = cylinder_nodes({0.3}, 128);
  for (const auto& bound : {BlockBound::separable(), BlockBound::pair(), BlockBound::analytic(5)}) {
    CurvePoint previous{0, 0};
    for (double mu : default_curve_mu_grid(nodes)) {
      const auto p = curve_point(nodes, bound, mu);
      EXPECT_GE(p.s, previous.s - 1e-12);
      EXPECT_GE(p.v, previous.v - 1e-12);
      previous = p;
    }
  }
}

TEST(CriterionCurveTest, DepthOrdering) {
  const auto nodes = cylinder_nodes({0.3}, 256);
  std::vector<CriterionCurve> curves;
  for (int n : {1, 2, 5, 20}) curves.push_back(criterion_curve(nodes, BlockBound::for_depth(n)));
  for (double s : interior_grid(0.05, 0.95, 91)) {
    for (std::size_t k = 1; k < curves.size(); ++k) EXPECT_LT(curves[k](s), curves[k - 1](s)) << s;
  }
}

TEST(CriterionCurveTest, AsymmetryLowersBound) {
  const auto nodes = cylinder_nodes({0.3}, 256);
  const auto curve = criterion_curve(nodes, BlockBound::separable());
  double largest_gap = 0;
  for (double s : interior_grid(0.0, 1.0, 201)) {
    EXPECT_LE(curve(s), s * s + 1e-12);
    largest_gap = std::max(largest_gap, s * s - curve(s));
  }
  EXPECT_GT(largest_gap, 0.01);

  const auto two = nodes_from_list(std::vector<double>{1.0, 0.5});
  const auto curve2 = criterion_curve(two, BlockBound::pair());
  bool strict = false;
  for (double s : interior_grid(0.0, 1.0, 201)) {
    EXPECT_LE(curve2(s), v_pair(s) + 1e-9);
    strict = strict || curve2(s) < v_pair(s) - 1e-6;
  }
  EXPECT_TRUE(strict);
}

TEST(CriterionCurveTest, ThreadsDoNotChangeOutput) {
  const auto nodes = cylinder_nodes({0.3}, 128);
  const auto grid = default_curve_mu_grid(nodes);
  const auto bound = BlockBound::for_depth(4);
  EXPECT_EQ(to_csv(criterion_curve(nodes, bound, grid, 1)),
            to_csv(criterion_curve(nodes, bound, grid, 4)));
}

TEST(CriterionCurveTest, GridValidation) {
  const auto nodes = cylinder_nodes({0.3}, 16);
  EXPECT_THROW(criterion_curve(nodes, BlockBound::pair(), log_grid(1e-4, 1e3, 100)), InvalidInput);
  EXPECT_THROW(criterion_curve(nodes, BlockBound::pair(), log_grid(1e-2, 1e3, 400)), InvalidInput);
  EXPECT_THROW(criterion_curve(nodes, BlockBound::pair(), log_grid(1e-4, 1e2, 400)), InvalidInput);
}

TEST(CriterionCurveTest, CsvRoundTrip) {
  const auto nodes = cylinder_nodes({0.3}, 64);
  const auto curve = criterion_curve(nodes, BlockBound::for_depth(4));
  const auto text = to_csv(curve);
  EXPECT_NE(text.find("# depth=4\n"), std::string::npos);
  EXPECT_NE(text.find("# bound=numerical_even\n"), std::string::npos);
  EXPECT_NE(text.find("# fingerprint=" + nodes.fingerprint()), std::string::npos);
  EXPECT_NE(text.find("\ns_norm,v_norm\n"), std::string::npos);
  const auto back = curve_from_csv(text);
  EXPECT_EQ(back.depth, 4);
  EXPECT_EQ(back.bound_kind, BoundKind::numerical_even);
  EXPECT_EQ(back.eta_fingerprint, curve.eta_fingerprint);
  ASSERT_EQ(back.points.size(), curve.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    EXPECT_EQ(back.points[i].s, curve.points[i].s);
    EXPECT_EQ(back.points[i].v, curve.points[i].v);
  }
  EXPECT_EQ(to_csv(back), text);
}

TEST(CriterionCurveTest, RawExport) {
  const auto nodes = cylinder_nodes({0.3}, 64);
  const auto curve = criterion_curve(nodes, BlockBound::separable());
  const auto raw = to_raw(curve, nodes);
  EXPECT_NEAR(raw.back().s, nodes.moment(1) / 2, 1e-15);
  EXPECT_NEAR(raw.back().v, nodes.moment(2) / 4, 1e-15);
  EXPECT_THROW(to_csv(curve, true), InvalidInput);
  EXPECT_THROW(curve_from_csv(to_csv(curve, true, &nodes)), InvalidInput);
}

TEST(CriterionCurveTest, CsvErrors) {
  EXPECT_THROW(curve_from_csv("s_norm,v_norm\n0,0\n1,1\n"), InvalidInput);
  EXPECT_THROW(curve_from_csv("# depth=1\ns_norm,v_norm\n0,0\n0.5\n1,1\n"), InvalidInput);
  EXPECT_THROW(curve_from_csv("# depth=1\ns_norm,v_norm\n0.1,0\n1,1\n"), InvalidInput);
  EXPECT_THROW(curve_from_csv("# depth=0\n0,0\n1,1\n"), InvalidInput);
}

TEST(Cylinder, SlopeRatioAtSmallNu) {
  const auto r = cylinder_asymptotics(0.01);
  EXPECT_NEAR(r.slope_ratio, 2.0, 0.04);
}

TEST(Cylinder, NoiseRatioAtSmallNu) {
  const double nu = 0.05;
  const auto r = cylinder_asymptotics(nu);
  EXPECT_NEAR(r.noise_ratio, 1 / (2 * nu * nu), 20.0);
}

TEST(Cylinder, RatiosFollowQuadratureOracle) {
  // Slope ratio tends to eta_top E[eta]/E[eta^2], noise ratio to E[eta^2]/E[eta]^2.
  for (double nu : {0.05, 0.1, 0.2, 0.3}) {
    const double e1 = oracle::cylinder_moment(nu, 1);
    const double e2 = oracle::cylinder_moment(nu, 2);
    const auto r = cylinder_asymptotics(nu);
    EXPECT_NEAR(r.slope_ratio / (e1 / e2), 1.0, 0.01) << nu;
    EXPECT_NEAR(r.noise_ratio / (e2 / (e1 * e1)), 1.0, 0.01) << nu;
  }
}

TEST(Cylinder, RatiosRelaxTowardUniformCoupling) {
  // Both ratios fall toward one as the support narrows.
  double previous_slope = 3.0;
  double previous_noise = 1e9;
  for (double nu : {0.05, 0.1, 0.2, 0.3}) {
    const auto r = cylinder_asymptotics(nu);
    EXPECT_LT(r.slope_ratio, previous_slope);
    EXPECT_LT(r.noise_ratio, previous_noise);
    EXPECT_GT(r.slope_ratio, 1.0);
    EXPECT_GT(r.noise_ratio, 1.0);
    previous_slope = r.slope_ratio;
    previous_noise = r.noise_ratio;
  }
  const double e1 = oracle::cylinder_moment(1.0, 1);
  const double e2 = oracle::cylinder_moment(1.0, 2);
  EXPECT_LT(e1 / e2, 1.5);
  EXPECT_LT(e2 / (e1 * e1), 1.1);
}
