#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "entdepth/spincore.hpp"

namespace entdepth {

inline constexpr int kMaxBruteForceBlock = 8;

// Minimize Gamma = (dS_x)^2 - mu <S_z> over pure states of one block.
// Mixed states cannot do better: <S_z> is linear in the mixture weights and
// the variance of a mixture is at least the weighted mean of the variances,
// so Gamma(mixture) >= min over its pure components.
struct GammaProblem {
  int n = 2;
  std::vector<double> etas;
  double mu = 0.0;
  int restarts = 0;  // 0 = default: 50 for n <= 2, 200 otherwise
  std::uint64_t seed = 1;
};

// Block-CSS normalized optimum: s = <S_z>/(sum eta/2), v = (dS_x)^2/(sum eta^2/4).
struct FrontierPoint {
  double s_norm = 0.0;
  double v_norm = 0.0;
  double gamma = 0.0;
  BlockState state = coherent_spin_state(1);
  bool converged = false;
  int restart = -1;
};

// Gamma as a function of an unnormalized amplitude vector z = re + i im,
// packed as [re; im]. Scale- and phase-invariant.
class GammaObjective {
 public:
  GammaObjective(const WeightedSpinOps& ops, double mu) : ops_(&ops), mu_(mu) {}

  double value(const Eigen::VectorXd& params) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& params) const;

  // Same quantities on the unit sphere; the gradient there is tangent.
  double value(const VectorXc& psi) const;
  VectorXc sphere_gradient(const VectorXc& psi) const;

 private:
  const WeightedSpinOps* ops_;
  double mu_;
};

int default_restarts(int n);

FrontierPoint minimize_gamma(const GammaProblem& problem, int threads = 1);

// Exact route for the same problem: min over psi of Var(S_x) - mu <S_z> equals
// min over lambda of the ground energy of (S_x - lambda)^2 - mu S_z.
FrontierPoint spectral_gamma_minimum(std::span<const double> etas, double mu);

// Tight equal-coupling frontier of an n-block at normalized spin s, as the
// supremum over kappa of min_s'[v(s') - kappa s'] + kappa s.
double equal_eta_frontier(int n, double s);

std::vector<FrontierPoint> pair_frontier(double eta_ratio, std::span<const double> mu_grid,
                                         int restarts = 0, std::uint64_t seed = 1, int threads = 1);

struct EqualEtaTrial {
  std::vector<double> etas;
  double mu = 0.0;
  double s_norm = 0.0;
  double v_unequal = 0.0;
  double v_equal = 0.0;
  double deviation = 0.0;  // v_equal - v_unequal; > tolerance falsifies the claim
  bool pass = true;
};

struct EqualEtaReport {
  int n = 0;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  std::vector<EqualEtaTrial> trials;
  bool passed = true;
  double worst_deviation = 0.0;
};

EqualEtaReport verify_equal_eta(int n, int trials, std::uint64_t seed, int restarts = 0,
                                int threads = 1);

struct GradientCheckSummary {
  int n = 0;
  int points = 0;
  double max_relative_error = 0.0;
  bool passed = true;
};

// Analytic GammaObjective gradient against central differences (step 1e-6)
// at random unnormalized amplitude vectors.
GradientCheckSummary gradient_check(int n, int points, std::uint64_t seed, double tolerance = 1e-5);

std::string to_text(const EqualEtaReport& report);
std::string frontier_csv(std::span<const FrontierPoint> frontier);

}  // namespace entdepth
