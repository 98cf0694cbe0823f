#include "entdepth/bruteforce.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "entdepth/bounds.hpp"
#include "entdepth/csv.hpp"
#include "entdepth/eigensolve.hpp"
#include "entdepth/error.hpp"
#include "entdepth/parallel.hpp"

namespace entdepth {

namespace {

constexpr double kGradTol = 1e-9;
constexpr int kMaxIterations = 20000;
constexpr double kArmijo = 1e-4;

VectorXc unpack(const Eigen::VectorXd& params) {
  const Eigen::Index dim = params.size() / 2;
  VectorXc z(dim);
  for (Eigen::Index k = 0; k < dim; ++k) z(k) = Complex(params(k), params(dim + k));
  return z;
}

// Rotates the global phase so the first nonzero amplitude is real and positive.
void fix_phase(VectorXc& psi) {
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    if (std::abs(psi(k)) > 1e-12) {
      psi *= std::conj(psi(k)) / std::abs(psi(k));
      psi(k) = std::abs(psi(k));
      return;
    }
  }
}

double real_dot(const VectorXc& a, const VectorXc& b) { return a.dot(b).real(); }

struct LocalResult {
  VectorXc psi;
  double value = 0.0;
  bool converged = false;
};

// Riemannian gradient descent on the unit sphere with Barzilai-Borwein trial
// steps and Armijo backtracking; retraction by renormalization.
LocalResult descend(const GammaObjective& objective, VectorXc psi) {
  psi.normalize();
  double f = objective.value(psi);
  VectorXc g = objective.sphere_gradient(psi);
  double step = 0.1;
  VectorXc prev_psi;
  VectorXc prev_g;

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    const double gnorm2 = g.squaredNorm();
    if (std::sqrt(gnorm2) < kGradTol) return {psi, f, true};

    if (iter > 0) {
      const VectorXc ds = psi - prev_psi;
      const VectorXc dg = g - prev_g;
      const double sy = real_dot(ds, dg);
      if (sy > 0.0) step = std::clamp(ds.squaredNorm() / sy, 1e-6, 1e3);
    }

    // Rounding in f is ~1e-15 relative; without slack the line search would
    // reject every step once the predicted decrease drops below it.
    const double slack = 1e-14 * std::max(1.0, std::abs(f));
    bool accepted = false;
    for (int trial = 0; trial < 60; ++trial) {
      VectorXc candidate = (psi - step * g).normalized();
      const double fc = objective.value(candidate);
      if (fc <= f - kArmijo * step * gnorm2 + slack) {
        prev_psi = std::move(psi);
        prev_g = std::move(g);
        psi = std::move(candidate);
        f = fc;
        g = objective.sphere_gradient(psi);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return {psi, f, false};
  }
  return {psi, f, std::sqrt(g.squaredNorm()) < kGradTol};
}

FrontierPoint make_point(const WeightedSpinOps& ops, double mu, VectorXc psi) {
  fix_phase(psi);
  psi.normalize();
  BlockState state(ops.n, psi);
  const auto moments = expectations(state, ops);
  double sum_eta = 0.0;
  double sum_eta2 = 0.0;
  for (double eta : ops.etas) {
    sum_eta += eta;
    sum_eta2 += eta * eta;
  }
  FrontierPoint point;
  point.s_norm = moments.mean_sz / (0.5 * sum_eta);
  point.v_norm = moments.var_sx / (0.25 * sum_eta2);
  point.gamma = moments.var_sx - mu * moments.mean_sz;
  point.state = std::move(state);
  return point;
}

void validate(const GammaProblem& p) {
  if (p.n < 1 || p.n > kMaxBruteForceBlock) {
    throw InvalidInput("minimize_gamma: n must lie in [1, 8]");
  }
  if (static_cast<int>(p.etas.size()) != p.n) throw InvalidInput("minimize_gamma: need n etas");
  if (!(p.mu >= 0.0)) throw InvalidInput("minimize_gamma: mu must be non-negative");
  if (p.restarts < 0) throw InvalidInput("minimize_gamma: restarts must be >= 1");
}

}  // namespace

double GammaObjective::value(const VectorXc& psi) const {
  const double sx = expect(psi, ops_->sx);
  return expect(psi, ops_->sx2) - sx * sx - mu_ * expect(psi, ops_->sz);
}

VectorXc GammaObjective::sphere_gradient(const VectorXc& psi) const {
  const double sx = expect(psi, ops_->sx);
  const VectorXc b_psi = ops_->sx2 * psi - 2.0 * sx * (ops_->sx * psi) - mu_ * (ops_->sz * psi);
  const Complex overlap = psi.dot(b_psi);
  return 2.0 * (b_psi - overlap * psi);
}

double GammaObjective::value(const Eigen::VectorXd& params) const {
  const VectorXc z = unpack(params);
  return value(VectorXc(z / z.norm()));
}

Eigen::VectorXd GammaObjective::gradient(const Eigen::VectorXd& params) const {
  const VectorXc z = unpack(params);
  const double norm = z.norm();
  const VectorXc psi = z / norm;
  const double sx = expect(psi, ops_->sx);
  const VectorXc b_psi = ops_->sx2 * psi - 2.0 * sx * (ops_->sx * psi) - mu_ * (ops_->sz * psi);
  const double b_mean = psi.dot(b_psi).real();
  const VectorXc g = 2.0 / norm * (b_psi - b_mean * psi);
  Eigen::VectorXd out(params.size());
  out.head(z.size()) = g.real();
  out.tail(z.size()) = g.imag();
  return out;
}

int default_restarts(int n) { return n <= 2 ? 50 : 200; }

FrontierPoint minimize_gamma(const GammaProblem& problem, int threads) {
  validate(problem);
  const auto ops = build_ops(problem.n, problem.etas);
  const GammaObjective objective(ops, problem.mu);
  const int restarts = problem.restarts > 0 ? problem.restarts : default_restarts(problem.n);
  const Eigen::Index dim = ops.dim();

  std::vector<LocalResult> results(static_cast<std::size_t>(restarts));
  parallel_for(results.size(), threads, [&](std::size_t r) {
    std::seed_seq seq{static_cast<std::uint32_t>(problem.seed),
                      static_cast<std::uint32_t>(problem.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    VectorXc start(dim);
    for (Eigen::Index k = 0; k < dim; ++k) start(k) = Complex(normal(rng), normal(rng));
    results[r] = descend(objective, std::move(start));
  });

  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].value < results[best].value) best = r;
  }
  auto point = make_point(ops, problem.mu, results[best].psi);
  point.converged = results[best].converged;
  point.restart = static_cast<int>(best);
  return point;
}

FrontierPoint spectral_gamma_minimum(std::span<const double> etas, double mu) {
  const int n = static_cast<int>(etas.size());
  const auto ops = build_ops(n, etas);
  const MatrixXc base = ops.sx2 - mu * ops.sz;

  auto ground = [&](double lambda) {
    MatrixXc h = base - 2.0 * lambda * ops.sx;
    h.diagonal().array() += lambda * lambda;
    return smallest_eigenpair(h);
  };

  // E0(lambda) is even in lambda (a pi rotation about z flips S_x), so only
  // lambda >= 0 is scanned, then refined by golden section around the best
  // grid cell.
  double half_width = 0.0;
  for (double eta : etas) half_width += 0.5 * eta;
  constexpr int kGrid = 24;
  std::vector<double> energies(kGrid + 1);
  for (int i = 0; i <= kGrid; ++i) energies[i] = ground(half_width * i / kGrid).value;
  const int arg = static_cast<int>(std::min_element(energies.begin(), energies.end()) - energies.begin());
  double lo = half_width * std::max(arg - 1, 0) / kGrid;
  double hi = half_width * std::min(arg + 1, kGrid) / kGrid;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = ground(x1).value;
  double f2 = ground(x2).value;
  while (hi - lo > 1e-12 * std::max(1.0, half_width)) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = ground(x1).value;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = ground(x2).value;
    }
  }
  double lambda = 0.5 * (lo + hi);
  if (energies[arg] < ground(lambda).value) lambda = half_width * arg / kGrid;

  VectorXc psi = ground(lambda).vector;
  auto point = make_point(ops, mu, std::move(psi));
  point.converged = true;
  return point;
}

double equal_eta_frontier(int n, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("equal_eta_frontier: s must lie in [0, 1]");
  if (n == 1) return s * s;
  if (s == 0.0) return 0.0;
  if (s == 1.0) return 1.0;
  const std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  // min_s' [v(s') - kappa s'] = (4/n) min Gamma(mu = kappa/2) for unit couplings.
  auto dual = [&](double kappa) {
    const auto point = spectral_gamma_minimum(ones, 0.5 * kappa);
    return 4.0 / n * point.gamma + kappa * s;
  };
  // The dual is concave in kappa; bracket its maximum by doubling, then
  // golden-section search.
  double hi = 1.0;
  while (dual(2.0 * hi) > dual(hi) && hi < 1e8) hi *= 2.0;
  hi *= 2.0;
  double lo = 0.0;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = dual(x1);
  double f2 = dual(x2);
  for (int iter = 0; iter < 200 && hi - lo > 1e-10 * std::max(1.0, hi); ++iter) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = dual(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = dual(x2);
    }
  }
  return std::max(f1, f2);
}

std::vector<FrontierPoint> pair_frontier(double eta_ratio, std::span<const double> mu_grid,
                                         int restarts, std::uint64_t seed, int threads) {
  if (!(eta_ratio > 0.0 && eta_ratio <= 1.0)) {
    throw InvalidInput("pair_frontier: eta ratio must lie in (0, 1]");
  }
  std::vector<FrontierPoint> frontier;
  frontier.reserve(mu_grid.size());
  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    GammaProblem problem;
    problem.n = 2;
    problem.etas = {eta_ratio, 1.0};
    problem.mu = mu_grid[i];
    problem.restarts = restarts;
    problem.seed = seed + i;
    frontier.push_back(minimize_gamma(problem, threads));
  }
  return frontier;
}

EqualEtaReport verify_equal_eta(int n, int trials, std::uint64_t seed, int restarts, int threads) {
  if (n < 1 || n > kMaxBruteForceBlock) throw InvalidInput("verify_equal_eta: n must lie in [1, 8]");
  if (trials < 1) throw InvalidInput("verify_equal_eta: trials must be positive");

  EqualEtaReport report;
  report.n = n;
  report.seed = seed;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int t = 0; t < trials; ++t) {
    EqualEtaTrial trial;
    trial.etas.resize(static_cast<std::size_t>(n));
    for (auto& eta : trial.etas) eta = 0.05 + 0.95 * unit(rng);
    const double top = *std::max_element(trial.etas.begin(), trial.etas.end());
    trial.mu = top * std::pow(10.0, -2.0 + 2.5 * unit(rng));

    GammaProblem problem;
    problem.n = n;
    problem.etas = trial.etas;
    problem.mu = trial.mu;
    problem.restarts = restarts;
    problem.seed = seed * 1000003ull + static_cast<std::uint64_t>(t);
    const auto point = minimize_gamma(problem, threads);

    trial.s_norm = std::clamp(point.s_norm, 0.0, 1.0);
    trial.v_unequal = point.v_norm;
    trial.v_equal = equal_eta_frontier(n, trial.s_norm);
    trial.deviation = trial.v_equal - trial.v_unequal;
    trial.pass = trial.deviation <= report.tolerance;
    report.passed = report.passed && trial.pass;
    report.worst_deviation = t == 0 ? trial.deviation : std::max(report.worst_deviation, trial.deviation);
    report.trials.push_back(std::move(trial));
  }
  return report;
}

std::string to_text(const EqualEtaReport& report) {
  std::ostringstream out;
  out << "equal-coupling check: n=" << report.n << " trials=" << report.trials.size()
      << " seed=" << report.seed << " tolerance=" << csv::format17(report.tolerance) << '\n';
  for (std::size_t t = 0; t < report.trials.size(); ++t) {
    const auto& trial = report.trials[t];
    out << (trial.pass ? "PASS" : "FAIL") << " trial " << t << " etas=[";
    for (std::size_t i = 0; i < trial.etas.size(); ++i) {
      out << (i ? " " : "") << csv::format17(trial.etas[i]);
    }
    out << "] mu=" << csv::format17(trial.mu) << " s=" << csv::format17(trial.s_norm)
        << " v_unequal=" << csv::format17(trial.v_unequal)
        << " v_equal=" << csv::format17(trial.v_equal)
        << " deviation=" << csv::format17(trial.deviation) << '\n';
  }
  out << "worst_deviation=" << csv::format17(report.worst_deviation) << '\n';
  out << "RESULT " << (report.passed ? "PASS" : "FAIL") << '\n';
  return out.str();
}

std::string frontier_csv(std::span<const FrontierPoint> frontier) {
  std::string out = "s_norm,v_norm,gamma\n";
  for (const auto& p : frontier) {
    out += csv::format17(p.s_norm) + ',' + csv::format17(p.v_norm) + ',' + csv::format17(p.gamma) + '\n';
  }
  return out;
}

GradientCheckSummary gradient_check(int n, int points, std::uint64_t seed, double tolerance) {
  GradientCheckSummary summary;
  summary.n = n;
  summary.points = points;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(n), 0x67u};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  constexpr double h = 1e-6;

  for (int p = 0; p < points; ++p) {
    std::vector<double> etas(static_cast<std::size_t>(n));
    for (auto& eta : etas) eta = 0.05 + 0.95 * unit(rng);
    const auto ops = build_ops(n, etas);
    const GammaObjective objective(ops, 2.0 * unit(rng));
    Eigen::VectorXd x(2 * ops.dim());
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = normal(rng);

    const Eigen::VectorXd analytic = objective.gradient(x);
    Eigen::VectorXd numeric(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      Eigen::VectorXd up = x;
      Eigen::VectorXd down = x;
      up(k) += h;
      down(k) -= h;
      numeric(k) = (objective.value(up) - objective.value(down)) / (2.0 * h);
    }
    const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
    summary.max_relative_error = std::max(summary.max_relative_error, (analytic - numeric).norm() / scale);
  }
  summary.passed = summary.max_relative_error < tolerance;
  return summary;
}

}  // namespace entdepth
