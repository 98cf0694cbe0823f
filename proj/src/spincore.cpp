#include "entdepth/spincore.hpp"

#include <cmath>
#include <string>

namespace entdepth {

namespace {

void require_block_size(int n, const char* where) {
  if (n < 1 || n > kMaxBlockSize) {
    throw InvalidInput(std::string(where) + ": block size must be in [1, " +
                       std::to_string(kMaxBlockSize) + "], got " + std::to_string(n));
  }
}

}  // namespace

BlockState::BlockState(int n, VectorXc amps) : n_(n), amps_(std::move(amps)) {
  require_block_size(n, "BlockState");
  if (amps_.size() != (Eigen::Index{1} << n)) {
    throw InvalidInput("BlockState: amplitude count must be 2^n");
  }
  if (std::abs(amps_.squaredNorm() - 1.0) > 1e-12) {
    throw InvalidInput("BlockState: amplitudes are not normalized");
  }
}

BlockState product_state(std::span<const double> thetas) {
  const int n = static_cast<int>(thetas.size());
  require_block_size(n, "product_state");
  VectorXc amps = VectorXc::Ones(1);
  for (double theta : thetas) {
    Eigen::Vector2cd single(std::cos(theta / 2.0), std::sin(theta / 2.0));
    VectorXc next(amps.size() * 2);
    for (Eigen::Index k = 0; k < amps.size(); ++k) {
      next(2 * k) = amps(k) * single(0);
      next(2 * k + 1) = amps(k) * single(1);
    }
    amps = std::move(next);
  }
  amps.normalize();
  return BlockState(n, std::move(amps));
}

BlockState coherent_spin_state(int n) {
  require_block_size(n, "coherent_spin_state");
  VectorXc amps = VectorXc::Zero(Eigen::Index{1} << n);
  amps(0) = 1.0;
  return BlockState(n, std::move(amps));
}

WeightedSpinOps build_ops(int n, std::span<const double> etas) {
  require_block_size(n, "build_ops");
  if (static_cast<int>(etas.size()) != n) {
    throw InvalidInput("build_ops: need exactly one eta per particle");
  }
  for (double eta : etas) {
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidInput("build_ops: eta must lie in (0, 1]");
  }

  const Eigen::Index dim = Eigen::Index{1} << n;
  WeightedSpinOps ops;
  ops.n = n;
  ops.etas.assign(etas.begin(), etas.end());
  ops.sx = MatrixXc::Zero(dim, dim);
  ops.sz = MatrixXc::Zero(dim, dim);

  for (int i = 0; i < n; ++i) {
    const Eigen::Index bit = Eigen::Index{1} << (n - 1 - i);
    const double half_eta = 0.5 * etas[i];
    for (Eigen::Index b = 0; b < dim; ++b) {
      // sigma_x flips the particle; sigma_z is +1 on |up> (bit clear).
      ops.sx(b ^ bit, b) += half_eta;
      ops.sz(b, b) += (b & bit) ? -half_eta : half_eta;
    }
  }
  ops.sx2 = ops.sx * ops.sx;
  return ops;
}

double expect(const VectorXc& psi, const MatrixXc& op) {
  return psi.dot(op * psi).real();
}

SpinMoments expectations(const BlockState& state, const WeightedSpinOps& ops) {
  if (state.amps().size() != ops.dim()) {
    throw InvalidInput("expectations: state and operator dimensions differ");
  }
  const VectorXc& psi = state.amps();
  const double mean_sx = expect(psi, ops.sx);
  double var = expect(psi, ops.sx2) - mean_sx * mean_sx;
  if (var < 0.0 && var > -1e-12) var = 0.0;
  return {expect(psi, ops.sz), var};
}

}  // namespace entdepth
