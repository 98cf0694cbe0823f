#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <vector>

#include "entdepth/error.hpp"

namespace entdepth {

using Complex = std::complex<double>;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

inline constexpr int kMaxBlockSize = 12;

// Pure state of an n-particle spin-1/2 block.
//
// Basis index layout: particle 0 is the most significant bit and a bit value
// of 0 means |up>. For n = 2 the order is |uu>, |ud>, |du>, |dd>.
class BlockState {
 public:
  BlockState(int n, VectorXc amps);

  int size() const { return n_; }
  const VectorXc& amps() const { return amps_; }

 private:
  int n_;
  VectorXc amps_;
};

// S_x, S_x^2 and S_z of a block with per-particle couplings, S = sum_i eta_i j_i.
struct WeightedSpinOps {
  int n = 0;
  std::vector<double> etas;
  MatrixXc sx;
  MatrixXc sx2;
  MatrixXc sz;

  Eigen::Index dim() const { return sz.rows(); }
};

struct SpinMoments {
  double mean_sz = 0.0;
  double var_sx = 0.0;
};

// J_z and J_x^2 restricted to the symmetric J = n/2 sector, basis m = n/2, ..., -n/2.
template <typename Scalar>
struct DickeOps {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int n = 0;
  Vector jz_diag;
  Matrix jx2;

  Eigen::Index dim() const { return jz_diag.size(); }
};

// prod_i (cos(theta_i/2)|up> + sin(theta_i/2)|down>), so <j_z> = cos(theta)/2.
BlockState product_state(std::span<const double> thetas);

BlockState coherent_spin_state(int n);

WeightedSpinOps build_ops(int n, std::span<const double> etas);

SpinMoments expectations(const BlockState& state, const WeightedSpinOps& ops);

// <psi|A|psi> for Hermitian A, real part only.
double expect(const VectorXc& psi, const MatrixXc& op);

inline void require_even_dicke_size(int n) {
  if (n < 2 || n > 2000 || n % 2 != 0) {
    throw InvalidInput("dicke_ops: n must be even with 2 <= n <= 2000");
  }
}

template <typename Scalar = double>
DickeOps<Scalar> dicke_ops(int n) {
  require_even_dicke_size(n);
  DickeOps<Scalar> ops;
  ops.n = n;
  const Eigen::Index dim = n + 1;
  const Scalar j = Scalar(n) / Scalar(2);
  const Scalar jj = j * (j + Scalar(1));
  ops.jz_diag.resize(dim);
  for (Eigen::Index k = 0; k < dim; ++k) ops.jz_diag(k) = j - Scalar(k);

  // J_x = (J+ + J-)/2, so J_x^2 = (J+^2 + J-^2 + J+J- + J-J+)/4.
  ops.jx2 = DickeOps<Scalar>::Matrix::Zero(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const Scalar m = ops.jz_diag(k);
    ops.jx2(k, k) = (jj - m * m) / Scalar(2);
    if (k + 2 < dim) {
      // <m-2|J-^2|m>
      using std::sqrt;
      const Scalar a = sqrt(jj - m * (m - Scalar(1)));
      const Scalar b = sqrt(jj - (m - Scalar(1)) * (m - Scalar(2)));
      ops.jx2(k + 2, k) = a * b / Scalar(4);
      ops.jx2(k, k + 2) = ops.jx2(k + 2, k);
    }
  }
  return ops;
}

}  // namespace entdepth
