#ifndef DPPCDF_SYNTHETIC_HPP
#define DPPCDF_SYNTHETIC_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "dppcdf/kernel.hpp"

namespace dppcdf {

/// Haar-distributed N x r orthonormal frame: QR of a Gaussian block with the
/// signs fixed so that diag(R) > 0. The first r columns of Q depend only on
/// the first r columns of the Gaussian matrix, so the N x N draw is skipped.
inline RealMatrix haar_frame(Index n, Index r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix g(n, r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < n; ++i) {
      g(i, j) = normal(rng);
    }
  }
  const Eigen::HouseholderQR<RealMatrix> qr(g);
  RealMatrix q = qr.householderQ() * RealMatrix::Identity(n, r);
  const RealMatrix &packed = qr.matrixQR();
  for (Index j = 0; j < r; ++j) {
    if (packed(j, j) < 0.0) {
      q.col(j) *= -1.0;
    }
  }
  return q;
}

/// K = sum_{i <= rank} lambda_i v_i v_i^T with lambda_i = 1 / sqrt(i) and a Haar frame v.
inline DenseKernel gen_synthetic_kernel(Index n, Index rank, std::uint64_t seed) {
  if (n < 1 || rank < 1 || rank > n) {
    throw InputError("synthetic kernel needs 1 <= rank <= n, got rank " + std::to_string(rank) + " for n " +
                     std::to_string(n));
  }
  const RealMatrix v = haar_frame(n, rank, seed);
  RealVector lambda(rank);
  for (Index i = 0; i < rank; ++i) {
    lambda(i) = 1.0 / std::sqrt(static_cast<double>(i + 1));
  }
  const RealMatrix scaled = v * lambda.cwiseSqrt().asDiagonal();
  RealMatrix k = scaled * scaled.transpose();
  k = 0.5 * (k + k.transpose()).eval();
  return DenseKernel(k);
}

// Built-in statistics; formulas use 1-based item indices.

inline LinearStatistic abs_cos_statistic(Index n) {
  RealVector v(n);
  for (Index i = 0; i < n; ++i) {
    v(i) = std::abs(std::cos(static_cast<double>(i + 1)));
  }
  return LinearStatistic(v);
}

inline LinearStatistic inverse_index_statistic(Index n) {
  RealVector v(n);
  for (Index i = 0; i < n; ++i) {
    v(i) = 1.0 / static_cast<double>(i + 1);
  }
  return LinearStatistic(v);
}

/// Indicator of a subset (0-based indices), so Lambda counts points inside it.
inline LinearStatistic indicator_statistic(Index n, std::span<const Index> subset) {
  if (n < 1) {
    throw InputError("statistic needs at least one item");
  }
  check_indices(subset, n);
  RealVector v = RealVector::Zero(n);
  for (const Index i : subset) {
    v(i) = 1.0;
  }
  return LinearStatistic(v);
}

inline LinearStatistic constant_statistic(Index n, double value = 1.0) {
  if (n < 1) {
    throw InputError("statistic needs at least one item");
  }
  return LinearStatistic(RealVector(RealVector::Constant(n, value)));
}

} // namespace dppcdf

#endif // DPPCDF_SYNTHETIC_HPP
