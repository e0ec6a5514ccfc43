#ifndef DPPCDF_LINALG_HPP
#define DPPCDF_LINALG_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dppcdf/error.hpp"

namespace dppcdf {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Subset = std::vector<Index>;

/// Determinant stored as log-magnitude and unit phase so that products of
/// thousands of pivots neither overflow nor underflow.
struct LogDet {
  double log_abs = 0.0; // -inf for a singular matrix
  Complex phase{1.0, 0.0};

  bool is_zero() const { return log_abs == -std::numeric_limits<double>::infinity(); }

  Complex value() const {
    if (is_zero()) {
      return {0.0, 0.0};
    }
    return phase * std::exp(log_abs);
  }
};

/// Pivoted LU with the diagonal accumulated in log space.
template <typename Derived>
LogDet log_determinant(const Eigen::MatrixBase<Derived> &m) {
  using Plain = typename Derived::PlainObject;
  if (m.rows() != m.cols()) {
    throw InputError("determinant of a non-square matrix");
  }
  LogDet out;
  if (m.rows() == 0) {
    return out;
  }
  const Eigen::PartialPivLU<Plain> lu(m);
  const auto &packed = lu.matrixLU();
  out.phase = Complex(static_cast<double>(lu.permutationP().determinant()), 0.0);
  for (Index i = 0; i < packed.rows(); ++i) {
    const Complex pivot(packed(i, i));
    const double magnitude = std::abs(pivot);
    if (magnitude == 0.0 || !std::isfinite(magnitude)) {
      if (magnitude == 0.0) {
        out.log_abs = -std::numeric_limits<double>::infinity();
        out.phase = {0.0, 0.0};
        return out;
      }
      throw InputError("non-finite pivot in determinant");
    }
    out.log_abs += std::log(magnitude);
    out.phase *= pivot / magnitude;
    if ((i & 63) == 63) {
      out.phase /= std::abs(out.phase);
    }
  }
  out.phase /= std::abs(out.phase);
  return out;
}

template <typename Derived>
Complex determinant(const Eigen::MatrixBase<Derived> &m) {
  return log_determinant(m).value();
}

/// exp(z) - 1 without cancellation for small |z|.
inline Complex complex_expm1(Complex z) {
  const double x = z.real();
  const double y = z.imag();
  if (y == 0.0) {
    return {std::expm1(x), 0.0};
  }
  const double half_sin = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * half_sin * half_sin, std::exp(x) * std::sin(y)};
}

template <typename Derived>
double max_abs_entry(const Eigen::MatrixBase<Derived> &m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Hermitian to a tolerance relative to the largest entry magnitude.
template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived> &m, double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) {
    return false;
  }
  const double scale = max_abs_entry(m);
  if (scale == 0.0) {
    return true;
  }
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

inline bool is_real(const ComplexMatrix &m) {
  return m.size() == 0 || m.imag().cwiseAbs().maxCoeff() == 0.0;
}

inline void check_indices(std::span<const Index> subset, Index n) {
  for (const Index i : subset) {
    if (i < 0 || i >= n) {
      throw InputError("index " + std::to_string(i) + " out of range [0, " + std::to_string(n) + ")");
    }
  }
}

template <typename Derived>
typename Derived::PlainObject principal_submatrix(const Eigen::MatrixBase<Derived> &m,
                                                  std::span<const Index> subset) {
  const auto k = static_cast<Index>(subset.size());
  typename Derived::PlainObject out(k, k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      out(a, b) = m(subset[a], subset[b]);
    }
  }
  return out;
}

/// Items of a bitmask subset of a ground set of at most 64 items.
inline Subset mask_to_subset(std::uint64_t mask) {
  Subset out;
  for (Index i = 0; mask != 0; ++i, mask >>= 1) {
    if (mask & 1u) {
      out.push_back(i);
    }
  }
  return out;
}

/// Householder QR of a tall matrix, returning the thin orthonormal factor.
template <typename Matrix>
Matrix thin_q(const Matrix &a) {
  const Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

} // namespace dppcdf

#endif // DPPCDF_LINALG_HPP
